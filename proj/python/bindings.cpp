// Python surface of the library. Structured values cross the boundary as JSON
// text and are decoded on the Python side.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "neyman/bounds.hpp"
#include "neyman/config.hpp"
#include "neyman/core.hpp"
#include "neyman/data.hpp"
#include "neyman/error.hpp"
#include "neyman/montecarlo.hpp"
#include "neyman/oracle.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace neyman;

namespace {

DesignConfig feasible(const std::string& design) {
    const DesignConfig c = design_from_json(json::parse(design));
    const FeasibilityReport r = check_config(c);
    if (!r.ok) fail(ErrorCode::InfeasibleConfig, "infeasible design: " + r.violation);
    return c;
}

std::vector<double> as_vector(const py::iterable& values) {
    std::vector<double> out;
    for (const py::handle& v : values) out.push_back(v.cast<double>());
    return out;
}

class Experiment {
public:
    explicit Experiment(const std::string& design) : state_(init_design(feasible(design)).state) {}

    bool complete() const { return state_.complete(); }
    std::string pending() const { return state_.complete() ? "null" : to_json(state_.pending()).dump(); }
    std::string state() const { return to_json(state_).dump(); }

    std::string submit(const py::iterable& treated, const py::iterable& control) {
        DesignState next = state_;
        const std::optional<StageAllocation> a = advance(next, as_vector(treated), as_vector(control));
        state_ = std::move(next);
        return a ? to_json(*a).dump() : "null";
    }

    std::string result() const {
        const Finalized f = finalize(state_);
        return json{{"t1", f.totals.t1}, {"t0", f.totals.t0}, {"tau_hat", f.tau_hat}}.dump();
    }

private:
    DesignState state_;
};

BatchOptions options(unsigned workers) {
    BatchOptions o;
    o.workers = workers;
    return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    static py::exception<Error> error(m, "NeymanError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetObject(error.ptr(), py::make_tuple(std::string(to_string(e.code())), e.what()).ptr());
        } catch (const json::exception& e) {
            PyErr_SetObject(error.ptr(), py::make_tuple("InvalidArgument", e.what()).ptr());
        }
    });

    m.def("competitive_ratio", [](std::int64_t t1, std::int64_t t0, double s1, double s0, std::int64_t T) {
        return competitive_ratio({t1, t0}, {s1, s0}, T);
    });
    m.def("clairvoyant_allocation", [](double s1, double s0, std::int64_t T) {
        const RealAllocation a = clairvoyant_allocation({s1, s0}, T);
        return std::pair(a.t1, a.t0);
    });
    m.def("rounded_clairvoyant_allocation", [](double s1, double s0, std::int64_t T) {
        const Allocation a = rounded_clairvoyant_allocation({s1, s0}, T);
        return std::pair(a.t1, a.t0);
    });
    m.def("exhaustive_best_allocation", [](double s1, double s0, std::int64_t T) {
        const Allocation a = exhaustive_best_allocation({s1, s0}, T);
        return std::pair(a.t1, a.t0);
    });
    m.def("half_half_ratio", &half_half_ratio);

    m.def("thm3_betas", [](int M) { return thm3_schedule(M).betas; });
    m.def("clicks_betas", [](int M) { return clicks_schedule(M).betas; });
    m.def("check_design", [](const std::string& design) {
        const FeasibilityReport r = check_config(design_from_json(json::parse(design)));
        return json{{"ok", r.ok}, {"link", r.link}, {"violation", r.violation}}.dump();
    });

    m.def("thm2_bound", [](std::int64_t T, double eps, double k1, double k0) {
        return to_json(thm2_bound(T, eps, k1, k0)).dump();
    });
    m.def("thm3_bound", [](int M, std::int64_t T, double eps, double k1, double k0) {
        return to_json(thm3_bound(M, T, eps, k1, k0)).dump();
    });
    m.def("thm4_bound", &thm4_bound);
    m.def("cor_bound", [](int which, int M, std::int64_t T, double C) {
        if (which != 1 && which != 2) fail(ErrorCode::InvalidArgument, "which must be 1 (cor1) or 2 (cor2)");
        return to_json(cor_bounds(which == 1 ? BoundSource::Cor1 : BoundSource::Cor2, M, T, C)).dump();
    });
    m.def("lower_bound_instance", [](std::int64_t T) {
        const LowerBoundInstance inst = lower_bound_instance(T);
        return json{{"eps", inst.eps}, {"nu", to_json(inst.nu)}, {"nu_prime", to_json(inst.nu_prime)}}.dump();
    });

    py::class_<Experiment>(m, "Experiment")
        .def(py::init<const std::string&>())
        .def_property_readonly("complete", &Experiment::complete)
        .def("pending", &Experiment::pending)
        .def("state", &Experiment::state)
        .def("submit", &Experiment::submit)
        .def("result", &Experiment::result);

    m.def(
        "simulate",
        [](const std::string& design, const std::string& population, std::int64_t n, std::uint64_t seed,
           unsigned workers, bool samples) {
            const DesignConfig c = feasible(design);
            const Population pop = population_from_json(json::parse(population));
            py::gil_scoped_release release;
            return to_json(run_batch(c, pop, seed, n, options(workers)), samples).dump();
        },
        py::arg("design"), py::arg("population"), py::arg("n"), py::arg("seed") = 0, py::arg("workers") = 0,
        py::arg("include_samples") = false);
    m.def(
        "compare",
        [](const std::string& designs, const std::string& population, std::int64_t n, std::uint64_t seed,
           unsigned workers) {
            std::vector<DesignConfig> cs;
            for (const json& d : json::parse(designs)) cs.push_back(feasible(d.dump()));
            const Population pop = population_from_json(json::parse(population));
            py::gil_scoped_release release;
            json out = json::array();
            for (const BatchSummary& s : compare_designs(cs, pop, seed, n, options(workers))) out.push_back(to_json(s));
            return out.dump();
        },
        py::arg("designs"), py::arg("population"), py::arg("n"), py::arg("seed") = 0, py::arg("workers") = 0);

    m.def("lemma_ids", &lemma_ids);
    m.def(
        "lemma_check",
        [](const std::string& id, std::int64_t points) {
            GridSpec grid = default_grid(id);
            if (points > 0) grid.points = points;
            return to_json(lemma_grid_check(id, grid)).dump();
        },
        py::arg("lemma"), py::arg("points") = 0);

    m.def("ingest_csv", [](const std::string& path) { return to_json(ingest_csv_file(path)).dump(); });
    m.def("synthetic_table1", [](std::int64_t n, std::uint64_t seed) { return to_json(synthetic_table1(n, seed)).dump(); },
          py::arg("n") = kTable1ArmSize, py::arg("seed") = 0);
}
