// Acceptance suite: one PASS/FAIL line per primary criterion.
// Exit status is 0 once every criterion has been evaluated; with --strict it is
// 1 when any criterion failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "neyman/bounds.hpp"
#include "neyman/config.hpp"
#include "neyman/core.hpp"
#include "neyman/data.hpp"
#include "neyman/montecarlo.hpp"
#include "neyman/oracle.hpp"
#include "neyman/population.hpp"

using namespace neyman;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[200];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Verdict half_half_benchmark() {
    Verdict v;
    const GridSpec grid{1e-6, 1e6, 10000, GridScale::Log};
    double worst = 0.0;
    for (double rho : grid.values()) {
        const double r = half_half_ratio(rho);
        worst = std::max(worst, r);
        // Same quantity from the allocation definitions: (T/2, T/2) against sigma = (rho, 1).
        const double direct = competitive_ratio({500000, 500000}, {rho, 1.0}, 1000000);
        v.require(std::abs(direct - r) <= 1e-9 * r, fmt("definition mismatch at rho=%g", rho));
    }
    v.require(worst <= 2.0 + 1e-9, fmt("max ratio %.12g > 2", worst));
    v.require(std::abs(half_half_ratio(1.0) - 1.0) <= 1e-9, "ratio at rho=1 is not 1");
    v.require(half_half_ratio(1e4) > 1.999, fmt("ratio at rho=1e4 is %.12g", half_half_ratio(1e4)));
    if (v.pass) v.detail = fmt("max %.12g over 1e4 rho points; r(1e4)=%.6f", worst, half_half_ratio(1e4));
    return v;
}

Verdict clairvoyant_vs_oracle() {
    Verdict v;
    std::mt19937_64 gen(20240601);
    std::uniform_real_distribution<double> sigma(0.1, 100.0);
    std::uniform_int_distribution<std::int64_t> horizon(10, 500);
    double worst_rel = 0.0;
    std::int64_t worst_gap = 0;
    for (int i = 0; i < 500; ++i) {
        const ArmMoments m{sigma(gen), sigma(gen)};
        const std::int64_t T = horizon(gen);
        const Allocation a = rounded_clairvoyant_allocation(m, T);
        const Allocation best = exhaustive_best_allocation(m, T);
        const double va = proxy_mse(a, m);
        const double vb = proxy_mse(best, m);
        worst_gap = std::max(worst_gap, std::abs(a.t1 - best.t1));
        worst_rel = std::max(worst_rel, (va - vb) / vb);
        v.require(std::abs(a.t1 - best.t1) <= 1 && std::abs(a.t0 - best.t0) <= 1,
                  fmt("case %g: t1 %g vs oracle", i, static_cast<double>(a.t1)));
        v.require((va - vb) / vb <= 1e-6, fmt("case %g: relative excess %g", i, (va - vb) / vb));
    }
    if (v.pass) v.detail = fmt("500 cases; max |dt1| %g, max relative excess %.3g", static_cast<double>(worst_gap), worst_rel);
    return v;
}

Verdict kurtosis_exactness() {
    Verdict v;
    const ThreePointDist dists[] = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.25, 0.5, 0.25}, {0.1, 0.3, 0.6},
                                    {0.05, 0.9, 0.05}, {0.7, 0.0, 0.3}};
    double worst = 0.0;
    for (const ThreePointDist& d : dists) {
        const double mean = d.p_pos - d.p_neg;
        const auto central = [&](int k) {
            return d.p_neg * std::pow(-1.0 - mean, k) + d.p_zero * std::pow(-mean, k) + d.p_pos * std::pow(1.0 - mean, k);
        };
        const double var = central(2);
        const double mu4 = central(4);
        for (int n = 2; n <= 8; ++n) {
            const VarianceMoments e = enumerate_sample_variance_moments(d, n);
            const double nn = n;
            const double closed = mu4 / nn + (nn * nn - 2.0 * nn + 3.0) / (nn * (nn - 1.0)) * var * var;
            worst = std::max({worst, std::abs(e.second_moment - closed), std::abs(e.mean - var)});
            v.require(std::abs(e.second_moment - closed) <= 1e-12, fmt("n=%g: E[s^4] off by %g", n, e.second_moment - closed));
            v.require(std::abs(e.mean - var) <= 1e-12, fmt("n=%g: E[s^2] off by %g", n, e.mean - var));
        }
    }
    if (v.pass) v.detail = fmt("5 distributions x n=2..8; max abs error %.3g", worst);
    return v;
}

Verdict lower_bound_instance_check() {
    Verdict v;
    double worst_kl = 0.0;
    for (std::int64_t T : {4, 9, 100, 10000}) {
        const LowerBoundInstance inst = lower_bound_instance(T);
        const double eps = 1.0 / (3.0 * std::sqrt(static_cast<double>(T)));
        const double a[] = {inst.nu.p_neg, inst.nu.p_zero, inst.nu.p_pos};
        const double b[] = {inst.nu_prime.p_neg, inst.nu_prime.p_zero, inst.nu_prime.p_pos};
        double kl_ab = 0.0;
        double kl_ba = 0.0;
        for (int i = 0; i < 3; ++i) {
            kl_ab += a[i] * std::log(a[i] / b[i]);
            kl_ba += b[i] * std::log(b[i] / a[i]);
        }
        const double limit = 1.0 / (2.0 * static_cast<double>(T)) + 1e-12;
        worst_kl = std::max(worst_kl, std::max(kl_ab, kl_ba) * 2.0 * static_cast<double>(T));
        v.require(kl_ab <= limit && kl_ba <= limit, fmt("T=%g: KL %g / %g", static_cast<double>(T), kl_ab, kl_ba));
        v.require(std::abs(kl_three_point(inst.nu, inst.nu_prime) - kl_ab) <= 1e-12, "library KL disagrees");
        const auto variance = [](const double* p) { return p[0] + p[2] - (p[2] - p[0]) * (p[2] - p[0]); };
        v.require(std::abs(variance(a) - 2.0 / 3.0) <= 1e-12, "var(nu) != 2/3");
        v.require(std::abs(variance(b) - (2.0 / 3.0 + eps)) <= 1e-12, "var(nu') != 2/3 + eps");
        v.require(std::abs(three_point_variance(inst.nu_prime) - variance(b)) <= 1e-12, "library variance disagrees");
    }
    if (v.pass) v.detail = fmt("T in {4,9,100,1e4}; max KL * 2T = %.6f", worst_kl);
    return v;
}

Verdict lemma_suite() {
    Verdict v;
    std::int64_t min_points = -1;
    for (const std::string& id : lemma_ids()) {
        const LemmaReport r = lemma_grid_check(id);
        v.require(r.passed(), id + " " + std::string(to_string(r.status)));
        v.require(r.points_checked >= 10000, id + " checked only " + std::to_string(r.points_checked) + " points");
        min_points = min_points < 0 ? r.points_checked : std::min(min_points, r.points_checked);
    }
    const ThreePointDist uniform{1.0 / 3, 1.0 / 3, 1.0 / 3};
    std::string tails;
    for (TailAssumption a : {TailAssumption::Kurtosis, TailAssumption::Bounded}) {
        for (double delta : {0.2, 0.5}) {
            const TailReport r = tail_bound_check(a, uniform, 30, delta, 100000, 11);
            const char* name = a == TailAssumption::Kurtosis ? "LightTail" : "ExponentialTail";
            v.require(r.pass, std::string(name) + fmt(" delta=%g empirical %g > bound %g", delta, r.empirical, r.bound));
            tails += fmt(" %.4f<=%.4f", r.empirical, r.bound);
        }
    }
    if (v.pass) {
        v.detail = std::to_string(lemma_ids().size()) + " lemmas pass (>= " + std::to_string(min_points) +
                   " points each); tails" + tails;
    }
    return v;
}

// SE of a sample variance from the sample's fourth central moment.
double variance_se(const BatchSummary& s) {
    const double n = static_cast<double>(s.n_trajectories - s.n_degenerate);
    double m4 = 0.0;
    for (const RatioSample& r : s.samples) {
        if (!r.degenerate) m4 += std::pow(r.tau_hat - s.mean_tau_hat, 4.0);
    }
    m4 /= n;
    const double s2 = s.var_tau_hat;
    return std::sqrt(std::max(0.0, m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n);
}

Verdict click_reproduction() {
    Verdict v;
    const std::int64_t T = 1000;
    std::vector<DesignConfig> designs = {half_half_config(T)};
    for (int M = 2; M <= 5; ++M) designs.push_back(design_from_json({{"M", M}, {"T", T}, {"schedule", "clicks"}}));
    const std::vector<BatchSummary> rows = compare_designs(designs, parse_population("table1"), 0, 100000);

    std::string a_detail;
    bool a_ok = true;
    for (const BatchSummary& s : rows) {
        const double z = (s.mean_tau_hat - kTable1Tau) / s.se_mean_tau_hat;
        if (std::abs(z) > 4.0) {
            a_ok = false;
            a_detail += fmt(" M=%g z=%.2f", s.M, z);
        }
    }
    v.require(a_ok, "(a) mean tau_hat beyond 4 SE of -19442:" + a_detail);

    const double base = rows[0].var_tau_hat;
    const double red2 = 1.0 - rows[1].var_tau_hat / base;
    const double red3 = 1.0 - rows[2].var_tau_hat / base;
    v.require(red2 >= 0.05 && red2 <= 0.13 && red3 >= 0.05 && red3 <= 0.13,
              fmt("(b) reductions %.4f / %.4f outside [0.05, 0.13]", red2, red3));

    bool c_ok = true;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const double tol = 2.0 * std::max(variance_se(rows[i]), variance_se(rows[i + 1]));
        if (rows[i + 1].var_tau_hat > rows[i].var_tau_hat + tol) c_ok = false;
    }
    const double plateau = 1.0 - std::min(rows[3].var_tau_hat, rows[4].var_tau_hat) / rows[2].var_tau_hat;
    v.require(c_ok, "(c) variance increases with M beyond 2 SE");
    v.require(plateau < 0.03, fmt("(c) improvement from M=3 to M=5 is %.4f", plateau));

    v.detail = (v.pass ? "" : v.detail + " | ") +
               fmt("reduction M=2 %.4f, M=3 %.4f; M3->5 gain %.4f;", red2, red3, plateau) +
               fmt(" bias M=1 %.1f, M=2 %.1f, M=3 %.1f", rows[0].mean_tau_hat - kTable1Tau,
                   rows[1].mean_tau_hat - kTable1Tau, rows[2].mean_tau_hat - kTable1Tau) +
               fmt(" (SE %.1f)", rows[1].se_mean_tau_hat);
    return v;
}

Verdict high_probability() {
    Verdict v;
    const std::int64_t T = 10000;
    const DesignConfig two = two_stage_config(T, 1.0);
    const DesignConfig four = multi_stage_config(T, thm3_schedule(4));
    std::string detail;
    for (double rho : {1.0, 2.0, 8.0}) {
        const std::vector<BatchSummary> rows =
            compare_designs({two, four}, gaussian_population(0.0, rho, 0.0, 1.0), 0, 2000);
        v.require(rows[0].q95_ratio <= 1.05, fmt("rho=%g two-stage p95 %.5f", rho, rows[0].q95_ratio));
        v.require(rows[1].q95_ratio <= 1.03, fmt("rho=%g four-stage p95 %.5f", rho, rows[1].q95_ratio));
        for (const BatchSummary& s : rows) {
            for (const RatioSample& r : s.samples) {
                if (std::isfinite(r.ratio) && r.ratio < 1.0) {
                    v.require(false, fmt("rho=%g ratio %.17g < 1", rho, r.ratio));
                }
            }
        }
        detail += fmt(" rho=%g: %.4f/%.4f", rho, rows[0].q95_ratio, rows[1].q95_ratio);
    }
    if (v.pass) v.detail = "p95 two-stage/four-stage" + detail;
    return v;
}

Verdict determinism() {
    Verdict v;
    std::mt19937_64 gen(8);
    const std::vector<std::string> pops = {"gaussian:rho=2", "gaussian:rho=0.3", "threepoint:p=0.2",
                                           "bounded:C=2,rho=3", "table1"};
    int configs = 0;
    int attempts = 0;
    while (configs < 1000 && attempts < 100000) {
        ++attempts;
        const int kind = static_cast<int>(gen() % 3);
        const std::int64_t T = 16 + static_cast<std::int64_t>(gen() % 3000);
        nlohmann::json req = {{"T", T}};
        if (kind == 0) {
            req["design"] = "halfhalf";
        } else if (kind == 1) {
            req["M"] = 2;
            req["beta"] = 0.5 + static_cast<double>(gen() % 1000) / 250.0;
        } else {
            req["M"] = 3 + static_cast<int>(gen() % 4);
            req["schedule"] = "thm3";
        }
        const DesignConfig d = design_from_json(req);
        if (!check_config(d).ok) continue;
        ++configs;
        const Population pop = parse_population(pops[gen() % pops.size()]);
        const std::uint64_t seed = gen();
        const std::uint64_t index = gen() % 1000;

        const TrajectoryResult a = run_trajectory(d, pop, seed, index);
        const TrajectoryResult b = run_trajectory(d, pop, seed, index);
        v.require(a == b, "repeat run differs for " + req.dump());
        v.require(a.degenerate || a.totals.total() == T, "totals do not sum to T for " + req.dump());

        // Coupling: every design in a comparison sees the arrays draw_outcomes yields for that index.
        const OutcomeArrays arrays = draw_outcomes(pop, T, seed, index);
        const OutcomeArrays again = draw_outcomes(pop, T, seed, index);
        v.require(arrays.y1 == again.y1 && arrays.y0 == again.y0, "outcome arrays not reproducible");
        v.require(run_on_arrays(d, pop, arrays, index) == a, "trajectory not a function of its outcome arrays");
        if (configs % 100 == 0) {
            const DesignConfig other = half_half_config(T);
            const std::vector<BatchSummary> both = compare_designs({d, other}, pop, seed, 20, {.workers = 3});
            const BatchSummary solo = run_batch(d, pop, seed, 20, {.workers = 1});
            for (std::size_t i = 0; i < solo.samples.size(); ++i) {
                const RatioSample& x = both[0].samples[i];
                const RatioSample& y = solo.samples[i];
                const bool same = x.index == y.index && x.case_path == y.case_path &&
                                  std::memcmp(&x.tau_hat, &y.tau_hat, sizeof(double)) == 0;
                v.require(same, "compare_designs sample differs from run_batch");
                const TrajectoryResult hh =
                    run_on_arrays(other, pop, draw_outcomes(pop, T, seed, both[1].samples[i].index), both[1].samples[i].index);
                v.require(std::memcmp(&hh.tau_hat, &both[1].samples[i].tau_hat, sizeof(double)) == 0,
                          "second design not coupled to the shared arrays");
            }
            v.require(to_json(both[0], true).dump() == to_json(solo, true).dump(), "summary depends on worker count");
        }
    }
    v.require(configs == 1000, "could not draw 1000 feasible configs");
    if (v.pass) v.detail = std::to_string(configs) + " configs: sums exact, repeats bit-identical, coupling verified";
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    bool strict = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--strict") == 0) strict = true;
    }
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
        {"half-half benchmark", half_half_benchmark},
        {"clairvoyant vs exhaustive oracle", clairvoyant_vs_oracle},
        {"sample-variance second moment", kurtosis_exactness},
        {"lower-bound instance", lower_bound_instance_check},
        {"inequality and tail suite", lemma_suite},
        {"click-data reproduction", click_reproduction},
        {"high-probability ratios", high_probability},
        {"determinism and horizon exactness", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("threw: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!v.pass) ++failed;
        std::printf("criterion %zu %s: %s (%.2fs) %s\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first, secs,
                    v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return strict && failed > 0 ? 1 : 0;
}
