#include "neyman/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "neyman/config.hpp"
#include "neyman/error.hpp"

namespace neyman {

OutcomeArrays draw_outcomes(const Population& pop, std::int64_t T, std::uint64_t master_seed, std::uint64_t index) {
    OutcomeArrays a;
    a.y1.resize(static_cast<std::size_t>(T));
    a.y0.resize(static_cast<std::size_t>(T));
    CounterStream s1(master_seed, index, StreamTag::TreatedOutcomes);
    CounterStream s0(master_seed, index, StreamTag::ControlOutcomes);
    pop.draw(Arm::Treated, s1, a.y1);
    pop.draw(Arm::Control, s0, a.y0);
    return a;
}

TrajectoryResult run_on_arrays(const DesignConfig& design, const Population& pop, const OutcomeArrays& arrays,
                               std::uint64_t index) {
    TrajectoryResult r;
    r.seed_index = index;
    Started started = init_design(design);
    DesignState& state = started.state;
    std::optional<StageAllocation> stage = started.first;
    std::int64_t c1 = 0;
    std::int64_t c0 = 0;
    try {
        while (stage) {
            const std::span<const double> obs1(arrays.y1.data() + c1, static_cast<std::size_t>(stage->t1));
            const std::span<const double> obs0(arrays.y0.data() + c0, static_cast<std::size_t>(stage->t0));
            c1 += stage->t1;
            c0 += stage->t0;
            stage = advance(state, obs1, obs0);
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::TooFewObservations && e.code() != ErrorCode::EmptyArm) throw;
        r.degenerate = true;
        r.case_path = state.case_path;
        r.totals = state.cumulative;
        r.proxy_ratio = std::numeric_limits<double>::quiet_NaN();
        r.tau_hat = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    r.case_path = state.case_path;
    r.totals = state.cumulative;
    if (state.obs1.empty() || state.obs0.empty()) {
        r.degenerate = true;
        r.tau_hat = std::numeric_limits<double>::quiet_NaN();
    } else {
        r.tau_hat = finalize(state).tau_hat;
    }
    const ArmMoments truth = pop.true_moments.value_or(ArmMoments{});
    if (truth.sigma1 == 0.0 && truth.sigma0 == 0.0) {
        r.proxy_ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
        r.proxy_ratio = competitive_ratio(r.totals, truth, design.horizon);
    }
    return r;
}

TrajectoryResult run_trajectory(const DesignConfig& design, const Population& pop, std::uint64_t master_seed,
                                std::uint64_t index) {
    return run_on_arrays(design, pop, draw_outcomes(pop, design.horizon, master_seed, index), index);
}

std::string case_path_string(const std::vector<CaseLabel>& path) {
    std::string out;
    for (CaseLabel l : path) {
        if (!out.empty()) out += '>';
        out += to_string(l);
    }
    return out;
}

namespace {

RatioSample to_sample(const TrajectoryResult& r) {
    return {r.seed_index, r.proxy_ratio, r.tau_hat, case_path_string(r.case_path), r.degenerate};
}

double nearest_rank(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

// Runs body(i) for i in [0, n) on a fixed pool; the first exception is rethrown.
template <typename Body>
void parallel_for(std::int64_t n, unsigned workers, Body body) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::int64_t>(workers, std::max<std::int64_t>(n, 1)));
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto work = [&] {
        for (std::int64_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

void label(BatchSummary& s, const DesignConfig& design, const Population& pop, std::uint64_t seed,
           const BatchOptions& options) {
    s.design = design_label(design);
    s.M = design.kind == DesignKind::HalfHalf ? 1 : design.stages;
    s.T = design.horizon;
    s.population = pop.label;
    s.master_seed = seed;
    s.true_tau = pop.true_tau;
    if (options.bound) {
        s.bound = options.bound;
        s.violation_rate = bound_violation_rate(s, *options.bound);
    }
}

}  // namespace

BatchSummary summarize(std::vector<RatioSample> samples) {
    std::sort(samples.begin(), samples.end(),
              [](const RatioSample& a, const RatioSample& b) { return a.index < b.index; });
    BatchSummary s;
    s.n_trajectories = static_cast<std::int64_t>(samples.size());
    std::vector<double> ratios;
    double ratio_sum = 0.0;
    std::int64_t n_finite = 0;
    double tau_sum = 0.0;
    std::int64_t n_tau = 0;
    for (const RatioSample& r : samples) {
        ++s.case_path_counts[r.case_path];
        if (r.degenerate) {
            ++s.n_degenerate;
            continue;
        }
        tau_sum += r.tau_hat;
        ++n_tau;
        if (std::isnan(r.ratio)) {
            ++s.n_undefined_ratio;
        } else {
            ratios.push_back(r.ratio);
            if (std::isinf(r.ratio)) {
                ++s.n_infinite_ratio;
            } else {
                ratio_sum += r.ratio;
                ++n_finite;
            }
        }
    }
    s.mean_ratio = n_finite > 0 ? ratio_sum / static_cast<double>(n_finite) : std::numeric_limits<double>::quiet_NaN();
    std::sort(ratios.begin(), ratios.end());
    s.q50_ratio = nearest_rank(ratios, 0.50);
    s.q95_ratio = nearest_rank(ratios, 0.95);
    s.q99_ratio = nearest_rank(ratios, 0.99);
    if (n_tau > 0) {
        s.mean_tau_hat = tau_sum / static_cast<double>(n_tau);
        double ss = 0.0;
        for (const RatioSample& r : samples) {
            if (r.degenerate) continue;
            const double d = r.tau_hat - s.mean_tau_hat;
            ss += d * d;
        }
        s.var_tau_hat = n_tau > 1 ? ss / static_cast<double>(n_tau - 1) : 0.0;
        s.se_mean_tau_hat = std::sqrt(s.var_tau_hat / static_cast<double>(n_tau));
    }
    s.samples = std::move(samples);
    return s;
}

BatchSummary run_batch(const DesignConfig& design, const Population& pop, std::uint64_t master_seed,
                       std::int64_t n, const BatchOptions& options) {
    return compare_designs({design}, pop, master_seed, n, options).front();
}

std::vector<BatchSummary> compare_designs(const std::vector<DesignConfig>& designs, const Population& pop,
                                          std::uint64_t master_seed, std::int64_t n,
                                          const BatchOptions& options) {
    if (designs.empty()) fail(ErrorCode::InvalidArgument, "no designs to compare");
    if (n < 1) fail(ErrorCode::InvalidArgument, "n must be >= 1");
    const std::int64_t T = designs.front().horizon;
    for (const DesignConfig& d : designs) {
        if (d.horizon != T) fail(ErrorCode::MismatchedHorizon, "all compared designs must share T");
        // Surface infeasible configs once, before any work is scheduled.
        init_design(d);
    }
    std::vector<std::vector<RatioSample>> slots(designs.size(), std::vector<RatioSample>(static_cast<std::size_t>(n)));
    parallel_for(n, options.workers, [&](std::int64_t i) {
        const auto index = static_cast<std::uint64_t>(i);
        const OutcomeArrays arrays = draw_outcomes(pop, T, master_seed, index);
        for (std::size_t d = 0; d < designs.size(); ++d) {
            slots[d][static_cast<std::size_t>(i)] = to_sample(run_on_arrays(designs[d], pop, arrays, index));
        }
    });
    std::vector<BatchSummary> out;
    for (std::size_t d = 0; d < designs.size(); ++d) {
        BatchSummary s = summarize(std::move(slots[d]));
        label(s, designs[d], pop, master_seed, options);
        out.push_back(std::move(s));
    }
    return out;
}

BatchSummary merge(const BatchSummary& a, const BatchSummary& b) {
    std::vector<RatioSample> all = a.samples;
    all.insert(all.end(), b.samples.begin(), b.samples.end());
    std::sort(all.begin(), all.end(), [](const RatioSample& x, const RatioSample& y) { return x.index < y.index; });
    all.erase(std::unique(all.begin(), all.end(),
                          [](const RatioSample& x, const RatioSample& y) { return x.index == y.index; }),
              all.end());
    BatchSummary s = summarize(std::move(all));
    s.design = a.design;
    s.M = a.M;
    s.T = a.T;
    s.population = a.population;
    s.master_seed = a.master_seed;
    s.true_tau = a.true_tau;
    if (a.bound) {
        s.bound = a.bound;
        s.violation_rate = bound_violation_rate(s, *a.bound);
    }
    return s;
}

double bound_violation_rate(const BatchSummary& batch, double bound) {
    std::int64_t counted = 0;
    std::int64_t above = 0;
    for (const RatioSample& r : batch.samples) {
        if (r.degenerate || std::isnan(r.ratio)) continue;
        ++counted;
        if (r.ratio > bound) ++above;
    }
    return counted == 0 ? 0.0 : static_cast<double>(above) / static_cast<double>(counted);
}

namespace {

nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const BatchSummary& s, bool include_samples) {
    nlohmann::json j = {
        {"schema", kBatchSchema},
        {"design", s.design},
        {"M", s.M},
        {"T", s.T},
        {"population", s.population},
        {"master_seed", s.master_seed},
        {"n_trajectories", s.n_trajectories},
        {"n_degenerate", s.n_degenerate},
        {"n_infinite_ratio", s.n_infinite_ratio},
        {"n_undefined_ratio", s.n_undefined_ratio},
        {"mean_ratio", number_or_null(s.mean_ratio)},
        {"quantile_ratios", {{"p50", number_or_null(s.q50_ratio)}, {"p95", number_or_null(s.q95_ratio)},
                             {"p99", number_or_null(s.q99_ratio)}}},
        {"mean_tau_hat", s.mean_tau_hat},
        {"var_tau_hat", s.var_tau_hat},
        {"se_mean_tau_hat", s.se_mean_tau_hat},
        {"case_path_counts", s.case_path_counts},
    };
    j["true_tau"] = s.true_tau ? nlohmann::json(*s.true_tau) : nlohmann::json(nullptr);
    if (s.bound) {
        j["bound"] = number_or_null(*s.bound);
        j["bound_violation_rate"] = *s.violation_rate;
    }
    if (include_samples) {
        nlohmann::json arr = nlohmann::json::array();
        for (const RatioSample& r : s.samples) {
            arr.push_back({{"index", r.index},
                           {"ratio", number_or_null(r.ratio)},
                           {"tau_hat", number_or_null(r.tau_hat)},
                           {"case_path", r.case_path},
                           {"degenerate", r.degenerate}});
        }
        j["samples"] = std::move(arr);
    }
    return j;
}

nlohmann::json to_json(const TrajectoryResult& r) {
    std::vector<std::string> path;
    for (CaseLabel l : r.case_path) path.emplace_back(to_string(l));
    return {{"totals", {{"t1", r.totals.t1}, {"t0", r.totals.t0}}},
            {"tau_hat", number_or_null(r.tau_hat)},
            {"proxy_ratio", number_or_null(r.proxy_ratio)},
            {"case_path", path},
            {"seed_index", r.seed_index},
            {"degenerate", r.degenerate}};
}

std::string csv_header() {
    return "design,M,T,pop,n,var_tau_hat,mean_ratio,p95_ratio";
}

std::string csv_row(const BatchSummary& s) {
    std::string pop = s.population;
    if (pop.find_first_of(",\"") != std::string::npos) {
        std::string quoted = "\"";
        for (char c : pop) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        pop = quoted + "\"";
    }
    char head[64];
    std::snprintf(head, sizeof head, ",%d,%lld,", s.M, static_cast<long long>(s.T));
    char tail[128];
    std::snprintf(tail, sizeof tail, ",%lld,%.17g,%.17g,%.17g", static_cast<long long>(s.n_trajectories),
                  s.var_tau_hat, s.mean_ratio, s.q95_ratio);
    return s.design + head + pop + tail;
}

}  // namespace neyman
