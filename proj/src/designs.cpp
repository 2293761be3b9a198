#include "neyman/designs.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "neyman/error.hpp"

namespace neyman {

std::string_view to_string(DesignKind kind) noexcept {
    switch (kind) {
        case DesignKind::HalfHalf: return "halfhalf";
        case DesignKind::TwoStage: return "twostage";
        case DesignKind::MultiStage: return "mstage";
    }
    return "unknown";
}

DesignKind design_kind_from_string(std::string_view text) {
    if (text == "halfhalf" || text == "half-half") return DesignKind::HalfHalf;
    if (text == "twostage" || text == "two-stage" || text == "2stage") return DesignKind::TwoStage;
    if (text == "mstage" || text == "multistage" || text == "m-stage") return DesignKind::MultiStage;
    fail(ErrorCode::InvalidArgument, "unknown design '" + std::string(text) + "'");
}

namespace {

constexpr std::pair<CaseLabel, std::string_view> kLabelNames[] = {
    {CaseLabel::Init, "Init"},
    {CaseLabel::Case1, "Case1"},
    {CaseLabel::Case2, "Case2"},
    {CaseLabel::Case3, "Case3"},
    {CaseLabel::Case4, "Case4"},
    {CaseLabel::Case5, "Case5"},
    {CaseLabel::LastCase1, "LastCase1"},
    {CaseLabel::LastCase2, "LastCase2"},
    {CaseLabel::LastCase3, "LastCase3"},
    {CaseLabel::Plugin2Stage, "Plugin2Stage"},
    {CaseLabel::AllTreated, "AllTreated"},
    {CaseLabel::AllControl, "AllControl"},
};

}  // namespace

std::string_view to_string(CaseLabel label) noexcept {
    for (const auto& [l, name] : kLabelNames) {
        if (l == label) return name;
    }
    return "Unknown";
}

CaseLabel case_label_from_string(std::string_view text) {
    for (const auto& [l, name] : kLabelNames) {
        if (name == text) return l;
    }
    fail(ErrorCode::ParseError, "unknown case label '" + std::string(text) + "'");
}

CaseLabel mirror(CaseLabel label) noexcept {
    switch (label) {
        case CaseLabel::Case1: return CaseLabel::Case5;
        case CaseLabel::Case5: return CaseLabel::Case1;
        case CaseLabel::Case2: return CaseLabel::Case4;
        case CaseLabel::Case4: return CaseLabel::Case2;
        case CaseLabel::LastCase1: return CaseLabel::LastCase3;
        case CaseLabel::LastCase3: return CaseLabel::LastCase1;
        case CaseLabel::AllTreated: return CaseLabel::AllControl;
        case CaseLabel::AllControl: return CaseLabel::AllTreated;
        default: return label;
    }
}

DesignConfig half_half_config(std::int64_t T) {
    DesignConfig c;
    c.kind = DesignKind::HalfHalf;
    c.horizon = T;
    c.stages = 1;
    return c;
}

DesignConfig two_stage_config(std::int64_t T, double beta, std::int64_t min_arm_obs) {
    DesignConfig c;
    c.kind = DesignKind::TwoStage;
    c.horizon = T;
    c.stages = 2;
    c.betas = {beta};
    c.min_arm_obs = min_arm_obs;
    return c;
}

DesignConfig multi_stage_config(std::int64_t T, const Schedule& schedule, std::int64_t min_arm_obs) {
    DesignConfig c;
    c.kind = DesignKind::MultiStage;
    c.horizon = T;
    c.stages = schedule.stages();
    c.betas = schedule.betas;
    if (c.betas.size() == 1) c.betas.push_back(1.0);
    c.min_arm_obs = min_arm_obs;
    return c;
}

const StageAllocation& DesignState::pending() const {
    if (complete() || history.empty()) fail(ErrorCode::WrongStage, "no stage is pending");
    return history.back();
}

FeasibilityReport check_config(const DesignConfig& config) {
    FeasibilityReport bad;
    bad.ok = false;
    if (config.min_arm_obs < 2) {
        bad.violation = "min_arm_obs must be >= 2";
        return bad;
    }
    switch (config.kind) {
        case DesignKind::HalfHalf:
            if (config.horizon < 2) {
                bad.violation = "half-half needs T >= 2";
                return bad;
            }
            return {};
        case DesignKind::TwoStage:
            if (config.stages != 2 || config.betas.size() != 1) {
                bad.violation = "two-stage design takes M = 2 and a single beta";
                return bad;
            }
            break;
        case DesignKind::MultiStage:
            if (config.stages < 2 || static_cast<int>(config.betas.size()) != config.stages) {
                bad.violation = "M-stage design needs M >= 2 betas ending in 1";
                return bad;
            }
            break;
    }
    for (double b : config.betas) {
        if (!(b > 0.0) || !std::isfinite(b)) {
            bad.violation = "betas must be positive and finite";
            return bad;
        }
    }
    Schedule s;
    s.betas = config.betas;
    return feasibility_check(s, config.horizon, config.stages, config.min_arm_obs);
}

namespace {

void require_feasible(const DesignConfig& config, DesignKind kind) {
    if (config.kind != kind) {
        fail(ErrorCode::InvalidArgument, "config is for the " + std::string(to_string(config.kind)) + " design");
    }
    const FeasibilityReport report = check_config(config);
    if (!report.ok) fail(ErrorCode::InfeasibleConfig, report.violation);
}

std::vector<double> boundaries(const DesignConfig& config) {
    Schedule s;
    s.betas = config.betas;
    return stage_boundaries(s, config.horizon);
}

// Builds the stage that moves `cum` to the integer cumulative targets, clamping a
// negative arm to zero while keeping the stage total.
StageAllocation to_targets(Allocation& cum, std::int64_t target1, std::int64_t target0, CaseLabel label,
                           int index) {
    StageAllocation s;
    s.stage_index = index;
    s.label = label;
    s.t1 = target1 - cum.t1;
    s.t0 = target0 - cum.t0;
    const std::int64_t total = std::max<std::int64_t>(0, s.t1 + s.t0);
    if (s.t1 < 0) {
        s.t1 = 0;
        s.t0 = total;
        s.clamped = true;
    } else if (s.t0 < 0) {
        s.t0 = 0;
        s.t1 = total;
        s.clamped = true;
    }
    cum.t1 += s.t1;
    cum.t0 += s.t0;
    return s;
}

void emit(DesignState& state, const StageAllocation& s) {
    state.cumulative.t1 += s.t1;
    state.cumulative.t0 += s.t0;
    state.case_path.push_back(s.label);
    state.history.push_back(s);
    state.stage = s.stage_index;
}

Started start(const DesignConfig& config, std::int64_t t1, std::int64_t t0) {
    Started out;
    out.state.config = config;
    out.state.real_targets = {static_cast<double>(t1), static_cast<double>(t0)};
    out.first = StageAllocation{1, t1, t0, CaseLabel::Init, false};
    emit(out.state, out.first);
    return out;
}

void check_observations(const DesignState& state, std::span<const double> obs1, std::span<const double> obs0) {
    if (state.complete()) fail(ErrorCode::WrongStage, "experiment is already complete");
    const StageAllocation& p = state.pending();
    if (static_cast<std::int64_t>(obs1.size()) != p.t1 || static_cast<std::int64_t>(obs0.size()) != p.t0) {
        fail(ErrorCode::CountMismatch, "stage " + std::to_string(p.stage_index) + " expects " +
                                           std::to_string(p.t1) + " treated and " + std::to_string(p.t0) +
                                           " control observations, got " + std::to_string(obs1.size()) +
                                           " and " + std::to_string(obs0.size()));
    }
    for (double v : obs1) {
        if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "observations must be finite");
    }
    for (double v : obs0) {
        if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "observations must be finite");
    }
}

void ingest(DesignState& state, std::span<const double> obs1, std::span<const double> obs0) {
    state.obs1.insert(state.obs1.end(), obs1.begin(), obs1.end());
    state.obs0.insert(state.obs0.end(), obs0.begin(), obs0.end());
}

Estimates estimate(DesignState& state) {
    Estimates e;
    e.sigma_hat = {std::sqrt(sample_variance(state.obs1)), std::sqrt(sample_variance(state.obs0))};
    const RealAllocation shares = plug_in_allocation(e.sigma_hat, state.config.horizon);
    e.share1 = shares.t1;
    e.share0 = shares.t0;
    state.last_estimates = e;
    return e;
}

bool pop_queued(DesignState& state, StageAllocation& out) {
    if (state.queued.empty()) return false;
    out = state.queued.front();
    state.queued.pop_front();
    emit(state, out);
    return true;
}

void finish(DesignState& state) {
    state.stage = 0;
}

}  // namespace

Started init_half_half(const DesignConfig& config) {
    require_feasible(config, DesignKind::HalfHalf);
    const std::int64_t t1 = round_half_up(static_cast<double>(config.horizon) / 2.0);
    return start(config, t1, config.horizon - t1);
}

Started init_two_stage(const DesignConfig& config) {
    require_feasible(config, DesignKind::TwoStage);
    const double h = boundaries(config).front() / 2.0;
    const std::int64_t n = round_half_up(h);
    Started s = start(config, n, n);
    s.state.real_targets = {h, h};
    return s;
}

Started init_multi_stage(const DesignConfig& config) {
    require_feasible(config, DesignKind::MultiStage);
    const double h = boundaries(config).front() / 2.0;
    const std::int64_t n = round_half_up(h);
    Started s = start(config, n, n);
    s.state.real_targets = {h, h};
    return s;
}

Started init_design(const DesignConfig& config) {
    switch (config.kind) {
        case DesignKind::HalfHalf: return init_half_half(config);
        case DesignKind::TwoStage: return init_two_stage(config);
        case DesignKind::MultiStage: return init_multi_stage(config);
    }
    fail(ErrorCode::InvalidArgument, "unknown design kind");
}

StageAllocation next_two_stage(DesignState& state, std::span<const double> stage1_obs1,
                               std::span<const double> stage1_obs0) {
    if (state.config.kind != DesignKind::TwoStage) fail(ErrorCode::WrongStage, "not a two-stage design");
    if (state.stage != 1) fail(ErrorCode::WrongStage, "two-stage design only takes stage-1 observations here");
    check_observations(state, stage1_obs1, stage1_obs0);
    ingest(state, stage1_obs1, stage1_obs0);

    const std::int64_t T = state.config.horizon;
    const double h = boundaries(state.config).front() / 2.0;
    const Estimates e = estimate(state);
    Allocation cum = state.cumulative;
    StageAllocation next;
    if (e.share1 > h && e.share0 > h) {
        const std::int64_t t1 = round_half_up(e.share1);
        next = to_targets(cum, t1, T - t1, CaseLabel::Plugin2Stage, 2);
        state.real_targets = {e.share1, e.share0};
    } else if (e.share1 <= h) {
        next = to_targets(cum, state.cumulative.t1, T - state.cumulative.t1, CaseLabel::AllControl, 2);
        state.frozen_arm = Arm::Treated;
        state.real_targets = {state.real_targets.t1, static_cast<double>(T) - state.real_targets.t1};
    } else {
        next = to_targets(cum, T - state.cumulative.t0, state.cumulative.t0, CaseLabel::AllTreated, 2);
        state.frozen_arm = Arm::Control;
        state.real_targets = {static_cast<double>(T) - state.real_targets.t0, state.real_targets.t0};
    }
    emit(state, next);
    return next;
}

StageAllocation next_multi_stage(DesignState& state, std::span<const double> new_obs1,
                                 std::span<const double> new_obs0) {
    if (state.config.kind != DesignKind::MultiStage) fail(ErrorCode::WrongStage, "not an M-stage design");
    const int M = state.config.stages;
    if (state.complete() || state.stage >= M) fail(ErrorCode::WrongStage, "no further stage to allocate");
    check_observations(state, new_obs1, new_obs0);
    ingest(state, new_obs1, new_obs0);

    StageAllocation next;
    if (pop_queued(state, next)) return next;

    const int m = state.stage;
    const std::int64_t T = state.config.horizon;
    const std::vector<double> b = boundaries(state.config);
    const auto bound = [&](int l) { return l >= M ? static_cast<double>(T) : b[l - 1]; };
    const double h_m = bound(m) / 2.0;
    const Estimates e = estimate(state);
    const double S1 = e.share1;
    const double S0 = e.share0;
    Allocation cum = state.cumulative;

    // Stages m+1..M after `arm` stops receiving subjects: the open arm fills
    // each cumulative boundary, the last stage fills T.
    const auto freeze_from = [&](int first, Arm arm, CaseLabel first_label) {
        state.frozen_arm = arm;
        const CaseLabel rest = arm == Arm::Control ? CaseLabel::AllTreated : CaseLabel::AllControl;
        for (int l = first; l <= M; ++l) {
            const std::int64_t total = l == M ? T : round_half_up(bound(l));
            const CaseLabel label = l == first ? first_label : rest;
            if (arm == Arm::Control) {
                state.queued.push_back(to_targets(cum, total - cum.t0, cum.t0, label, l));
            } else {
                state.queued.push_back(to_targets(cum, cum.t1, total - cum.t1, label, l));
            }
        }
    };

    if (m <= M - 2) {
        const double h_next = bound(m + 1) / 2.0;
        if (S0 < h_m) {
            freeze_from(m + 1, Arm::Control, CaseLabel::Case1);
            state.real_targets = {bound(m + 1) - state.real_targets.t0, state.real_targets.t0};
        } else if (S0 < h_next) {
            const std::int64_t c0 = round_half_up(S0);
            state.queued.push_back(
                to_targets(cum, round_half_up(bound(m + 1)) - c0, c0, CaseLabel::Case2, m + 1));
            state.real_targets = {bound(m + 1) - S0, S0};
            if (m + 2 <= M) freeze_from(m + 2, Arm::Control, CaseLabel::AllTreated);
            state.frozen_arm = Arm::Control;
        } else if (S1 >= h_next) {
            const std::int64_t n = round_half_up(h_next);
            state.queued.push_back(to_targets(cum, n, n, CaseLabel::Case3, m + 1));
            state.real_targets = {h_next, h_next};
        } else if (S1 >= h_m) {
            const std::int64_t c1 = round_half_up(S1);
            state.queued.push_back(
                to_targets(cum, c1, round_half_up(bound(m + 1)) - c1, CaseLabel::Case4, m + 1));
            state.real_targets = {S1, bound(m + 1) - S1};
            if (m + 2 <= M) freeze_from(m + 2, Arm::Treated, CaseLabel::AllControl);
            state.frozen_arm = Arm::Treated;
        } else {
            freeze_from(m + 1, Arm::Treated, CaseLabel::Case5);
            state.real_targets = {state.real_targets.t1, bound(m + 1) - state.real_targets.t1};
        }
    } else {
        if (S0 < h_m) {
            state.queued.push_back(to_targets(cum, T - cum.t0, cum.t0, CaseLabel::LastCase1, M));
            state.frozen_arm = Arm::Control;
            state.real_targets = {static_cast<double>(T) - state.real_targets.t0, state.real_targets.t0};
        } else if (S1 >= h_m) {
            const std::int64_t t1 = round_half_up(S1);
            state.queued.push_back(to_targets(cum, t1, T - t1, CaseLabel::LastCase2, M));
            state.real_targets = {S1, S0};
        } else {
            state.queued.push_back(to_targets(cum, cum.t1, T - cum.t1, CaseLabel::LastCase3, M));
            state.frozen_arm = Arm::Treated;
            state.real_targets = {state.real_targets.t1, static_cast<double>(T) - state.real_targets.t1};
        }
    }
    pop_queued(state, next);
    return next;
}

std::optional<StageAllocation> advance(DesignState& state, std::span<const double> new_obs1,
                                       std::span<const double> new_obs0) {
    if (state.complete()) fail(ErrorCode::WrongStage, "experiment is already complete");
    const int last_stage = state.config.kind == DesignKind::HalfHalf ? 1 : state.config.stages;
    if (state.stage == last_stage) {
        check_observations(state, new_obs1, new_obs0);
        ingest(state, new_obs1, new_obs0);
        finish(state);
        return std::nullopt;
    }
    switch (state.config.kind) {
        case DesignKind::TwoStage: return next_two_stage(state, new_obs1, new_obs0);
        case DesignKind::MultiStage: return next_multi_stage(state, new_obs1, new_obs0);
        case DesignKind::HalfHalf: break;
    }
    fail(ErrorCode::WrongStage, "unexpected stage");
}

Finalized finalize(const DesignState& state) {
    if (!state.complete()) {
        fail(ErrorCode::IncompleteExperiment,
             "stage " + std::to_string(state.stage) + " observations have not been submitted");
    }
    Finalized out;
    out.totals = state.cumulative;
    out.tau_hat = difference_in_means(state.obs1, state.obs0);
    return out;
}

std::vector<int> randomize_stage(const StageAllocation& alloc, CounterStream& stream) {
    std::vector<int> labels(static_cast<std::size_t>(alloc.t1), 1);
    labels.resize(static_cast<std::size_t>(alloc.total()), 0);
    for (std::size_t i = labels.size(); i > 1; --i) {
        const std::size_t j = stream.below(i);
        std::swap(labels[i - 1], labels[j]);
    }
    return labels;
}

}  // namespace neyman
