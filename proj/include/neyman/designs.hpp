#pragma once
// Sequential design state machines: the half-half benchmark, the two-stage
// adaptive Neyman allocation and its M-stage generalization.
//
// Every integer stage size is the difference of round-half-up cumulative
// targets, and the last stage absorbs whatever is left, so a finished run
// always assigns exactly T subjects.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "neyman/core.hpp"
#include "neyman/rng.hpp"
#include "neyman/tuning.hpp"

namespace neyman {

enum class DesignKind { HalfHalf, TwoStage, MultiStage };

std::string_view to_string(DesignKind kind) noexcept;
DesignKind design_kind_from_string(std::string_view text);

enum class CaseLabel {
    Init,
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    LastCase1,
    LastCase2,
    LastCase3,
    Plugin2Stage,
    AllTreated,
    AllControl,
};

std::string_view to_string(CaseLabel label) noexcept;
CaseLabel case_label_from_string(std::string_view text);

enum class Arm { Treated, Control };

struct DesignConfig {
    DesignKind kind = DesignKind::TwoStage;
    std::int64_t horizon = 0;
    int stages = 2;
    // {beta} for the two-stage design; M entries ending in 1 for M stages; unused for half-half.
    std::vector<double> betas;
    std::int64_t min_arm_obs = 2;
};

DesignConfig half_half_config(std::int64_t T);
DesignConfig two_stage_config(std::int64_t T, double beta, std::int64_t min_arm_obs = 2);
DesignConfig multi_stage_config(std::int64_t T, const Schedule& schedule, std::int64_t min_arm_obs = 2);

struct StageAllocation {
    int stage_index = 1;
    std::int64_t t1 = 0;
    std::int64_t t0 = 0;
    CaseLabel label = CaseLabel::Init;
    // Set when rounding drove one arm's size below zero and it was reset to 0.
    bool clamped = false;

    std::int64_t total() const noexcept { return t1 + t0; }
    bool operator==(const StageAllocation&) const = default;
};

struct Estimates {
    ArmMoments sigma_hat;
    double share1 = 0.0;
    double share0 = 0.0;
};

struct DesignState {
    DesignConfig config;
    // 1-based index of the stage whose observations are awaited; 0 once complete.
    int stage = 0;
    OutcomeSample obs1;
    OutcomeSample obs0;
    // Everything allocated so far, including the pending stage.
    Allocation cumulative;
    std::optional<Arm> frozen_arm;
    std::vector<CaseLabel> case_path;
    std::vector<StageAllocation> history;
    // Real-valued cumulative targets behind the last emitted stage.
    RealAllocation real_targets;
    std::optional<Estimates> last_estimates;
    // Stages already decided after a freeze, emitted in order.
    std::deque<StageAllocation> queued;

    bool complete() const noexcept { return stage == 0; }
    const StageAllocation& pending() const;
};

FeasibilityReport check_config(const DesignConfig& config);

struct Started {
    DesignState state;
    StageAllocation first;
};

Started init_half_half(const DesignConfig& config);
Started init_two_stage(const DesignConfig& config);
Started init_multi_stage(const DesignConfig& config);
Started init_design(const DesignConfig& config);

StageAllocation next_two_stage(DesignState& state, std::span<const double> stage1_obs1,
                               std::span<const double> stage1_obs0);
StageAllocation next_multi_stage(DesignState& state, std::span<const double> new_obs1,
                                 std::span<const double> new_obs0);

// Ingests the pending stage's observations for any design kind. Returns the next
// stage, or nothing when the experiment is complete.
std::optional<StageAllocation> advance(DesignState& state, std::span<const double> new_obs1,
                                       std::span<const double> new_obs0);

struct Finalized {
    Allocation totals;
    double tau_hat = 0.0;
};

Finalized finalize(const DesignState& state);

// Uniform random permutation of t1 ones and t0 zeros.
std::vector<int> randomize_stage(const StageAllocation& alloc, CounterStream& stream);

// Maps Case1<->Case5, Case2<->Case4, LastCase1<->LastCase3, AllTreated<->AllControl.
CaseLabel mirror(CaseLabel label) noexcept;

}  // namespace neyman
