#pragma once
// Deterministic Monte Carlo over designs and populations.
//
// Trajectory i draws two length-T outcome arrays, one per arm, from streams
// keyed by (master_seed, i, arm). A design reads prefixes of those arrays as it
// assigns subjects, so any number of designs can be run on the same draws.
// Results land in index-addressed slots and are summarized in index order,
// which makes every summary independent of the worker count.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "neyman/designs.hpp"
#include "neyman/population.hpp"

namespace neyman {

inline constexpr const char* kBatchSchema = "neyman.batch/1";

struct OutcomeArrays {
    std::vector<double> y1;
    std::vector<double> y0;
};

OutcomeArrays draw_outcomes(const Population& pop, std::int64_t T, std::uint64_t master_seed, std::uint64_t index);

struct TrajectoryResult {
    Allocation totals;
    double tau_hat = 0.0;
    // +inf when an arm with positive true sigma got no subjects; NaN when both true sigmas are 0.
    double proxy_ratio = 0.0;
    std::vector<CaseLabel> case_path;
    std::uint64_t seed_index = 0;
    // The design could not estimate (too few observations in an arm).
    bool degenerate = false;

    bool operator==(const TrajectoryResult&) const = default;
};

TrajectoryResult run_on_arrays(const DesignConfig& design, const Population& pop, const OutcomeArrays& arrays,
                               std::uint64_t index);
TrajectoryResult run_trajectory(const DesignConfig& design, const Population& pop, std::uint64_t master_seed,
                                std::uint64_t index);

struct RatioSample {
    std::uint64_t index = 0;
    double ratio = 0.0;
    double tau_hat = 0.0;
    std::string case_path;
    bool degenerate = false;
};

struct BatchSummary {
    std::string design;
    int M = 1;
    std::int64_t T = 0;
    std::string population;
    std::uint64_t master_seed = 0;
    std::int64_t n_trajectories = 0;
    std::int64_t n_degenerate = 0;
    std::int64_t n_infinite_ratio = 0;
    std::int64_t n_undefined_ratio = 0;
    // Over finite ratios.
    double mean_ratio = 0.0;
    double q50_ratio = 0.0;
    double q95_ratio = 0.0;
    double q99_ratio = 0.0;
    double mean_tau_hat = 0.0;
    double var_tau_hat = 0.0;
    double se_mean_tau_hat = 0.0;
    std::optional<double> true_tau;
    std::map<std::string, std::int64_t> case_path_counts;
    std::optional<double> bound;
    std::optional<double> violation_rate;
    // Every trajectory ordered by index; kept so batches can be merged and re-queried.
    std::vector<RatioSample> samples;
};

std::string case_path_string(const std::vector<CaseLabel>& path);

BatchSummary summarize(std::vector<RatioSample> samples);

struct BatchOptions {
    // 0 means one worker per hardware thread.
    unsigned workers = 0;
    std::optional<double> bound;
};

BatchSummary run_batch(const DesignConfig& design, const Population& pop, std::uint64_t master_seed,
                       std::int64_t n, const BatchOptions& options = {});

// Every design sees the same outcome arrays at each index. Throws MismatchedHorizon
// when the designs disagree on T.
std::vector<BatchSummary> compare_designs(const std::vector<DesignConfig>& designs, const Population& pop,
                                          std::uint64_t master_seed, std::int64_t n,
                                          const BatchOptions& options = {});

// Union of the two sample sets, re-summarized. Symmetric and associative.
BatchSummary merge(const BatchSummary& a, const BatchSummary& b);

// Fraction of trajectories whose ratio exceeds `bound` (+inf ratios always count).
double bound_violation_rate(const BatchSummary& batch, double bound);

nlohmann::json to_json(const BatchSummary& s, bool include_samples = false);
nlohmann::json to_json(const TrajectoryResult& r);

// design,M,T,pop,n,var_tau_hat,mean_ratio,p95_ratio
std::string csv_header();
std::string csv_row(const BatchSummary& s);

}  // namespace neyman
