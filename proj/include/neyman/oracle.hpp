#pragma once
// Brute-force verifiers: exhaustive integer allocation search, exact
// enumeration of sample-variance moments, grid sweeps of the appendix
// inequalities and Monte Carlo checks of the variance tail bounds.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "neyman/bounds.hpp"
#include "neyman/core.hpp"

namespace neyman {

// argmin over t1 in 1..T-1 of proxy_mse; ties go to the larger t1. T <= 1e5.
Allocation exhaustive_best_allocation(const ArmMoments& moments, std::int64_t T);

struct VarianceMoments {
    double mean = 0.0;          // E[s^2]
    double second_moment = 0.0; // E[(s^2)^2]
};

// Exact sums over all 3^n samples of size n from d; 2 <= n <= 8.
VarianceMoments enumerate_sample_variance_moments(const ThreePointDist& d, int n);

// mu4/n + (n^2 - 2n + 3)/(n(n-1)) sigma^4.
double sample_variance_second_moment(const ThreePointDist& d, int n);

enum class GridScale { Linear, Log };

struct GridSpec {
    double lo = 0.0;
    double hi = 1.0;
    std::int64_t points = 10000;
    GridScale scale = GridScale::Log;

    std::vector<double> values() const;
};

enum class LemmaStatus { Pass, BoundaryTight, Fail, PreconditionViolation };

std::string_view to_string(LemmaStatus status) noexcept;

struct Counterexample {
    std::map<std::string, double> point;
    double lhs = 0.0;
    double rhs = 0.0;
    std::string relation;
};

struct LemmaReport {
    std::string lemma;
    LemmaStatus status = LemmaStatus::Pass;
    std::int64_t points_checked = 0;
    std::int64_t points_skipped = 0;
    std::int64_t boundary_tight = 0;
    std::optional<Counterexample> counterexample;

    bool passed() const noexcept { return status == LemmaStatus::Pass || status == LemmaStatus::BoundaryTight; }
};

// Lemma ids: "G", "H", "AlgebraicTrick1".."AlgebraicTrick7", "AlgebraicTrick:Basic:1",
// "AlgebraicTrick:Basic", "AlgebraicTrick1:Refined".."AlgebraicTrick5:Refined".
const std::vector<std::string>& lemma_ids();

// The default grid for the lemma's primary variable (rho, eps, T or the
// multiple of the T threshold); secondary parameters are swept over fixed sets.
GridSpec default_grid(std::string_view lemma);

// Throws UnknownLemma.
LemmaReport lemma_grid_check(std::string_view lemma, const GridSpec& grid);
LemmaReport lemma_grid_check(std::string_view lemma);

enum class TailAssumption { Kurtosis, Bounded };

struct TailReport {
    TailAssumption assumption = TailAssumption::Kurtosis;
    int n = 0;
    double delta = 0.0;
    std::int64_t mc_n = 0;
    double empirical = 0.0;
    double standard_error = 0.0;
    double bound = 0.0;
    bool pass = false;
};

// Empirical P(|s^2 - sigma^2| >= delta) over mc_n samples of size n, against the
// Chebyshev form kappa sigma^4/(delta^2 n) or the bounded-difference form
// 2 exp(-delta^2 n / (8 C^4 sigma^4)) with C = 1/sigma for support {-1, 0, 1}.
// Passes iff empirical <= bound + 3 binomial standard errors.
TailReport tail_bound_check(TailAssumption assumption, const ThreePointDist& d, int n, double delta,
                            std::int64_t mc_n, std::uint64_t seed);

nlohmann::json to_json(const LemmaReport& r);
nlohmann::json to_json(const TailReport& r);

}  // namespace neyman
