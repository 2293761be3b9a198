#pragma once
// Closed-form competitive-ratio guarantees and the three-point lower-bound instance.

#include <cstdint>
#include <string_view>

#include <json.hpp>

namespace neyman {

enum class BoundSource { Thm1, Thm2, Thm3, Thm4, Cor1, Cor2 };

std::string_view to_string(BoundSource source) noexcept;

struct BoundReport {
    double ratio_bound = 1.0;
    // Clamped to [0, 1]; 1 for in-expectation results.
    double probability_floor = 1.0;
    bool vacuous = false;
    BoundSource source = BoundSource::Thm1;
};

// Half-half is within a factor 2 of the clairvoyant optimum, surely.
BoundReport thm1_bound();

// 1 + T^(-1/2 + eps) with probability >= 1 - (kappa1 + kappa0) T^(-eps).
// T >= 16, eps in (0, 1/8), kurtoses >= 1.
BoundReport thm2_bound(std::int64_t T, double eps, double kappa1, double kappa0);

// 1 + 4 * 15^(-1/M) T^(-(M-1)/M + eps) with probability >= 1 - (M-1)(kappa1 + kappa0) T^(-eps).
// M >= 3, T >= 16, eps in (0, min(1/M, 1/100)].
BoundReport thm3_bound(int M, std::int64_t T, double eps, double kappa1, double kappa0);

// No design beats 1 + 1/(480 T) in expectation on the three-point instance. T >= 4.
double thm4_bound(std::int64_t T);

// In-expectation bounds under bounded support |Y| <= C sigma. M is ignored for Cor1.
BoundReport cor_bounds(BoundSource which, int M, std::int64_t T, double C);

// Distribution on {-1, 0, +1}.
struct ThreePointDist {
    double p_neg = 0.0;
    double p_zero = 1.0;
    double p_pos = 0.0;
};

void validate(const ThreePointDist& d);
ThreePointDist symmetric_three_point(double p);

struct LowerBoundInstance {
    ThreePointDist nu;
    ThreePointDist nu_prime;
    double eps = 0.0;
};

// eps = 1/(3 sqrt T); nu uniform, nu' = (1/3 + eps/2, 1/3 - eps, 1/3 + eps/2).
LowerBoundInstance lower_bound_instance(std::int64_t T);

struct ThreePointMoments {
    double mean = 0.0;
    double variance = 0.0;
    // E[(Z - EZ)^4] / sigma^4.
    double kurtosis = 0.0;
    double fourth_central = 0.0;
};

// Throws ZeroVariance when the distribution is a point mass.
ThreePointMoments three_point_moments(const ThreePointDist& d);
double three_point_mean(const ThreePointDist& d);
double three_point_variance(const ThreePointDist& d);

// sum a_i ln(a_i / b_i). Throws InfiniteKL if b_i = 0 < a_i.
double kl_three_point(const ThreePointDist& a, const ThreePointDist& b);

nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const ThreePointDist& d);

}  // namespace neyman
