#pragma once
// Closed-form allocation math for two-arm experiments: the proxy mean squared
// error of the difference-in-means estimator, the clairvoyant Neyman split,
// competitive ratios, and the sample statistics the adaptive designs use.

#include <cstdint>
#include <span>
#include <vector>

namespace neyman {

// Standard deviations of the treated (1) and control (0) outcomes.
// Either may be zero; both are required to be finite and nonnegative.
struct ArmMoments {
    double sigma1 = 0.0;
    double sigma0 = 0.0;

    bool operator==(const ArmMoments&) const = default;
};

struct Allocation {
    std::int64_t t1 = 0;
    std::int64_t t0 = 0;

    std::int64_t total() const noexcept { return t1 + t0; }
    bool operator==(const Allocation&) const = default;
};

struct RealAllocation {
    double t1 = 0.0;
    double t0 = 0.0;

    double total() const noexcept { return t1 + t0; }
};

using OutcomeSample = std::vector<double>;

void validate(const ArmMoments& moments);

// sigma1^2/t1 + sigma0^2/t0. An empty arm contributes 0 when its sigma is 0;
// an empty arm with positive sigma throws InfiniteVariance.
double proxy_mse(const Allocation& alloc, const ArmMoments& moments);
double proxy_mse(const RealAllocation& alloc, const ArmMoments& moments);

// Neyman split T*(w) = sigma(w) / (sigma(1) + sigma(0)) * T, with 0/(0+0) read as 1/2.
RealAllocation clairvoyant_allocation(const ArmMoments& moments, std::int64_t horizon);

// Integer counterpart of the clairvoyant split: the better of floor/ceil of the
// real treated share, restricted to [1, T-1]; ties go to the larger t1.
Allocation rounded_clairvoyant_allocation(const ArmMoments& moments, std::int64_t horizon);

// (sigma(1) + sigma(0))^2 / T.
double optimal_proxy_mse(const ArmMoments& moments, std::int64_t horizon);

// proxy_mse(alloc) / optimal_proxy_mse. Returns +inf when an arm with positive
// sigma received no subjects. Throws ZeroBenchmark when both sigmas are zero.
double competitive_ratio(const Allocation& alloc, const ArmMoments& moments, std::int64_t horizon);

// Competitive ratio of the equal split as a function of rho = sigma(1)/sigma(0):
// 2(rho^2 + 1)/(rho + 1)^2. Accepts +inf (limit 2).
double half_half_ratio(double rho);

double sample_mean(std::span<const double> values);

// Unbiased sample variance (divisor n - 1). Throws TooFewObservations for n < 2.
double sample_variance(std::span<const double> values);

// Same split rule as clairvoyant_allocation, fed estimated standard deviations.
RealAllocation plug_in_allocation(const ArmMoments& sigma_hat, std::int64_t horizon);

double difference_in_means(std::span<const double> treated, std::span<const double> control);

// sqrt(sigma_hat1^2/t1 + sigma_hat0^2/t0), the plug-in standard error reported
// alongside tau_hat. This is a proxy quantity, not a coverage-corrected SE.
double plug_in_standard_error(const Allocation& totals, const ArmMoments& sigma_hat);

// Round half up. All integer stage sizes in the designs go through this.
std::int64_t round_half_up(double x);

}  // namespace neyman
