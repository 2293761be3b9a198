#include "neyman/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "neyman/error.hpp"

namespace neyman {

namespace {

void require_horizon(std::int64_t horizon) {
    if (horizon < 1) fail(ErrorCode::InvalidArgument, "horizon T must be >= 1");
}

double arm_term(double sigma, double count, const char* arm) {
    if (count < 0.0) fail(ErrorCode::InvalidArgument, std::string("negative count for ") + arm + " arm");
    if (count == 0.0) {
        if (sigma == 0.0) return 0.0;
        fail(ErrorCode::InfiniteVariance,
             std::string(arm) + " arm has zero subjects but positive standard deviation");
    }
    return sigma * sigma / count;
}

}  // namespace

void validate(const ArmMoments& moments) {
    if (!(moments.sigma1 >= 0.0) || !(moments.sigma0 >= 0.0) || !std::isfinite(moments.sigma1) ||
        !std::isfinite(moments.sigma0)) {
        fail(ErrorCode::InvalidArgument, "standard deviations must be finite and nonnegative");
    }
}

double proxy_mse(const Allocation& alloc, const ArmMoments& moments) {
    return proxy_mse(RealAllocation{static_cast<double>(alloc.t1), static_cast<double>(alloc.t0)}, moments);
}

double proxy_mse(const RealAllocation& alloc, const ArmMoments& moments) {
    validate(moments);
    return arm_term(moments.sigma1, alloc.t1, "treated") + arm_term(moments.sigma0, alloc.t0, "control");
}

RealAllocation clairvoyant_allocation(const ArmMoments& moments, std::int64_t horizon) {
    validate(moments);
    require_horizon(horizon);
    const double total = static_cast<double>(horizon);
    const double sum = moments.sigma1 + moments.sigma0;
    if (sum == 0.0) return {total / 2.0, total / 2.0};
    const double t1 = moments.sigma1 / sum * total;
    return {t1, total - t1};
}

Allocation rounded_clairvoyant_allocation(const ArmMoments& moments, std::int64_t horizon) {
    if (horizon < 2) fail(ErrorCode::InvalidArgument, "rounded allocation needs T >= 2");
    const RealAllocation real = clairvoyant_allocation(moments, horizon);
    const auto clamp = [horizon](std::int64_t t) { return std::clamp<std::int64_t>(t, 1, horizon - 1); };
    const std::int64_t lo = clamp(static_cast<std::int64_t>(std::floor(real.t1)));
    const std::int64_t hi = clamp(static_cast<std::int64_t>(std::ceil(real.t1)));
    const Allocation a{lo, horizon - lo};
    const Allocation b{hi, horizon - hi};
    return proxy_mse(a, moments) < proxy_mse(b, moments) ? a : b;
}

double optimal_proxy_mse(const ArmMoments& moments, std::int64_t horizon) {
    validate(moments);
    require_horizon(horizon);
    const double sum = moments.sigma1 + moments.sigma0;
    return sum * sum / static_cast<double>(horizon);
}

double competitive_ratio(const Allocation& alloc, const ArmMoments& moments, std::int64_t horizon) {
    validate(moments);
    if (alloc.total() != horizon) {
        fail(ErrorCode::InvalidArgument, "allocation total " + std::to_string(alloc.total()) +
                                             " does not match horizon " + std::to_string(horizon));
    }
    if (moments.sigma1 == 0.0 && moments.sigma0 == 0.0) {
        fail(ErrorCode::ZeroBenchmark, "competitive ratio undefined when both standard deviations are zero");
    }
    double value;
    try {
        value = proxy_mse(alloc, moments);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InfiniteVariance) return std::numeric_limits<double>::infinity();
        throw;
    }
    return value / optimal_proxy_mse(moments, horizon);
}

double half_half_ratio(double rho) {
    if (!(rho >= 0.0)) fail(ErrorCode::InvalidArgument, "rho must be nonnegative");
    if (std::isinf(rho)) return 2.0;
    // Rewritten in 1/rho for large rho so rho^2 cannot overflow.
    if (rho > 1.0) {
        const double inv = 1.0 / rho;
        return 2.0 * (1.0 + inv * inv) / ((1.0 + inv) * (1.0 + inv));
    }
    return 2.0 * (rho * rho + 1.0) / ((rho + 1.0) * (rho + 1.0));
}

double sample_mean(std::span<const double> values) {
    if (values.empty()) fail(ErrorCode::EmptyArm, "mean of an empty sample");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
    if (values.size() < 2) {
        fail(ErrorCode::TooFewObservations,
             "sample variance needs at least 2 observations, got " + std::to_string(values.size()));
    }
    const double mean = sample_mean(values);
    double ss = 0.0;
    for (double v : values) {
        const double d = v - mean;
        ss += d * d;
    }
    return ss / static_cast<double>(values.size() - 1);
}

RealAllocation plug_in_allocation(const ArmMoments& sigma_hat, std::int64_t horizon) {
    return clairvoyant_allocation(sigma_hat, horizon);
}

double difference_in_means(std::span<const double> treated, std::span<const double> control) {
    if (treated.empty()) fail(ErrorCode::EmptyArm, "treated sample is empty");
    if (control.empty()) fail(ErrorCode::EmptyArm, "control sample is empty");
    return sample_mean(treated) - sample_mean(control);
}

double plug_in_standard_error(const Allocation& totals, const ArmMoments& sigma_hat) {
    return std::sqrt(proxy_mse(totals, sigma_hat));
}

std::int64_t round_half_up(double x) {
    return static_cast<std::int64_t>(std::floor(x + 0.5));
}

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InfiniteVariance: return "InfiniteVariance";
        case ErrorCode::ZeroBenchmark: return "ZeroBenchmark";
        case ErrorCode::TooFewObservations: return "TooFewObservations";
        case ErrorCode::EmptyArm: return "EmptyArm";
        case ErrorCode::InfeasibleConfig: return "InfeasibleConfig";
        case ErrorCode::WrongStage: return "WrongStage";
        case ErrorCode::CountMismatch: return "CountMismatch";
        case ErrorCode::IncompleteExperiment: return "IncompleteExperiment";
        case ErrorCode::BadM: return "BadM";
        case ErrorCode::TooSmallT: return "TooSmallT";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::InfiniteKL: return "InfiniteKL";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnknownLemma: return "UnknownLemma";
        case ErrorCode::MismatchedHorizon: return "MismatchedHorizon";
        case ErrorCode::NotFound: return "NotFound";
    }
    return "Unknown";
}

}  // namespace neyman
