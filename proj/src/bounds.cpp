#include "neyman/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "neyman/error.hpp"
#include "neyman/tuning.hpp"

namespace neyman {

std::string_view to_string(BoundSource source) noexcept {
    switch (source) {
        case BoundSource::Thm1: return "Thm1";
        case BoundSource::Thm2: return "Thm2";
        case BoundSource::Thm3: return "Thm3";
        case BoundSource::Thm4: return "Thm4";
        case BoundSource::Cor1: return "Cor1";
        case BoundSource::Cor2: return "Cor2";
    }
    return "Unknown";
}

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::OutOfRange, what);
}

void require_kappa(double kappa1, double kappa0) {
    require(kappa1 >= 1.0 && kappa0 >= 1.0 && std::isfinite(kappa1) && std::isfinite(kappa0),
            "kurtosis values must be finite and >= 1");
}

BoundReport with_floor(BoundSource source, double ratio, double raw_floor) {
    BoundReport r;
    r.source = source;
    r.ratio_bound = ratio;
    r.vacuous = raw_floor <= 0.0;
    r.probability_floor = std::clamp(raw_floor, 0.0, 1.0);
    return r;
}

}  // namespace

BoundReport thm1_bound() {
    return with_floor(BoundSource::Thm1, 2.0, 1.0);
}

BoundReport thm2_bound(std::int64_t T, double eps, double kappa1, double kappa0) {
    require(T >= 16, "Thm2 needs T >= 16");
    require(eps > 0.0 && eps < 0.125, "Thm2 needs eps in (0, 1/8)");
    require_kappa(kappa1, kappa0);
    const double t = static_cast<double>(T);
    return with_floor(BoundSource::Thm2, 1.0 + std::pow(t, -0.5 + eps),
                      1.0 - (kappa1 + kappa0) * std::pow(t, -eps));
}

BoundReport thm3_bound(int M, std::int64_t T, double eps, double kappa1, double kappa0) {
    require(M >= 3, "Thm3 needs M >= 3");
    require(T >= 16, "Thm3 needs T >= 16");
    require(eps > 0.0 && eps <= std::min(1.0 / M, 0.01), "Thm3 needs eps in (0, min(1/M, 1/100)]");
    require_kappa(kappa1, kappa0);
    const double t = static_cast<double>(T);
    const double exponent = -static_cast<double>(M - 1) / M + eps;
    return with_floor(BoundSource::Thm3, 1.0 + 4.0 * std::pow(15.0, -1.0 / M) * std::pow(t, exponent),
                      1.0 - (M - 1) * (kappa1 + kappa0) * std::pow(t, -eps));
}

double thm4_bound(std::int64_t T) {
    require(T >= 4, "Thm4 needs T >= 4");
    return 1.0 + 1.0 / (480.0 * static_cast<double>(T));
}

BoundReport cor_bounds(BoundSource which, int M, std::int64_t T, double C) {
    if (!(C >= 1.0) || !std::isfinite(C)) fail(ErrorCode::OutOfRange, "C must be finite and >= 1");
    const double t = static_cast<double>(T);
    const double logT = std::log(t);
    if (which == BoundSource::Cor1) {
        if (t < cor1_min_horizon(C)) {
            std::ostringstream msg;
            msg << "Cor1 needs T >= 320^(5/4) C^5 = " << cor1_min_horizon(C);
            fail(ErrorCode::TooSmallT, msg.str());
        }
        return with_floor(BoundSource::Cor1, 1.0 + 5.0 * C * C * std::sqrt(logT / t), 1.0);
    }
    if (which == BoundSource::Cor2) {
        if (M < 3) fail(ErrorCode::BadM, "Cor2 needs M >= 3");
        if (t < cor2_min_horizon(C)) {
            std::ostringstream msg;
            msg << "Cor2 needs T >= (5000/3)^(5/4) C^5 = " << cor2_min_horizon(C);
            fail(ErrorCode::TooSmallT, msg.str());
        }
        const double a = static_cast<double>(M - 1) / M;
        const double ratio = 1.0 + 97.0 * std::pow(1000.0 / 3.0, -1.0 / M) * std::pow(C, 4.0 * a) *
                                       std::pow(t, -a) * std::pow(logT, a);
        return with_floor(BoundSource::Cor2, ratio, 1.0);
    }
    fail(ErrorCode::InvalidArgument, "cor_bounds takes Cor1 or Cor2");
}

void validate(const ThreePointDist& d) {
    const bool nonneg = d.p_neg >= 0.0 && d.p_zero >= 0.0 && d.p_pos >= 0.0;
    if (!nonneg || std::abs(d.p_neg + d.p_zero + d.p_pos - 1.0) > 1e-12) {
        fail(ErrorCode::InvalidArgument, "three-point probabilities must be nonnegative and sum to 1");
    }
}

ThreePointDist symmetric_three_point(double p) {
    if (!(p >= 0.0 && p <= 0.5)) fail(ErrorCode::InvalidArgument, "symmetric three-point needs p in [0, 1/2]");
    return {p, 1.0 - 2.0 * p, p};
}

LowerBoundInstance lower_bound_instance(std::int64_t T) {
    require(T >= 4, "lower-bound instance needs T >= 4");
    LowerBoundInstance inst;
    inst.eps = 1.0 / (3.0 * std::sqrt(static_cast<double>(T)));
    inst.nu = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    inst.nu_prime = {1.0 / 3.0 + inst.eps / 2.0, 1.0 / 3.0 - inst.eps, 1.0 / 3.0 + inst.eps / 2.0};
    return inst;
}

double three_point_mean(const ThreePointDist& d) {
    return d.p_pos - d.p_neg;
}

double three_point_variance(const ThreePointDist& d) {
    const double mu = three_point_mean(d);
    return d.p_pos + d.p_neg - mu * mu;
}

ThreePointMoments three_point_moments(const ThreePointDist& d) {
    validate(d);
    ThreePointMoments m;
    m.mean = three_point_mean(d);
    m.variance = three_point_variance(d);
    const auto c4 = [&](double x) { return std::pow(x - m.mean, 4.0); };
    m.fourth_central = d.p_neg * c4(-1.0) + d.p_zero * c4(0.0) + d.p_pos * c4(1.0);
    if (m.variance <= 0.0) fail(ErrorCode::ZeroVariance, "kurtosis undefined for a point mass");
    m.kurtosis = m.fourth_central / (m.variance * m.variance);
    return m;
}

double kl_three_point(const ThreePointDist& a, const ThreePointDist& b) {
    validate(a);
    validate(b);
    double kl = 0.0;
    const double pa[] = {a.p_neg, a.p_zero, a.p_pos};
    const double pb[] = {b.p_neg, b.p_zero, b.p_pos};
    for (int i = 0; i < 3; ++i) {
        if (pa[i] == 0.0) continue;
        if (pb[i] == 0.0) fail(ErrorCode::InfiniteKL, "second distribution misses support of the first");
        kl += pa[i] * std::log(pa[i] / pb[i]);
    }
    return std::max(kl, 0.0);
}

nlohmann::json to_json(const BoundReport& report) {
    return {{"source", std::string(to_string(report.source))},
            {"ratio_bound", report.ratio_bound},
            {"probability_floor", report.probability_floor},
            {"vacuous", report.vacuous}};
}

nlohmann::json to_json(const ThreePointDist& d) {
    return {{"p_neg", d.p_neg}, {"p_zero", d.p_zero}, {"p_pos", d.p_pos}};
}

}  // namespace neyman
