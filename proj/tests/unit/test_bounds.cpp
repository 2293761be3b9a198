#include <doctest.h>

#include <cmath>

#include "neyman/bounds.hpp"
#include "neyman/error.hpp"

using namespace neyman;

namespace {
ErrorCode code_of(const auto& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}
}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("thm1") {
    CHECK(thm1_bound().ratio_bound == 2.0);
    CHECK(thm1_bound().probability_floor == 1.0);
}

TEST_CASE("thm2") {
    const BoundReport r = thm2_bound(1000000, 0.1, 3, 3);
    CHECK(r.ratio_bound == doctest::Approx(1.0 + std::pow(10.0, -2.4)));
    CHECK(r.ratio_bound == doctest::Approx(1.00398).epsilon(1e-5));
    CHECK(r.probability_floor == 0.0);
    CHECK(r.vacuous);
    CHECK(thm2_bound(16, 1e-9, 3, 3).ratio_bound == doctest::Approx(1.25).epsilon(1e-6));
    CHECK(thm2_bound(1000000, 0.1, 2, 5).probability_floor == thm2_bound(1000000, 0.1, 5, 2).probability_floor);
    const BoundReport big = thm2_bound(1000000000000LL, 0.12, 1.5, 1.5);
    CHECK(big.probability_floor == doctest::Approx(1.0 - 3.0 * std::pow(1e12, -0.12)));
    CHECK_FALSE(big.vacuous);
    CHECK(code_of([] { thm2_bound(15, 0.1, 3, 3); }) == ErrorCode::OutOfRange);
    CHECK(code_of([] { thm2_bound(100, 0.2, 3, 3); }) == ErrorCode::OutOfRange);
}

TEST_CASE("thm3") {
    const BoundReport r = thm3_bound(3, 1000000, 0.01, 3, 3);
    CHECK(r.ratio_bound == doctest::Approx(1.0 + 4.0 * std::pow(15.0, -1.0 / 3.0) * std::pow(10.0, 6.0 * (-2.0 / 3.0 + 0.01))));
    CHECK_NOTHROW(thm3_bound(3, 16, 0.01, 3, 3));
    // The rate exponent tends to -1 + eps as M grows.
    const double T = 1e8;
    double previous = 10.0;
    for (int M = 3; M <= 40; ++M) {
        const double excess = thm3_bound(M, static_cast<std::int64_t>(T), 0.001, 3, 3).ratio_bound - 1.0;
        CHECK(excess < previous);
        previous = excess;
    }
    CHECK(code_of([] { thm3_bound(3, 1000, 0.5, 3, 3); }) == ErrorCode::OutOfRange);
}

TEST_CASE("thm4") {
    CHECK(thm4_bound(480) == doctest::Approx(1.0 + 1.0 / 230400.0).epsilon(1e-15));
    CHECK(thm4_bound(4) == doctest::Approx(1.000520833333).epsilon(1e-12));
    for (std::int64_t T = 4; T < 2000; ++T) CHECK(thm4_bound(T + 1) < thm4_bound(T));
    CHECK(code_of([] { thm4_bound(3); }) == ErrorCode::OutOfRange);
}

TEST_CASE("corollaries") {
    const double T = 2e6;
    CHECK(cor_bounds(BoundSource::Cor1, 2, 2000000, 1.0).ratio_bound ==
          doctest::Approx(1.0 + 5.0 * std::sqrt(std::log(T) / T)));
    CHECK(code_of([] { cor_bounds(BoundSource::Cor1, 2, 1000, 1.0); }) == ErrorCode::TooSmallT);
    CHECK(code_of([] { cor_bounds(BoundSource::Cor2, 3, 1000, 1.0); }) == ErrorCode::TooSmallT);
    const double lo = cor_bounds(BoundSource::Cor2, 3, 100000000, 1.0).ratio_bound;
    const double hi = cor_bounds(BoundSource::Cor2, 8, 100000000, 1.0).ratio_bound;
    CHECK(hi < lo);
}

TEST_CASE("lower-bound instance") {
    const LowerBoundInstance inst = lower_bound_instance(9);
    CHECK(inst.eps == doctest::Approx(1.0 / 9.0));
    CHECK(inst.nu_prime.p_neg == doctest::Approx(7.0 / 18.0));
    CHECK(inst.nu_prime.p_zero == doctest::Approx(2.0 / 9.0));
    CHECK(inst.nu_prime.p_pos == doctest::Approx(7.0 / 18.0));
    CHECK(three_point_variance(inst.nu) == doctest::Approx(2.0 / 3.0));
    CHECK(three_point_variance(inst.nu_prime) == doctest::Approx(2.0 / 3.0 + inst.eps));
    CHECK(three_point_mean(inst.nu_prime) == doctest::Approx(0.0));
    CHECK(kl_three_point(inst.nu, inst.nu_prime) <= 1.0 / 18.0);
    CHECK(kl_three_point(inst.nu_prime, inst.nu) <= 1.0 / 18.0);
    CHECK(code_of([] { lower_bound_instance(3); }) == ErrorCode::OutOfRange);
}

TEST_CASE("three-point moments") {
    const ThreePointMoments m = three_point_moments({1.0 / 3, 1.0 / 3, 1.0 / 3});
    CHECK(m.mean == doctest::Approx(0.0));
    CHECK(m.variance == doctest::Approx(2.0 / 3.0));
    CHECK(m.kurtosis == doctest::Approx(1.5));
    for (double p : {0.05, 0.2, 0.4}) CHECK(three_point_variance(symmetric_three_point(p)) == doctest::Approx(2 * p));
    CHECK(code_of([] { three_point_moments({0, 1, 0}); }) == ErrorCode::ZeroVariance);
    CHECK(code_of([] { validate(ThreePointDist{0.5, 0.6, 0.1}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("kl divergence") {
    const ThreePointDist u{1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(kl_three_point(u, u) == 0.0);
    CHECK(kl_three_point({0.5, 0.0, 0.5}, u) == doctest::Approx(std::log(1.5)));
    CHECK(code_of([&] { kl_three_point(u, {0.5, 0.0, 0.5}); }) == ErrorCode::InfiniteKL);
}

}
