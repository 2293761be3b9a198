#include <doctest.h>

#include <cmath>
#include <sstream>

#include "neyman/data.hpp"
#include "neyman/error.hpp"
#include "neyman/montecarlo.hpp"
#include "neyman/population.hpp"

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

TEST_SUITE("data") {

TEST_CASE("csv ingestion normalizes to clicks per million") {
    std::istringstream in("arm,impressions,clicks\ntreated,1000000,34176\ncontrol,2000000,0\nControl,500000,10\n");
    const ArmArrays a = ingest_csv(in);
    REQUIRE(a.treated.size() == 1);
    CHECK(a.treated[0] == 34176.0);
    REQUIRE(a.control.size() == 2);
    CHECK(a.control[0] == 0.0);
    CHECK(a.control[1] == 20.0);
}

TEST_CASE("csv errors") {
    std::istringstream more("arm,impressions,clicks\ntreated,10,11\ncontrol,10,1\n");
    CHECK(code_of([&] { ingest_csv(more); }) == ErrorCode::ParseError);
    std::istringstream header("a,b,c\ntreated,10,1\n");
    CHECK(code_of([&] { ingest_csv(header); }) == ErrorCode::ParseError);
    std::istringstream one_arm("arm,impressions,clicks\ntreated,10,1\n");
    CHECK(code_of([&] { ingest_csv(one_arm); }) == ErrorCode::EmptyArm);
    std::istringstream junk("arm,impressions,clicks\ntreated,ten,1\ncontrol,10,1\n");
    try {
        ingest_csv(junk);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK(code_of([] { ingest_csv_file("/nonexistent/file.csv"); }) == ErrorCode::NotFound);
}

TEST_CASE("summary statistics") {
    const SummaryStats s = summarize(std::vector<double>{3, 1, 2});
    CHECK(s.n == 3);
    CHECK(s.mean == 2.0);
    CHECK(s.stdev == doctest::Approx(1.0));
    CHECK(s.min == 1.0);
    CHECK(s.median == 2.0);
    CHECK(s.max == 3.0);
    CHECK(summarize(std::vector<double>{5, 5, 5}).stdev == 0.0);
}

TEST_CASE("synthetic click data matches the published moments exactly") {
    for (std::int64_t n : {5, 40, 200}) {
        for (std::uint64_t seed : {0u, 1u, 99u}) {
            const ArmSummary s = summarize(synthetic_table1(n, seed));
            CHECK(s.treated.n == n);
            CHECK(s.treated.mean == doctest::Approx(34176.0).epsilon(1e-6));
            CHECK(s.treated.stdev == doctest::Approx(12256.0).epsilon(1e-6));
            CHECK(s.control.mean == doctest::Approx(53618.0).epsilon(1e-6));
            CHECK(s.control.stdev == doctest::Approx(24850.0).epsilon(1e-6));
            CHECK(s.treated.min > 0.0);
            CHECK(s.control.min > 0.0);
        }
    }
    const ArmSummary d = summarize(synthetic_table1());
    CHECK(d.treated.n == 40);
    CHECK(std::abs(d.treated.mean / 34176.0 - 1.0) < 0.15);
    CHECK(synthetic_table1(40, 3).treated == synthetic_table1(40, 3).treated);
}

TEST_CASE("bootstrap populations") {
    const Population p = bootstrap_population(synthetic_table1());
    REQUIRE(p.true_tau);
    CHECK(*p.true_tau == doctest::Approx(-19442.0).epsilon(1e-9));
    CHECK(p.true_moments->sigma1 == doctest::Approx(12256.0 * std::sqrt(39.0 / 40.0)));

    const Population single = bootstrap_population({{7.5}, {2.0}});
    for (std::uint64_t i = 0; i < 20; ++i) {
        const TrajectoryResult r = run_trajectory(half_half_config(20), single, 3, i);
        CHECK(r.tau_hat == 5.5);
    }
}

TEST_CASE("arrays json round trip") {
    const ArmArrays a = synthetic_table1(10, 2);
    const ArmArrays b = arrays_from_json(to_json(a));
    CHECK(a.treated == b.treated);
    CHECK(a.control == b.control);
}

}

TEST_SUITE("population") {

TEST_CASE("text specs") {
    const Population g = parse_population("gaussian:rho=2");
    CHECK(g.kind == PopulationKind::Gaussian);
    CHECK(g.true_moments->sigma1 == 2.0);
    CHECK(g.true_moments->sigma0 == 1.0);
    const Population t = parse_population("threepoint:p=0.25");
    CHECK(t.true_moments->sigma1 == doctest::Approx(std::sqrt(0.5)));
    const Population b = parse_population("bounded:C=2,rho=3");
    CHECK(b.true_moments->sigma1 == 3.0);
    CHECK(b.scale1 == 6.0);
    CHECK(b.dist1.p_pos == doctest::Approx(1.0 / 8.0));
    CHECK(parse_population("table1").kind == PopulationKind::Empirical);
    CHECK(code_of([] { parse_population("weird"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { parse_population("gaussian:rho=x"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { parse_population("bounded:C=0.5"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("json specs") {
    const Population g = population_from_json({{"kind", "gaussian"}, {"rho", 4}});
    CHECK(g.true_moments->sigma1 == 4.0);
    const Population e = population_from_json({{"kind", "empirical"}, {"treated", {1, 2, 3}}, {"control", {4, 5}}});
    CHECK(*e.true_tau == doctest::Approx(-2.5));
}

TEST_CASE("bounded draws respect the support bound") {
    const Population b = scaled_bounded_population(1.5, 2.0, 1.0);
    CounterStream s(1, 0, StreamTag::TreatedOutcomes);
    std::vector<double> y(100000);
    b.draw(Arm::Treated, s, y);
    double sum2 = 0;
    for (double v : y) {
        CHECK(std::abs(v) <= 1.5 * 2.0 + 1e-12);
        sum2 += v * v;
    }
    CHECK(std::sqrt(sum2 / y.size()) == doctest::Approx(2.0).epsilon(0.02));
}

}
