#include <doctest.h>

#include <cmath>
#include <vector>

#include "neyman/designs.hpp"
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

// n values alternating +scale, -scale: sample sd is scale * sqrt(n / (n - 1)) for even n.
std::vector<double> spread(std::int64_t n, double scale, double center = 0.0) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = center + (i % 2 == 0 ? scale : -scale);
    return v;
}

std::vector<double> constant(std::int64_t n, double c) { return std::vector<double>(static_cast<std::size_t>(n), c); }

}  // namespace

TEST_SUITE("designs") {

TEST_CASE("half-half") {
    Started s = init_half_half(half_half_config(7));
    CHECK(s.first.t1 == 4);
    CHECK(s.first.t0 == 3);
    CHECK(s.first.label == CaseLabel::Init);
    CHECK_FALSE(advance(s.state, constant(4, 1), constant(3, 0)).has_value());
    const Finalized f = finalize(s.state);
    CHECK(f.totals == Allocation{4, 3});
    CHECK(f.tau_hat == 1.0);
}

TEST_CASE("two-stage first stage") {
    CHECK(init_two_stage(two_stage_config(10000, 1.0)).first == StageAllocation{1, 50, 50, CaseLabel::Init, false});
    CHECK(init_two_stage(two_stage_config(16, 1.0)).first == StageAllocation{1, 2, 2, CaseLabel::Init, false});
    CHECK(code_of([] { init_two_stage(two_stage_config(100, 30.0)); }) == ErrorCode::InfeasibleConfig);
}

TEST_CASE("two-stage plug-in case with equal spreads") {
    Started s = init_two_stage(two_stage_config(10000, 1.0));
    const StageAllocation next = next_two_stage(s.state, spread(50, 2.0), spread(50, 2.0, 5.0));
    CHECK(next.label == CaseLabel::Plugin2Stage);
    CHECK(next.t1 == 4950);
    CHECK(next.t0 == 4950);
}

TEST_CASE("two-stage plug-in case with a 3:1 spread") {
    Started s = init_two_stage(two_stage_config(10000, 1.0));
    const StageAllocation next = next_two_stage(s.state, spread(50, 3.0), spread(50, 1.0));
    CHECK(next.label == CaseLabel::Plugin2Stage);
    CHECK(next.t1 == 7450);
    CHECK(next.t0 == 2450);
}

TEST_CASE("two-stage constant control sends the rest to treatment") {
    Started s = init_two_stage(two_stage_config(10000, 1.0));
    const StageAllocation next = next_two_stage(s.state, spread(50, 1.0), constant(50, 3.0));
    CHECK(next.label == CaseLabel::AllTreated);
    CHECK(next.t1 == 9900);
    CHECK(next.t0 == 0);
    // Mirror: constant treated arm.
    Started m = init_two_stage(two_stage_config(10000, 1.0));
    const StageAllocation mirrored = next_two_stage(m.state, constant(50, 3.0), spread(50, 1.0));
    CHECK(mirrored.label == CaseLabel::AllControl);
    CHECK(mirrored.t1 == 0);
    CHECK(mirrored.t0 == 9900);
}

TEST_CASE("two-stage run finalizes with constant arms") {
    Started s = init_two_stage(two_stage_config(16, 1.0));
    const auto next = advance(s.state, constant(2, 4.0), constant(2, 4.0));
    REQUIRE(next);
    CHECK(*next == StageAllocation{2, 6, 6, CaseLabel::Plugin2Stage, false});
    CHECK(s.state.case_path == std::vector<CaseLabel>{CaseLabel::Init, CaseLabel::Plugin2Stage});
    CHECK_FALSE(advance(s.state, constant(6, 4.0), constant(6, 4.0)).has_value());
    const Finalized f = finalize(s.state);
    CHECK(f.totals == Allocation{8, 8});
    CHECK(f.tau_hat == 0.0);
}

TEST_CASE("state machine errors") {
    Started s = init_two_stage(two_stage_config(16, 1.0));
    CHECK(code_of([&] { finalize(s.state); }) == ErrorCode::IncompleteExperiment);
    CHECK(code_of([&] { advance(s.state, constant(3, 1.0), constant(2, 1.0)); }) == ErrorCode::CountMismatch);
    CHECK(s.state.stage == 1);
    CHECK(s.state.obs1.empty());
    advance(s.state, constant(2, 1.0), constant(2, 1.0));
    advance(s.state, constant(6, 1.0), constant(6, 1.0));
    CHECK(s.state.complete());
    CHECK(code_of([&] { advance(s.state, constant(1, 1.0), constant(1, 1.0)); }) == ErrorCode::WrongStage);
}

TEST_CASE("multi-stage first stage and feasibility") {
    const Started s = init_multi_stage(multi_stage_config(1000, thm3_schedule(3)));
    CHECK(s.first.t1 == 12);
    CHECK(s.first.t0 == 12);
    CHECK(check_config(multi_stage_config(16, thm3_schedule(3))).ok);
    CHECK(code_of([] { init_multi_stage(multi_stage_config(8, thm3_schedule(3))); }) == ErrorCode::InfeasibleConfig);
}

TEST_CASE("multi-stage with equal spreads stays balanced") {
    Started s = init_multi_stage(multi_stage_config(1000, thm3_schedule(3)));
    StageAllocation cur = s.first;
    std::optional<StageAllocation> next = cur;
    while (next) {
        cur = *next;
        next = advance(s.state, spread(cur.t1, 1.0), spread(cur.t0, 1.0, 7.0));
    }
    CHECK(s.state.case_path == std::vector<CaseLabel>{CaseLabel::Init, CaseLabel::Case3, CaseLabel::LastCase2});
    const Finalized f = finalize(s.state);
    CHECK(f.totals.total() == 1000);
    CHECK(std::abs(f.totals.t1 - f.totals.t0) <= 2);
}

TEST_CASE("multi-stage constant control freezes at stage 1") {
    const Schedule sched = thm3_schedule(4);
    Started s = init_multi_stage(multi_stage_config(10000, sched));
    const std::int64_t c0 = round_half_up(sched.betas[0] / 2.0 * std::pow(10000.0, 0.25));
    CHECK(c0 == 15);
    std::optional<StageAllocation> next = s.first;
    while (next) next = advance(s.state, spread(next->t1, 1.0), constant(next->t0, 2.0));
    REQUIRE(s.state.case_path.size() == 4);
    CHECK(s.state.case_path[1] == CaseLabel::Case1);
    CHECK(s.state.frozen_arm == Arm::Control);
    CHECK(finalize(s.state).totals == Allocation{10000 - c0, c0});
}

TEST_CASE("multi-stage case 2 tops up control then freezes it") {
    // T = 1000, M = 3: h1 = 12.16, h2 = 49.32. sigma ratio 30:1 puts S0 = 1000/31 = 32.3 in between.
    Started s = init_multi_stage(multi_stage_config(1000, thm3_schedule(3)));
    REQUIRE(s.first.t1 == 12);
    const auto second = advance(s.state, spread(12, 30.0), spread(12, 1.0));
    REQUIRE(second);
    CHECK(second->label == CaseLabel::Case2);
    const std::int64_t b2 = round_half_up(thm3_schedule(3).betas[1] * 100.0);
    CHECK(second->t0 == 32 - 12);
    CHECK(second->t1 == b2 - 32 - 12);
    const auto third = advance(s.state, spread(second->t1, 30.0), spread(second->t0, 1.0));
    REQUIRE(third);
    CHECK(third->t0 == 0);
    CHECK_FALSE(advance(s.state, spread(third->t1, 30.0), {}).has_value());
    CHECK(finalize(s.state).totals == Allocation{968, 32});
}

TEST_CASE("swapping the arms mirrors the decisions") {
    Started a = init_multi_stage(multi_stage_config(1000, thm3_schedule(3)));
    Started b = init_multi_stage(multi_stage_config(1000, thm3_schedule(3)));
    const auto na = advance(a.state, spread(12, 30.0), spread(12, 1.0));
    const auto nb = advance(b.state, spread(12, 1.0), spread(12, 30.0));
    REQUIRE(na);
    REQUIRE(nb);
    CHECK(nb->label == mirror(na->label));
    CHECK(nb->label == CaseLabel::Case4);
    CHECK(nb->t1 == na->t0);
    CHECK(nb->t0 == na->t1);
}

TEST_CASE("every schedule finishes on exactly T") {
    for (int M = 3; M <= 6; ++M) {
        for (double ratio : {0.01, 0.2, 1.0, 5.0, 100.0}) {
            Started s = init_multi_stage(multi_stage_config(777, thm3_schedule(M)));
            std::optional<StageAllocation> next = s.first;
            while (next) next = advance(s.state, spread(next->t1, ratio), spread(next->t0, 1.0));
            CHECK(finalize(s.state).totals.total() == 777);
            CHECK(static_cast<int>(s.state.case_path.size()) == M);
        }
    }
}

TEST_CASE("randomize_stage") {
    CounterStream s(1, 0, StreamTag::Assignment);
    CHECK(randomize_stage({1, 2, 0, CaseLabel::Init, false}, s) == std::vector<int>{1, 1});
    CounterStream a(5, 1, StreamTag::Assignment);
    CounterStream b(5, 1, StreamTag::Assignment);
    const auto x = randomize_stage({1, 1, 1, CaseLabel::Init, false}, a);
    CHECK(x == randomize_stage({1, 1, 1, CaseLabel::Init, false}, b));
    CHECK((x == std::vector<int>{1, 0} || x == std::vector<int>{0, 1}));

    CounterStream r(9, 0, StreamTag::Assignment);
    int treated[5] = {};
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const auto v = randomize_stage({1, 3, 2, CaseLabel::Init, false}, r);
        for (int j = 0; j < 5; ++j) treated[j] += v[static_cast<std::size_t>(j)];
    }
    for (int c : treated) CHECK(std::abs(static_cast<double>(c) / draws - 0.6) < 0.01);
}

TEST_CASE("labels round-trip through text") {
    for (CaseLabel l : {CaseLabel::Init, CaseLabel::Case1, CaseLabel::Case5, CaseLabel::LastCase3, CaseLabel::Plugin2Stage,
                        CaseLabel::AllTreated}) {
        CHECK(case_label_from_string(to_string(l)) == l);
        CHECK(mirror(mirror(l)) == l);
    }
    CHECK(design_kind_from_string("mstage") == DesignKind::MultiStage);
}

}
