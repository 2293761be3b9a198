#include <doctest.h>

#include <cmath>
#include <set>

#include "neyman/rng.hpp"

using namespace neyman;

TEST_SUITE("rng") {

TEST_CASE("philox4x32-10 known-answer vectors") {
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and separated by seed, index and tag") {
    CounterStream a(7, 3, StreamTag::TreatedOutcomes);
    CounterStream b(7, 3, StreamTag::TreatedOutcomes);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    std::set<std::uint64_t> firsts;
    firsts.insert(CounterStream(7, 3, StreamTag::TreatedOutcomes).next_u64());
    firsts.insert(CounterStream(7, 3, StreamTag::ControlOutcomes).next_u64());
    firsts.insert(CounterStream(7, 4, StreamTag::TreatedOutcomes).next_u64());
    firsts.insert(CounterStream(8, 3, StreamTag::TreatedOutcomes).next_u64());
    CHECK(firsts.size() == 4);
}

TEST_CASE("uniform and normal draws have the right moments") {
    CounterStream s(1, 0, StreamTag::Oracle);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        su += u;
        const double z = s.normal();
        sn += z;
        sn2 += z * z;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(s.uniform_pos() > 0.0);
}

TEST_CASE("below is uniform on [0, n)") {
    CounterStream s(2, 0, StreamTag::Assignment);
    int counts[5] = {};
    for (int i = 0; i < 100000; ++i) {
        const auto k = s.below(5);
        REQUIRE(k < 5);
        ++counts[k];
    }
    for (int c : counts) CHECK(std::abs(c - 20000) < 600);
}

}
