#include "krrdp/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace krrdp;

TEST_CASE("philox4x32-10 known answers") {
    // Random123 kat_vectors
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are pure functions of seed and key") {
    Stream a(42, {Purpose::InnerMc, 3, 17});
    Stream b(42, {Purpose::InnerMc, 3, 17});
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    std::set<std::uint64_t> firsts;
    for (std::uint32_t stage = 0; stage < 4; ++stage)
        for (std::uint64_t idx = 0; idx < 4; ++idx)
            firsts.insert(Stream(42, {Purpose::InnerMc, stage, idx}).next_u64());
    firsts.insert(Stream(43, {Purpose::InnerMc, 0, 0}).next_u64());
    firsts.insert(Stream(42, {Purpose::OuterSample, 0, 0}).next_u64());
    CHECK(firsts.size() == 18);
}

TEST_CASE("uniform and normal draws have the right moments") {
    Stream rng(7, {});
    const int n = 200000;
    double su = 0.0, sn = 0.0, sn2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    CHECK(std::abs(su / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(sn / n) < 3.0 / std::sqrt(n));
    CHECK(std::abs(sn2 / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("below stays in range and derived seeds differ") {
    Stream rng(1, {});
    for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}
