#include <catch_amalgamated.hpp>

#include <array>
#include <set>
#include <vector>

#include "pessiq/rng.hpp"

using namespace pessiq;

TEST_CASE("splitmix64 reproduces the published reference stream", "[rng]") {
    SplitMix64 rng(0);
    CHECK(rng.next_u64() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next_u64() == 0x6E789E6AA1B965F4ULL);
    CHECK(rng.next_u64() == 0x06C45D188009454FULL);

    SplitMix64 rng2(1234567);
    CHECK(rng2.next_u64() == 0x599ED017FB08FC85ULL);
    CHECK(rng2.next_u64() == 0x2C73F08458540FA5ULL);
    CHECK(rng2.next_u64() == 0x883EBCE5A3F27C77ULL);
}

TEST_CASE("next_double is the top 53 bits scaled into [0,1)", "[rng]") {
    SplitMix64 rng(0);
    CHECK(rng.next_double() == Catch::Approx(0.8833108082136426).epsilon(0).margin(1e-18));
    CHECK(rng.next_double() == Catch::Approx(0.43152799704850997).epsilon(0).margin(1e-18));
    CHECK(rng.next_double() == Catch::Approx(0.026433771592597743).epsilon(0).margin(1e-18));
    SplitMix64 wide(42);
    for (int i = 0; i < 10000; ++i) {
        const double u = wide.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("identical seeds give identical streams", "[rng]") {
    SplitMix64 a(987654321), b(987654321);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("mix64 maps distinct inputs to distinct outputs", "[rng]") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t x = 0; x < 4096; ++x) seen.insert(mix64(x));
    CHECK(seen.size() == 4096);
}

TEST_CASE("next_index draws by inverse CDF", "[rng]") {
    SECTION("point mass always returns its index") {
        SplitMix64 rng(5);
        const std::array<double, 3> probs{0.0, 1.0, 0.0};
        for (int i = 0; i < 200; ++i) REQUIRE(rng.next_index(probs) == 1);
    }
    SECTION("zero-probability entries are never drawn, frequencies match") {
        SplitMix64 rng(7);
        const std::array<double, 4> probs{0.25, 0.0, 0.25, 0.5};
        std::array<int, 4> counts{};
        const int n = 200000;
        for (int i = 0; i < n; ++i) ++counts[rng.next_index(probs)];
        CHECK(counts[1] == 0);
        for (std::size_t k : {std::size_t{0}, std::size_t{2}, std::size_t{3}})
            CHECK(std::abs(counts[k] / static_cast<double>(n) - probs[k]) < 0.005);
    }
    SECTION("a short row falls back to the last positive entry") {
        SplitMix64 rng(11);
        const std::array<double, 3> probs{0.3, 0.3, 0.0};  // sums to 0.6
        for (int i = 0; i < 2000; ++i) REQUIRE(rng.next_index(probs) <= 1);
    }
    SECTION("degenerate rows are rejected") {
        SplitMix64 rng(13);
        const std::array<double, 2> zeros{0.0, 0.0};
        CHECK_THROWS_AS(rng.next_index(zeros), std::invalid_argument);
        CHECK_THROWS_AS(rng.next_index({}), std::invalid_argument);
    }
}

TEST_CASE("fold_seed is deterministic, order-sensitive, and matches its spec", "[rng]") {
    CHECK(fold_seed(0, 0) == 0xE220A8397B1DCDAFULL);
    CHECK(fold_seed(17, 3) == 0x74E97D37E2BA422BULL);
    CHECK(fold_seed(fold_seed(17, 3), 5) == 0x39AB9C8B0DA50A0BULL);
    CHECK(fold_seed(fold_seed(17, 3), 5) != fold_seed(fold_seed(17, 5), 3));
    CHECK(fold_seed(1, 2) != fold_seed(2, 1));
}
