#include <doctest.h>

#include <algorithm>
#include <array>
#include <random>

#include "oracles.hpp"
#include "setsim/error.hpp"
#include "setsim/scoring.hpp"

using namespace setsim;

namespace {
const std::vector<Points> kReferenceCoefficients{1, 4, 9};
}

TEST_CASE("worked example from the human-study rules") {
    const auto v = holding_value(ResourceVector{10, 15, 20}, kReferenceCoefficients);
    CHECK(v.triples() == 10);
    CHECK(v.pairs() == 5);
    CHECK(v.singles() == 5);
    CHECK(v.total_points == 115);
}

TEST_CASE("holding_value examples") {
    CHECK(holding_value(ResourceVector{0, 0, 0}, kReferenceCoefficients).total_points == 0);
    CHECK(holding_value(ResourceVector{5, 5, 5}, kReferenceCoefficients).total_points == 45);

    // Oracle first: exhaustive packing says 9 + 1 beats 4 + 4.
    CHECK(oracle::best_packing_n3(1, 1, 2, 1, 4, 9) == 10);
    CHECK(holding_value(ResourceVector{1, 1, 2}, kReferenceCoefficients).total_points == 10);
}

TEST_CASE("coefficient order is enforced") {
    try {
        holding_value(ResourceVector{1, 1, 1}, std::vector<Points>{4, 4, 9});
        FAIL("expected CoefficientOrderViolation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CoefficientOrderViolation);
    }
}

TEST_CASE("breakdown total matches its components") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const ResourceVector h{rng() % 40, rng() % 40, rng() % 40};
        const auto v = holding_value(h, kReferenceCoefficients);
        CHECK(v.total_points == static_cast<Points>(9 * v.triples() + 4 * v.pairs() + v.singles()));
        CHECK(3 * v.triples() + 2 * v.pairs() + v.singles() == h.total());
    }
}

TEST_CASE("closed form equals brute-force packing for all holdings up to 12") {
    for (std::int64_t a = 0; a <= 12; ++a) {
        for (std::int64_t b = 0; b <= 12; ++b) {
            for (std::int64_t c = 0; c <= 12; ++c) {
                const auto expected = oracle::best_packing_n3(a, b, c, 1, 4, 9);
                const auto got = holding_value(ResourceVector{Units(a), Units(b), Units(c)}, kReferenceCoefficients);
                REQUIRE(got.total_points == expected);
            }
        }
    }
}

TEST_CASE("greedy tiering matches the packing search for four types with square coefficients") {
    const std::vector<Points> squares{1, 4, 9, 16};
    oracle::PackingSearch search(squares);
    for (std::int64_t a = 0; a <= 4; ++a)
        for (std::int64_t b = 0; b <= 4; ++b)
            for (std::int64_t c = 0; c <= 4; ++c)
                for (std::int64_t d = 0; d <= 4; ++d) {
                    const auto got = holding_value(ResourceVector{Units(a), Units(b), Units(c), Units(d)}, squares);
                    REQUIRE(got.total_points == search.best({a, b, c, d}));
                }
}

TEST_CASE("greedy tiering is the scoring rule even where it is not the best packing") {
    // With r = (1,4,5) three pairs (12) beat two triples (10); scoring still
    // follows the widest-combination-first rule.
    const std::vector<Points> flat{1, 4, 5};
    CHECK(oracle::best_packing_n3(2, 2, 2, 1, 4, 5) == 12);
    CHECK(holding_value(ResourceVector{2, 2, 2}, flat).total_points == 10);
}

TEST_CASE("monotone in every resource and symmetric under permutation") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        std::array<Units, 3> q{rng() % 30, rng() % 30, rng() % 30};
        const auto base = holding_value(ResourceVector{q[0], q[1], q[2]}, kReferenceCoefficients).total_points;
        for (int t = 0; t < 3; ++t) {
            auto more = q;
            ++more[t];
            CHECK(holding_value(ResourceVector{more[0], more[1], more[2]}, kReferenceCoefficients).total_points >= base);
        }
        auto perm = q;
        std::sort(perm.begin(), perm.end());
        do {
            CHECK(holding_value(ResourceVector{perm[0], perm[1], perm[2]}, kReferenceCoefficients).total_points == base);
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
}

TEST_CASE("breach sign convention") {
    CHECK(compute_breach(ResourceVector{5, 0, 0}, ResourceVector{5, 0, 0}) == 0);
    CHECK(compute_breach(ResourceVector{5, 0, 0}, ResourceVector{2, 0, 0}) == 3);
    CHECK(compute_breach(ResourceVector{3, 2, 0}, ResourceVector{3, 4, 0}) == -2);
    CHECK(classify_breach(3) == DeliveryClass::UnderDelivered);
    CHECK(classify_breach(-2) == DeliveryClass::OverDelivered);
    CHECK(classify_breach(0) == DeliveryClass::Exact);
}

TEST_CASE("breach is antisymmetric") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 300; ++i) {
        const ResourceVector p{rng() % 20, rng() % 20, rng() % 20};
        const ResourceVector d{rng() % 20, rng() % 20, rng() % 20};
        CHECK(compute_breach(p, d) == -compute_breach(d, p));
    }
}

TEST_CASE("compensation") {
    CHECK(compensation(300) == 60.0);
    CHECK(compensation(0) == 10.0);
    CHECK(std::abs(compensation(115) - 29.1666666666666667) < 1e-9);
}
