#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <graphconf/exact_ot.hpp>
#include <graphconf/rng.hpp>

namespace gc = graphconf;

namespace {

gc::Vector uniform(int n) { return gc::Vector::Constant(n, 1.0 / n); }

gc::Matrix random_cost(gc::rng& gen, int n, int m) {
    gc::Matrix c(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) c(i, j) = gen.next_double();
    return c;
}

}  // namespace

TEST_CASE("anti-diagonal cost sends all mass across") {
    gc::Matrix c(2, 2);
    c << 1, 0,
         0, 1;
    const gc::OtResult r = gc::solve_exact_ot(c, uniform(2), uniform(2));
    REQUIRE(r.cost <= 1e-15);
    REQUIRE(std::abs(r.plan(0, 1) - 0.5) <= 1e-12);
    REQUIRE(std::abs(r.plan(1, 0) - 0.5) <= 1e-12);
    REQUIRE(r.plan(0, 0) <= 1e-12);
}

TEST_CASE("single source splits by target marginals") {
    gc::Matrix c(1, 2);
    c << 2, 7;
    gc::Vector a(1), b(2);
    a << 1.0;
    b << 0.5, 0.5;
    const gc::OtResult r = gc::solve_exact_ot(c, a, b);
    REQUIRE(std::abs(r.cost - 4.5) <= 1e-12);
    REQUIRE(std::abs(r.plan(0, 0) - 0.5) <= 1e-12);
}

TEST_CASE("uniform-marginal transport matches assignment enumeration") {
    // With equal uniform marginals the optimum sits at a permutation matrix
    // over n (Birkhoff), so exhaustive assignment search is an exact oracle.
    gc::rng gen(23, "ot-vs-brute");
    for (int n = 2; n <= 5; ++n) {
        for (int t = 0; t < 40; ++t) {
            const gc::Matrix c = random_cost(gen, n, n);
            const gc::OtResult r = gc::solve_exact_ot(c, uniform(n), uniform(n));
            const double brute = gc::brute_force_assignment_value(c);
            REQUIRE(std::abs(r.cost - brute) <= 1e-9);
            REQUIRE(gc::assignment_lower_bound_check(c, r.cost));
        }
    }
}

TEST_CASE("transport plans satisfy the marginal constraints") {
    gc::rng gen(29, "ot-marginals");
    for (int t = 0; t < 30; ++t) {
        const int n = 2 + static_cast<int>(gen.next_below(5));
        const int m = 2 + static_cast<int>(gen.next_below(5));
        const gc::Matrix c = random_cost(gen, n, m);
        gc::Vector a(n), b(m);
        double sa = 0.0, sb = 0.0;
        for (int i = 0; i < n; ++i) sa += a(i) = 0.05 + gen.next_double();
        for (int j = 0; j < m; ++j) sb += b(j) = 0.05 + gen.next_double();
        a /= sa;
        b /= sb;
        const gc::OtResult r = gc::solve_exact_ot(c, a, b);
        REQUIRE_NOTHROW(gc::validate_coupling(r.plan, a, b));
        REQUIRE(r.plan.minCoeff() >= 0.0);

        // Feasibility of the value: cannot beat row-wise minima, cannot lose
        // to the independent coupling.
        double lower = 0.0;
        for (int i = 0; i < n; ++i) lower += a(i) * c.row(i).minCoeff();
        const double product = (a * b.transpose()).cwiseProduct(c).sum();
        REQUIRE(r.cost >= lower - 1e-9);
        REQUIRE(r.cost <= product + 1e-9);
    }
}

TEST_CASE("constant-row costs price by source marginals only") {
    gc::Matrix c(2, 3);
    c << 3, 3, 3,
         5, 5, 5;
    gc::Vector a(2), b(3);
    a << 0.25, 0.75;
    b << 0.2, 0.5, 0.3;
    const gc::OtResult r = gc::solve_exact_ot(c, a, b);
    REQUIRE(std::abs(r.cost - (0.25 * 3 + 0.75 * 5)) <= 1e-12);
}

TEST_CASE("transport is deterministic, ties included") {
    gc::rng gen(31, "ot-det");
    const gc::Matrix c = random_cost(gen, 4, 4);
    const gc::OtResult r1 = gc::solve_exact_ot(c, uniform(4), uniform(4));
    const gc::OtResult r2 = gc::solve_exact_ot(c, uniform(4), uniform(4));
    REQUIRE(r1.plan == r2.plan);
    REQUIRE(r1.cost == r2.cost);

    const gc::Matrix flat = gc::Matrix::Constant(3, 3, 0.7);
    const gc::OtResult tie1 = gc::solve_exact_ot(flat, uniform(3), uniform(3));
    const gc::OtResult tie2 = gc::solve_exact_ot(flat, uniform(3), uniform(3));
    REQUIRE(tie1.plan == tie2.plan);
    REQUIRE(std::abs(tie1.cost - 0.7) <= 1e-12);
}

TEST_CASE("transport rejects malformed inputs") {
    const gc::Matrix c = gc::Matrix::Zero(2, 2);
    gc::Vector a(2), b(2);
    a << 0.5, 0.5;
    b << 0.7, 0.7;  // sums differ
    REQUIRE_THROWS_MATCHES(gc::solve_exact_ot(c, a, b), gc::error,
                           Catch::Matchers::Predicate<gc::error>([](const gc::error& e) {
                               return e.code() == gc::errc::marginal_mismatch;
                           }));

    gc::Vector neg(2);
    neg << -0.5, 1.5;
    REQUIRE_THROWS_AS(gc::solve_exact_ot(c, neg, a), gc::error);

    gc::Matrix bad = c;
    bad(0, 0) = std::nan("");
    REQUIRE_THROWS_MATCHES(gc::solve_exact_ot(bad, a, a), gc::error,
                           Catch::Matchers::Predicate<gc::error>([](const gc::error& e) {
                               return e.code() == gc::errc::non_finite;
                           }));
}

TEST_CASE("assignment enumeration refuses oversized inputs") {
    const int n = gc::kOracleNodeCap + 1;
    const gc::Matrix c = gc::Matrix::Zero(n, n);
    REQUIRE_THROWS_MATCHES(gc::brute_force_assignment_value(c), gc::error,
                           Catch::Matchers::Predicate<gc::error>([](const gc::error& e) {
                               return e.code() == gc::errc::too_large;
                           }));
}
