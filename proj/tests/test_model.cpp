#include <doctest.h>

#include <cmath>
#include <random>

#include "kyle/model.hpp"
#include "oracle.hpp"

using namespace kyle;

namespace {

// Root of b^2 (1-a)^2 (1+a) = a on (0,1) by plain long-double bisection.
long double bisect_cubic(long double b_sq) {
    long double lo = 0.0L, hi = 1.0L;
    for (int i = 0; i < 200; ++i) {
        const long double mid = 0.5L * (lo + hi);
        if (b_sq * (1 - mid) * (1 - mid) * (1 + mid) - mid > 0) lo = mid; else hi = mid;
    }
    return 0.5L * (lo + hi);
}

}  // namespace

TEST_CASE("b cubic root agrees with long-double bisection") {
    for (double b_sq : {1e-6, 0.01, 0.25, 0.5, 1.0, 2.0, 10.0, 1e4}) {
        const double a = solve_b_cubic(b_sq);
        CHECK(a > 0.0);
        CHECK(a < 1.0);
        CHECK(std::abs(a - (double)bisect_cubic(b_sq)) < 1e-14);
        CHECK(std::abs(b_cubic_residual(a, b_sq)) < 1e-14);
    }
}

TEST_CASE("b coefficients for small N") {
    CHECK(solve_b_recursion(1).b == std::vector<double>{1.0});
    const auto b2 = solve_b_recursion(2);
    CHECK(b2.at(2) == 1.0);
    CHECK(b2.at(1) == doctest::Approx(std::sqrt((double)bisect_cubic(1.0))).epsilon(1e-14));
    const auto b3 = solve_b_recursion(3);
    CHECK(b3.at(1) == doctest::Approx(0.5381695932221122).epsilon(1e-14));
    CHECK(b3.at(2) == doctest::Approx(b2.at(1)).epsilon(1e-15));
    CHECK_THROWS_AS(solve_b_recursion(0), InputError);
}

TEST_CASE("b recursion is strictly increasing toward b_N = 1") {
    const auto b = solve_b_recursion(25);
    for (std::size_t n = 1; n < 25; ++n) {
        CHECK(b.at(n) < b.at(n + 1));
        const long double a = bisect_cubic((long double)b.at(n + 1) * b.at(n + 1));
        CHECK(std::abs(b.at(n) - std::sqrt((double)a)) < 1e-13);
    }
}

TEST_CASE("equilibrium at unit parameters") {
    const Equilibrium eq = equilibrium_from_params(ModelParams::unit(3));
    const std::vector<double> expected = {0.5381695932221123, 0.7575868210282761, 1.3651242809592772};
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(eq.beta[i] - expected[i]) < 1e-12);
    CHECK(eq.alpha.size() == 3);
    CHECK(eq.alpha[2] == 0.0);
    CHECK(eq.sigma_sq.size() == 4);
    CHECK(eq.sigma_sq[0] == 1.0);
}

TEST_CASE("N = 1 equilibrium has the single-auction form") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        const ModelParams p = oracle::random_params(rng, 1);
        const Equilibrium eq = equilibrium_from_params(p);
        CHECK(eq.beta[0] == doctest::Approx(p.sigma_u / std::sqrt(p.sigma0 * p.delta)).epsilon(1e-14));
        CHECK(eq.lambda[0] == doctest::Approx(std::sqrt(p.sigma0 / p.delta) / (2.0 * p.sigma_u)).epsilon(1e-14));
        CHECK(eq.sigma_sq[1] == doctest::Approx(p.sigma0 / 2.0).epsilon(1e-14));
    }
}

TEST_CASE("equilibrium satisfies the Kyle recursions at random parameters") {
    std::mt19937_64 rng(11);
    for (std::size_t n = 1; n <= 12; ++n) {
        for (int t = 0; t < 5; ++t) {
            const ModelParams p = oracle::random_params(rng, n);
            const Equilibrium eq = equilibrium_from_params(p);
            const RecursionResiduals r = verify_kyle_recursions(eq, p, 1e-12);
            CHECK(r.ok);
            CHECK(r.second_order_ok);
            CHECK(r.max_residual() < 1e-12);
            // Fixed point of the independent T oracle.
            CHECK(oracle::max_abs_diff(oracle::T(eq.beta, p), eq.beta) < 1e-11 * (1.0 + eq.beta.back()));
        }
    }
}

TEST_CASE("implied b is parameter invariant and variance decreases") {
    std::mt19937_64 rng(3);
    const auto b = solve_b_recursion(6).b;
    for (int t = 0; t < 10; ++t) {
        const ModelParams p = oracle::random_params(rng, 6);
        const Equilibrium eq = equilibrium_from_params(p);
        const auto ib = implied_b(eq, p);
        for (std::size_t i = 0; i < 6; ++i) CHECK(ib[i] == doctest::Approx(b[i]).epsilon(1e-13));
        for (std::size_t i = 0; i < 6; ++i) CHECK(eq.sigma_sq[i + 1] < eq.sigma_sq[i]);
    }
}

TEST_CASE("scaling sigma_u scales beta linearly and lambda inversely") {
    const ModelParams base{4, 0.5, 1.0, 2.0};
    ModelParams scaled = base;
    scaled.sigma_u = 3.0;
    const Equilibrium a = equilibrium_from_params(base);
    const Equilibrium b = equilibrium_from_params(scaled);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(b.beta[i] == doctest::Approx(3.0 * a.beta[i]).epsilon(1e-14));
        CHECK(b.lambda[i] == doctest::Approx(a.lambda[i] / 3.0).epsilon(1e-14));
    }
}

TEST_CASE("verify_kyle_recursions flags a broken equilibrium") {
    const ModelParams p = ModelParams::unit(3);
    Equilibrium eq = equilibrium_from_params(p);
    eq.lambda[1] *= 1.001;
    const RecursionResiduals r = verify_kyle_recursions(eq, p, 1e-10);
    CHECK_FALSE(r.ok);
    CHECK(r.lambda > 1e-4);
    Equilibrium doubled = equilibrium_from_params(p);
    doubled.beta[0] *= 2.0;
    CHECK_FALSE(verify_kyle_recursions(doubled, p, 1e-10).ok);
    eq.beta.pop_back();
    CHECK_THROWS_AS(verify_kyle_recursions(eq, p, 1e-10), InputError);
}

TEST_CASE("rebuild_from_beta reproduces the equilibrium") {
    const ModelParams p{5, 0.7, 1.3, 0.4};
    const Equilibrium eq = equilibrium_from_params(p);
    const Equilibrium re = rebuild_from_beta(eq.beta, p);
    CHECK(oracle::max_abs_diff(re.lambda, eq.lambda) < 1e-13);
    CHECK(oracle::max_abs_diff(re.sigma_sq, eq.sigma_sq) < 1e-13);
    CHECK(oracle::max_abs_diff(re.alpha, eq.alpha) < 1e-12);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(ModelParams({0, 1, 1, 1}).validate(), InputError);
    CHECK_THROWS_AS(ModelParams({2, -1, 1, 1}).validate(), InputError);
    CHECK_THROWS_AS(ModelParams({2, 1, 0, 1}).validate(), InputError);
    CHECK_THROWS_AS(ModelParams({2, 1, 1, std::nan("")}).validate(), InputError);
    CHECK_NOTHROW(ModelParams::unit(2).validate());
}
