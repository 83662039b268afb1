#include <doctest.h>

#include <cmath>
#include <random>

#include "kyle/experiments.hpp"
#include "kyle/stability.hpp"
#include "oracle.hpp"

using namespace kyle;

namespace {

OperatorResult ok(std::vector<double> v) { return {std::move(v), true, {}}; }

}  // namespace

TEST_CASE("finite-difference Jacobian of an affine map is exact") {
    const Matrix a{{0.5, -1.0, 2.0}, {0.0, 3.0, 0.25}, {-2.0, 1.0, 0.0}};
    const VectorMap map = [&](const std::vector<double>& x) {
        auto y = a * x;
        y[0] += 1.0;
        return ok(y);
    };
    const Matrix j = jacobian_fd(map, {0.3, -7.0, 2.5});
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(j(r, c) - a(r, c)) < 1e-9);
    // Rounding error grows with the magnitude of the point.
    const Matrix big = jacobian_fd(map, {0.3, -7.0, 1e4});
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(big(r, c) - a(r, c)) < 1e-9 * 1e4);
}

TEST_CASE("finite-difference Jacobian reports the coordinate that leaves the domain") {
    const VectorMap map = [](const std::vector<double>& x) {
        return x[1] > 0.0 ? ok(x) : OperatorResult{{INFINITY, INFINITY}, false, {}};
    };
    try {
        jacobian_fd(map, {1.0, 1e-7});
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(e.coordinate() == 2);
    }
}

TEST_CASE("N = 1 Jacobian matches the analytic derivative") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.3, 3.0);
    for (int t = 0; t < 50; ++t) {
        const ModelParams p = oracle::random_params(rng, 1);
        const double b = u(rng) * (t % 2 ? 1.0 : -1.0);
        const double c = p.delta * p.sigma0, s = p.sigma_u * p.sigma_u;
        const double expected = 0.5 - s / (2.0 * c * b * b);
        CHECK(jacobian_closed_form({b}, p)(0, 0) == doctest::Approx(expected).epsilon(1e-13));
        CHECK(jacobian_fd(PolicyOperator::insider, {b}, p)(0, 0) ==
              doctest::Approx(expected).epsilon(1e-7).scale(1.0));
    }
}

TEST_CASE("closed-form and finite-difference Jacobians agree for N = 2") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.3, 3.0);
    int compared = 0;
    for (int t = 0; t < 50; ++t) {
        const ModelParams p = oracle::random_params(rng, 2);
        const std::vector<double> x = {u(rng), u(rng)};
        Matrix fd;
        try {
            fd = jacobian_fd(PolicyOperator::insider, x, p);
        } catch (const DomainError&) {
            continue;
        }
        const Matrix cf = jacobian_closed_form(x, p);
        ++compared;
        for (std::size_t r = 0; r < 2; ++r)
            for (std::size_t c = 0; c < 2; ++c)
                CHECK(std::abs(fd(r, c) - cf(r, c)) <= 1e-7 * std::max(1.0, std::abs(cf(r, c))));
    }
    CHECK(compared > 40);
    CHECK_THROWS_AS(jacobian_closed_form({1, 1, 1}, ModelParams::unit(3)), InputError);
}

TEST_CASE("N = 2 Jacobian at the equilibrium is parameter free") {
    std::mt19937_64 rng(29);
    for (int t = 0; t < 5; ++t) {
        const ModelParams p = t == 0 ? ModelParams::unit(2) : oracle::random_params(rng, 2);
        const auto beta = equilibrium_from_params(p).beta;
        for (const Matrix& j : {jacobian_closed_form(beta, p), jacobian_fd(PolicyOperator::insider, beta, p)}) {
            CHECK(j(0, 0) == doctest::Approx(-0.9812135).epsilon(1e-6));
            CHECK(j(1, 0) == doctest::Approx(0.5549581).epsilon(1e-6));
            CHECK(std::abs(j(0, 1)) < 1e-7);
            CHECK(std::abs(j(1, 1)) < 1e-7);
        }
    }
}

TEST_CASE("classification thresholds") {
    CHECK(classify_spectral_radius(0.0) == Classification::super_attractive);
    CHECK(classify_spectral_radius(1e-7) == Classification::super_attractive);
    CHECK(classify_spectral_radius(0.5) == Classification::attractive);
    CHECK(classify_spectral_radius(1.0) == Classification::neutral);
    CHECK(classify_spectral_radius(1.0 + 1e-7) == Classification::neutral);
    CHECK(classify_spectral_radius(1.1) == Classification::repellent);
    CHECK(classification_from_string("super_attractive") == Classification::super_attractive);
    CHECK_THROWS_AS(classification_from_string("stable"), InputError);
}

TEST_CASE("analyze_fixed_point rejects points that are not fixed") {
    CHECK_THROWS_AS(analyze_fixed_point(PolicyOperator::insider, {1.0, 1.0, 1.0}, ModelParams::unit(3)),
                    NotFixedPointError);
}

TEST_CASE("spectral radius of T and S coincide at the equilibrium") {
    for (std::size_t n = 1; n <= 8; ++n) {
        const ModelParams p = ModelParams::unit(n);
        const double rt = analyze_equilibrium(PolicyOperator::insider, p).spectral_radius;
        const double rs = analyze_equilibrium(PolicyOperator::market_maker, p).spectral_radius;
        CHECK(rt == doctest::Approx(rs).epsilon(1e-5));
    }
}

TEST_CASE("iteration verdicts") {
    IterationConfig cfg;
    const VectorMap contraction = [](const std::vector<double>& x) { return ok({0.5 * x[0] + 1.0}); };
    const IterationTrace c = iterate(contraction, {10.0}, cfg);
    CHECK(c.verdict == Verdict::converged);
    REQUIRE(c.limit);
    CHECK((*c.limit)[0] == doctest::Approx(2.0).epsilon(1e-11));

    const VectorMap expansion = [](const std::vector<double>& x) { return ok({2.0 * x[0]}); };
    const IterationTrace d = iterate(expansion, {1.0}, cfg);
    CHECK(d.verdict == Verdict::diverged);
    CHECK(d.iterations_used == 27);  // 2^27 > 1e8

    const VectorMap rotation = [](const std::vector<double>& x) { return ok({-x[0]}); };
    cfg.max_iter = 50;
    CHECK(iterate(rotation, {1.0}, cfg).verdict == Verdict::max_iter);

    const VectorMap exits = [](const std::vector<double>& x) {
        return x[0] > 1.0 ? ok({x[0] - 1.0}) : OperatorResult{{INFINITY}, false, {}};
    };
    const IterationTrace e = iterate(exits, {3.5}, cfg);
    CHECK(e.verdict == Verdict::left_domain);
    CHECK(e.iterations_used == 4);  // 2.5, 1.5, 0.5, then exit
    CHECK_THROWS_AS(iterate(exits, {NAN}, cfg), InputError);
}

TEST_CASE("trace keeps head and tail windows beyond the cap") {
    IterationConfig cfg;
    cfg.max_iter = 3000;
    cfg.trace_cap = 10;
    const VectorMap rotation = [](const std::vector<double>& x) { return ok({-x[0]}); };
    const IterationTrace t = iterate(rotation, {1.0}, cfg);
    REQUIRE(t.iterates.size() == 10);
    const std::vector<std::size_t> expected = {0, 1, 2, 3, 4, 2996, 2997, 2998, 2999, 3000};
    CHECK(t.indices == expected);
    CHECK(t.iterates.back()[0] == 1.0);

    cfg.trace_cap = 1000;
    cfg.max_iter = 20;
    const IterationTrace s = iterate(rotation, {1.0}, cfg);
    CHECK(s.iterates.size() == 21);
}

TEST_CASE("perturbed-variance start converges to the second fixed point") {
    const ShiftedStartRun rep = reproduce_shifted_start();
    CHECK(rep.trace.verdict == Verdict::converged);
    CHECK(oracle::max_abs_diff(rep.beta_start, reference::beta_start_n3) < 1e-12);
    CHECK(oracle::max_abs_diff(rep.limit, reference::beta_limit_n3) < 1e-10);
    CHECK(rep.limit_residual < 1e-10);
    const EigenvalueTable t = eigenvalue_table(rep);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(t.at_limit[i].real() - reference::eigen_at_limit[i]) < 1e-4);
        CHECK(std::abs(t.at_equilibrium[i].real() - reference::eigen_at_hat[i]) < 1e-4);
    }
}

TEST_CASE("scalar derivatives are invariant in N and the parameters") {
    std::mt19937_64 rng(31);
    for (std::size_t n : {3u, 4u, 5u, 6u}) {
        const ModelParams p = n == 3 ? ModelParams::unit(n) : oracle::random_params(rng, n);
        CHECK(scalar_derivative(n - 2, p) == doctest::Approx(-2.07611).epsilon(5e-5));
        CHECK(std::abs(scalar_derivative(n, p)) < 1e-8);
        CHECK(scalar_derivative(n - 1, p) == doctest::Approx(-0.981214).epsilon(1e-5));
    }
}

TEST_CASE("scalar coordinate map grows geometrically away from the equilibrium") {
    const ModelParams p = ModelParams::unit(3);
    const double hat = equilibrium_from_params(p).beta[0];
    const ScalarTrace t = linearized_iterate(hat + 1e-6, 1, p);
    CHECK(t.verdict == Verdict::diverged);
    for (std::size_t m = 1; m < 5; ++m) {
        const double ratio = (t.iterates[m + 1] - hat) / (t.iterates[m] - hat);
        CHECK(ratio == doctest::Approx(-2.07611).epsilon(5e-5));
    }
}

TEST_CASE("linearised scalar iteration") {
    const ModelParams p = ModelParams::unit(4);
    const double hat = equilibrium_from_params(p).beta[1];
    const ScalarTrace away = linearized_iterate(hat + 1e-3, 2, p);
    CHECK(away.verdict == Verdict::diverged);
    CHECK(away.multiplier == doctest::Approx(-2.07611).epsilon(5e-5));
    const ScalarTrace back = linearized_iterate(equilibrium_from_params(p).beta[3] + 1e-3, 4, p);
    CHECK(back.verdict == Verdict::converged);
}

TEST_CASE("coordinate perturbation battery") {
    for (std::size_t n : {3u, 4u}) {
        const auto outcomes = perturbation_battery(PolicyOperator::insider, ModelParams::unit(n), 1e-3,
                                                   PerturbMode::coordinate, IterationConfig{});
        REQUIRE(outcomes.size() == n);
        for (const auto& o : outcomes) CHECK(o.converged_to_equilibrium == (o.coordinate >= n - 1));
    }
}

TEST_CASE("perturbing an attractive equilibrium returns to it in full mode") {
    const auto o = perturb_equilibrium(PolicyOperator::insider, ModelParams::unit(2), 1, 1e-3,
                                       PerturbMode::full, IterationConfig{});
    CHECK(o.converged_to_equilibrium);
    CHECK_THROWS_AS(perturb_equilibrium(PolicyOperator::insider, ModelParams::unit(2), 3, 1e-3,
                                        PerturbMode::full, IterationConfig{}),
                    InputError);
}
