#include "kyle/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kyle {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

constexpr double kCubicEps = 1e-16;
constexpr double kCubicResidualTol = 1e-14;

}  // namespace

void ModelParams::validate() const {
    if (n_periods < 1) throw InputError("n_periods must be >= 1");
    if (!positive_finite(delta)) throw InputError("delta must be positive and finite");
    if (!positive_finite(sigma_u)) throw InputError("sigma_u must be positive and finite");
    if (!positive_finite(sigma0)) throw InputError("sigma0 must be positive and finite");
}

double b_cubic_residual(double a, double b_next_sq) {
    return b_next_sq * (1.0 - a) * (1.0 - a) * (1.0 + a) - a;
}

double solve_b_cubic(double b_next_sq) {
    // The residual is strictly decreasing on (0, 1): positive at 0, -1 at 1.
    double lo = kCubicEps;
    double hi = 1.0 - kCubicEps;
    while (true) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (b_cubic_residual(mid, b_next_sq) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double a = 0.5 * (lo + hi);
    double r = b_cubic_residual(a, b_next_sq);
    for (int it = 0; it < 4 && std::abs(r) > 0.0; ++it) {
        const double slope = -b_next_sq * (1.0 - a) * (1.0 + 3.0 * a) - 1.0;
        const double next = a - r / slope;
        const double next_r = b_cubic_residual(next, b_next_sq);
        if (!(std::abs(next_r) < std::abs(r)) || next <= 0.0 || next >= 1.0) break;
        a = next;
        r = next_r;
    }
    if (std::abs(r) > kCubicResidualTol)
        throw std::runtime_error("b-recursion cubic did not reach residual tolerance");
    return a;
}

BCoefficients solve_b_recursion(std::size_t n_periods) {
    if (n_periods < 1) throw InputError("n_periods must be >= 1");
    BCoefficients out;
    out.b.assign(n_periods, 0.0);
    out.b[n_periods - 1] = 1.0;
    for (std::size_t i = n_periods - 1; i > 0; --i) {
        const double next = out.b[i];
        out.b[i - 1] = std::sqrt(solve_b_cubic(next * next));
    }
    return out;
}

Equilibrium equilibrium_from_params(const ModelParams& params) {
    params.validate();
    const std::size_t n = params.n_periods;
    const BCoefficients bc = solve_b_recursion(n);
    const double su2 = params.sigma_u * params.sigma_u;

    Equilibrium eq;
    eq.beta.resize(n);
    eq.lambda.resize(n);
    eq.alpha.assign(n, 0.0);
    eq.sigma_sq.resize(n + 1);
    eq.sigma_sq[0] = params.sigma0;
    for (std::size_t i = 0; i < n; ++i) {
        const double b = bc.b[i];
        eq.beta[i] = b * params.sigma_u / std::sqrt(eq.sigma_sq[i] * params.delta);
        eq.sigma_sq[i + 1] = eq.sigma_sq[i] / (1.0 + b * b);
        eq.lambda[i] = eq.beta[i] * eq.sigma_sq[i + 1] / su2;
    }
    // alpha_N = 0; alpha_{n-1} = 1 / (4 lambda_n (1 - alpha_n lambda_n)).
    for (std::size_t i = n - 1; i > 0; --i) {
        eq.alpha[i - 1] = 1.0 / (4.0 * eq.lambda[i] * (1.0 - eq.alpha[i] * eq.lambda[i]));
    }
    return eq;
}

std::vector<double> implied_b(const Equilibrium& eq, const ModelParams& params) {
    std::vector<double> b(eq.beta.size());
    for (std::size_t i = 0; i < b.size(); ++i)
        b[i] = eq.beta[i] * std::sqrt(eq.sigma_sq[i] * params.delta) / params.sigma_u;
    return b;
}

double RecursionResiduals::max_residual() const {
    return std::max({lambda, sigma, alpha, beta, terminal_alpha});
}

RecursionResiduals verify_kyle_recursions(const Equilibrium& eq,
                                          const ModelParams& params,
                                          double tol) {
    params.validate();
    const std::size_t n = params.n_periods;
    if (eq.beta.size() != n || eq.lambda.size() != n || eq.alpha.size() != n ||
        eq.sigma_sq.size() != n + 1)
        throw InputError("equilibrium dimensions do not match n_periods");

    const double su2 = params.sigma_u * params.sigma_u;
    auto rel = [](double lhs, double rhs) {
        const double r = std::abs(lhs - rhs) / (1.0 + std::abs(rhs));
        return std::isnan(r) ? std::numeric_limits<double>::infinity() : r;
    };

    RecursionResiduals res;
    res.sigma = rel(eq.sigma_sq[0], params.sigma0);
    res.terminal_alpha = std::abs(eq.alpha[n - 1]);
    res.max_lambda_alpha = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double b = eq.beta[i];
        const double s_prev = eq.sigma_sq[i];
        const double denom = b * b * s_prev * params.delta + su2;
        res.lambda = std::max(res.lambda, rel(eq.lambda[i], b * s_prev / denom));
        res.sigma = std::max(res.sigma, rel(eq.sigma_sq[i + 1], s_prev * su2 / denom));

        const double l = eq.lambda[i];
        const double a = eq.alpha[i];
        const double beta_rhs = (1.0 - 2.0 * a * l) / (params.delta * 2.0 * l * (1.0 - a * l));
        res.beta = std::max(res.beta, rel(b, beta_rhs));
        if (i > 0) {
            const double alpha_rhs = 1.0 / (4.0 * l * (1.0 - a * l));
            res.alpha = std::max(res.alpha, rel(eq.alpha[i - 1], alpha_rhs));
        }
        res.max_lambda_alpha = std::max(res.max_lambda_alpha, l * a);
        if (!(l * a < 1.0)) res.second_order_ok = false;
    }
    res.ok = res.second_order_ok && res.max_residual() <= tol;
    return res;
}

Equilibrium rebuild_from_beta(const std::vector<double>& beta, const ModelParams& params) {
    params.validate();
    const std::size_t n = params.n_periods;
    if (beta.size() != n) throw InputError("beta length does not match n_periods");
    const double su2 = params.sigma_u * params.sigma_u;

    Equilibrium eq;
    eq.beta = beta;
    eq.lambda.resize(n);
    eq.alpha.assign(n, 0.0);
    eq.sigma_sq.resize(n + 1);
    eq.sigma_sq[0] = params.sigma0;
    for (std::size_t i = 0; i < n; ++i) {
        const double denom = beta[i] * beta[i] * eq.sigma_sq[i] * params.delta + su2;
        eq.lambda[i] = beta[i] * eq.sigma_sq[i] / denom;
        eq.sigma_sq[i + 1] = eq.sigma_sq[i] * su2 / denom;
    }
    for (std::size_t i = n - 1; i > 0; --i)
        eq.alpha[i - 1] = 1.0 / (4.0 * eq.lambda[i] * (1.0 - eq.alpha[i] * eq.lambda[i]));
    return eq;
}

}  // namespace kyle
