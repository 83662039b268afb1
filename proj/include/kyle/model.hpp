#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace kyle {

/// Raised for malformed inputs: non-positive parameters, dimension mismatches,
/// bad configuration values.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Exogenous inputs of the discrete-time Kyle market.
///
/// `delta` is the time step, `sigma_u` the noise-trader volatility per
/// square-root time unit and `sigma0` the prior variance of the liquidation
/// value. All reals must be strictly positive and finite.
struct ModelParams {
    std::size_t n_periods = 1;
    double delta = 1.0;
    double sigma_u = 1.0;
    double sigma0 = 1.0;

    /// Throws InputError when an invariant is violated.
    void validate() const;

    static ModelParams unit(std::size_t n) { return {n, 1.0, 1.0, 1.0}; }
};

/// Parameter-free coefficients b_1..b_N of the autonomous backward recursion
/// b_n^2 = b_{n-1}^2 / ((1 - b_{n-1}^2)^2 (1 + b_{n-1}^2)), b_N = 1.
///
/// Stored 0-based; `at(n)` takes the 1-based period index.
struct BCoefficients {
    std::vector<double> b;

    std::size_t size() const { return b.size(); }
    double at(std::size_t n) const { return b.at(n - 1); }
};

/// Kyle's linear equilibrium. `beta`, `lambda` and `alpha` have N entries
/// (periods 1..N, alpha_N = 0); `sigma_sq` has N+1 entries Sigma_0..Sigma_N.
struct Equilibrium {
    std::vector<double> beta;
    std::vector<double> lambda;
    std::vector<double> alpha;
    std::vector<double> sigma_sq;

    std::size_t n_periods() const { return beta.size(); }
};

/// Residual of the cubic in a = b_{n-1}^2 whose root in (0, 1) gives b_{n-1}:
/// b_next_sq (1 - a)^2 (1 + a) - a.
double b_cubic_residual(double a, double b_next_sq);

/// Unique root in (0, 1) of the cubic above. Bisection on (eps, 1 - eps)
/// followed by Newton polishing to |residual| <= 1e-14.
double solve_b_cubic(double b_next_sq);

BCoefficients solve_b_recursion(std::size_t n_periods);

Equilibrium equilibrium_from_params(const ModelParams& params);

/// b_n = beta_n sqrt(Sigma_{n-1} Delta) / sigma_u, recovered from an
/// equilibrium. Agrees with solve_b_recursion for every parameter set.
std::vector<double> implied_b(const Equilibrium& eq, const ModelParams& params);

/// Max absolute residual of each equation family of Kyle's recursions.
struct RecursionResiduals {
    double lambda = 0.0;
    double sigma = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double terminal_alpha = 0.0;
    /// max_n lambda_n alpha_n; the second-order condition requires < 1.
    double max_lambda_alpha = 0.0;
    bool second_order_ok = true;
    bool ok = false;

    double max_residual() const;
};

/// Checks every recursion of the equilibrium system plus the second-order
/// condition. Residuals are measured relative to 1 + |rhs|.
/// Throws InputError on dimension mismatch.
RecursionResiduals verify_kyle_recursions(const Equilibrium& eq,
                                          const ModelParams& params,
                                          double tol);

/// Rebuilds lambda, Sigma and alpha from a given beta vector using the
/// forward (market maker) and backward (value function) recursions.
Equilibrium rebuild_from_beta(const std::vector<double>& beta,
                              const ModelParams& params);

}  // namespace kyle
