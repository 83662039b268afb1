#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "kyle/model.hpp"

namespace kyle {

/// Which control the policy iteration runs in: the insider's trading
/// intensities (T, acting on beta) or the market makers' price impacts
/// (S, acting on lambda).
enum class PolicyOperator { insider, market_maker };

std::string_view to_string(PolicyOperator op);
PolicyOperator policy_operator_from_string(std::string_view name);

/// Relative threshold for the dom(T) denominator test.
inline constexpr double kDomainTol = 1e-12;

/// Quantities encountered in one period of a best-response pass.
struct PeriodDiagnostics {
    double mm_denominator = 0.0;   // beta_n^2 Sigma_{n-1} Delta + sigma_u^2
    double lambda = 0.0;
    double one_minus_alpha_lambda = 0.0;
    bool second_order_ok = true;   // alpha_n lambda_n < 1
};

struct MarketMakerResponse {
    std::vector<double> lambda;
    std::vector<double> sigma_sq;  // Sigma_0..Sigma_N
};

struct InsiderResponse {
    std::vector<double> beta;
    std::vector<double> alpha;     // alpha_0..alpha_N, alpha_N = 0
    std::vector<bool> second_order_ok;
    bool in_domain = true;
    /// 1-based period where the backward pass hit a vanishing denominator.
    std::optional<std::size_t> failed_period;
};

/// Output of T or S. When `in_domain` is false every entry of `value` is
/// +infinity; the flag is authoritative.
struct OperatorResult {
    std::vector<double> value;
    bool in_domain = true;
    std::vector<PeriodDiagnostics> diagnostics;
};

/// Forward filtering pass: pricing coefficients implied by trading
/// intensities `beta`, starting from Sigma_0 = params.sigma0.
/// Throws InputError on length mismatch or non-finite input.
MarketMakerResponse market_maker_response(const std::vector<double>& beta,
                                          const ModelParams& params);

/// Backward optimisation pass: the insider's optimal intensities against a
/// fixed pricing rule `lambda`, with alpha_N = 0.
InsiderResponse insider_response(const std::vector<double>& lambda,
                                 const ModelParams& params);

/// T = insider_response o market_maker_response.
OperatorResult operator_T(const std::vector<double>& beta, const ModelParams& params);

/// S = market_maker_response o insider_response.
OperatorResult operator_S(const std::vector<double>& lambda, const ModelParams& params);

OperatorResult apply_operator(PolicyOperator op, const std::vector<double>& x,
                              const ModelParams& params);

/// Explicit rational form of T for N = 1 and N = 2. Throws InputError for
/// larger N. Out-of-domain points follow the same convention as operator_T.
OperatorResult closed_form_T(const std::vector<double>& beta, const ModelParams& params);

/// Coordinate k (1-based) of `op` evaluated at `base` with coordinate k
/// replaced by `x_k`. Returns +infinity outside the operator's domain.
double scalar_coordinate(PolicyOperator op, double x_k, std::size_t k,
                         const std::vector<double>& base, const ModelParams& params);

/// Coordinate k of T at the equilibrium beta with coordinate k replaced.
double scalar_T_coord(double beta_k, std::size_t k, const Equilibrium& eq,
                      const ModelParams& params);

struct RationalValue {
    double f = 0.0;
    double g = 0.0;
    double ratio() const;  // +inf when g == 0
};

/// Degree-7 numerator f and degree-6 denominator g of coordinate N-2 of T as
/// a function of beta_{N-2}, other coordinates pinned at the equilibrium.
/// Requires N >= 3.
RationalValue f_g_rational(double beta_k, const Equilibrium& eq, const ModelParams& params);

/// Same polynomials at an arbitrary beta vector (length >= 3).
RationalValue f_g_at(const std::vector<double>& beta, const ModelParams& params);

}  // namespace kyle
