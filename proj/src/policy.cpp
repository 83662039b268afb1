#include "kyle/policy.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace kyle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

OperatorResult out_of_domain(std::size_t n, std::vector<PeriodDiagnostics> diag = {}) {
    OperatorResult r;
    r.value.assign(n, kInf);
    r.in_domain = false;
    r.diagnostics = std::move(diag);
    return r;
}

bool vanishes(double d, double numerator) {
    return std::abs(d) <= kDomainTol * (1.0 + std::abs(numerator));
}

void check_length(const std::vector<double>& x, const ModelParams& params) {
    params.validate();
    if (x.size() != params.n_periods)
        throw InputError("vector length " + std::to_string(x.size()) +
                         " does not match n_periods " + std::to_string(params.n_periods));
}

}  // namespace

std::string_view to_string(PolicyOperator op) {
    return op == PolicyOperator::insider ? "T" : "S";
}

PolicyOperator policy_operator_from_string(std::string_view name) {
    if (name == "T" || name == "insider") return PolicyOperator::insider;
    if (name == "S" || name == "market_maker" || name == "market-maker")
        return PolicyOperator::market_maker;
    throw InputError("unknown operator '" + std::string(name) + "' (expected T or S)");
}

MarketMakerResponse market_maker_response(const std::vector<double>& beta,
                                          const ModelParams& params) {
    check_length(beta, params);
    if (!all_finite(beta)) throw InputError("market_maker_response: non-finite beta");
    const std::size_t n = beta.size();
    const double su2 = params.sigma_u * params.sigma_u;

    MarketMakerResponse out;
    out.lambda.resize(n);
    out.sigma_sq.resize(n + 1);
    out.sigma_sq[0] = params.sigma0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s_prev = out.sigma_sq[i];
        const double denom = beta[i] * beta[i] * s_prev * params.delta + su2;
        out.lambda[i] = beta[i] * s_prev / denom;
        out.sigma_sq[i + 1] = s_prev * su2 / denom;
    }
    return out;
}

InsiderResponse insider_response(const std::vector<double>& lambda,
                                 const ModelParams& params) {
    check_length(lambda, params);
    const std::size_t n = lambda.size();

    InsiderResponse out;
    out.beta.assign(n, kInf);
    out.alpha.assign(n + 1, 0.0);
    out.second_order_ok.assign(n, false);
    for (std::size_t i = n; i-- > 0;) {
        const double l = lambda[i];
        const double a = out.alpha[i + 1];
        const double one_minus = 1.0 - a * l;
        if (!std::isfinite(l) || l == 0.0 || vanishes(one_minus, a * l)) {
            out.in_domain = false;
            out.failed_period = i + 1;
            break;
        }
        out.second_order_ok[i] = a * l < 1.0;
        out.beta[i] = (1.0 - 2.0 * a * l) / (params.delta * 2.0 * l * one_minus);
        out.alpha[i] = 1.0 / (4.0 * l * one_minus);
        if (!std::isfinite(out.beta[i]) || !std::isfinite(out.alpha[i])) {
            out.in_domain = false;
            out.failed_period = i + 1;
            break;
        }
    }
    if (!out.in_domain) out.beta.assign(n, kInf);
    return out;
}

OperatorResult operator_T(const std::vector<double>& beta, const ModelParams& params) {
    check_length(beta, params);
    const std::size_t n = beta.size();
    if (!all_finite(beta)) return out_of_domain(n);

    const MarketMakerResponse mm = market_maker_response(beta, params);
    const InsiderResponse ins = insider_response(mm.lambda, params);

    std::vector<PeriodDiagnostics> diag(n);
    const double su2 = params.sigma_u * params.sigma_u;
    for (std::size_t i = 0; i < n; ++i) {
        diag[i].mm_denominator = beta[i] * beta[i] * mm.sigma_sq[i] * params.delta + su2;
        diag[i].lambda = mm.lambda[i];
        diag[i].one_minus_alpha_lambda = 1.0 - ins.alpha[i + 1] * mm.lambda[i];
        diag[i].second_order_ok = ins.second_order_ok[i];
    }
    if (!ins.in_domain) return out_of_domain(n, std::move(diag));
    return {ins.beta, true, std::move(diag)};
}

OperatorResult operator_S(const std::vector<double>& lambda, const ModelParams& params) {
    check_length(lambda, params);
    const std::size_t n = lambda.size();
    if (!all_finite(lambda)) return out_of_domain(n);

    const InsiderResponse ins = insider_response(lambda, params);
    std::vector<PeriodDiagnostics> diag(n);
    for (std::size_t i = 0; i < n; ++i) {
        diag[i].lambda = lambda[i];
        diag[i].one_minus_alpha_lambda = 1.0 - ins.alpha[i + 1] * lambda[i];
        diag[i].second_order_ok = ins.second_order_ok[i];
    }
    if (!ins.in_domain) return out_of_domain(n, std::move(diag));

    const MarketMakerResponse mm = market_maker_response(ins.beta, params);
    const double su2 = params.sigma_u * params.sigma_u;
    for (std::size_t i = 0; i < n; ++i)
        diag[i].mm_denominator = ins.beta[i] * ins.beta[i] * mm.sigma_sq[i] * params.delta + su2;
    return {mm.lambda, true, std::move(diag)};
}

OperatorResult apply_operator(PolicyOperator op, const std::vector<double>& x,
                              const ModelParams& params) {
    return op == PolicyOperator::insider ? operator_T(x, params) : operator_S(x, params);
}

OperatorResult closed_form_T(const std::vector<double>& beta, const ModelParams& params) {
    check_length(beta, params);
    const double c = params.delta * params.sigma0;
    const double s = params.sigma_u * params.sigma_u;

    if (beta.size() == 1) {
        const double b = beta[0];
        if (b == 0.0 || !std::isfinite(b)) return out_of_domain(1);
        return {{(b * b * params.sigma0 * params.delta + s) / (2.0 * params.delta * b * params.sigma0)},
                true,
                {}};
    }
    if (beta.size() == 2) {
        const double b1 = beta[0];
        const double b2 = beta[1];
        if (!all_finite(beta)) return out_of_domain(2);
        const double inner = b1 * c * (b1 * b1 - 4.0 * b1 * b2 + b2 * b2) + s * (b1 - 4.0 * b2);
        const double den1 = b1 * c * inner;
        if (b1 == 0.0 || b2 == 0.0 || vanishes(den1, 0.0)) return out_of_domain(2);
        const double t1 = (b1 * b1 * c + s) * (b1 * c * (b1 - b2) * (b1 - b2) + s * (b1 - 2.0 * b2)) / den1;
        const double t2 = (c * (b1 * b1 + b2 * b2) + s) / (2.0 * b2 * c);
        return {{t1, t2}, true, {}};
    }
    throw InputError("closed_form_T is only available for N = 1 and N = 2");
}

double scalar_coordinate(PolicyOperator op, double x_k, std::size_t k,
                         const std::vector<double>& base, const ModelParams& params) {
    if (k < 1 || k > base.size()) throw InputError("coordinate index out of range");
    std::vector<double> point = base;
    point[k - 1] = x_k;
    const OperatorResult r = apply_operator(op, point, params);
    return r.in_domain ? r.value[k - 1] : kInf;
}

double scalar_T_coord(double beta_k, std::size_t k, const Equilibrium& eq,
                      const ModelParams& params) {
    return scalar_coordinate(PolicyOperator::insider, beta_k, k, eq.beta, params);
}

double RationalValue::ratio() const { return g == 0.0 ? kInf : f / g; }

RationalValue f_g_at(const std::vector<double>& beta, const ModelParams& params) {
    const std::size_t n = beta.size();
    if (n < 3) throw InputError("f/g representation requires N >= 3");
    const double c = params.delta * params.sigma0;
    // sigma in the polynomial display is the noise-trader volatility sigma_u.
    const double s = params.sigma_u * params.sigma_u;

    double sq_to_nm3 = 0.0;  // beta_1^2 + ... + beta_{N-3}^2
    for (std::size_t i = 0; i + 3 < n; ++i) sq_to_nm3 += beta[i] * beta[i];
    const double x = beta[n - 3];  // beta_{N-2}
    const double y = beta[n - 2];  // beta_{N-1}
    const double z = beta[n - 1];  // beta_N
    const double sq_to_nm2 = sq_to_nm3 + x * x;
    const double p = c * sq_to_nm2 + s;

    RationalValue out;
    out.f = p * (y * y * p * (c * (sq_to_nm2 + 4.0 * x * z + z * z) + s)
                 + y * y * y * y * c * (c * (sq_to_nm2 + 2.0 * x * z) + s)
                 - 4.0 * y * y * y * z * c * p
                 - 4.0 * y * z * p * p
                 + 2.0 * x * z * p * p);
    out.g = 2.0 * x * c * (-4.0 * y * y * y * z * c * p
                           + y * y * p * (c * (sq_to_nm3 + (x + z) * (x + z)) + s)
                           - 4.0 * y * z * p * p
                           + x * z * p * p
                           + y * y * y * y * c * (c * (sq_to_nm3 + x * (x + z)) + s));
    return out;
}

RationalValue f_g_rational(double beta_k, const Equilibrium& eq, const ModelParams& params) {
    const std::size_t n = eq.beta.size();
    if (n < 3) throw InputError("f/g representation requires N >= 3");
    std::vector<double> point = eq.beta;
    point[n - 3] = beta_k;
    return f_g_at(point, params);
}

}  // namespace kyle
