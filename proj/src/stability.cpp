#include "kyle/stability.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <future>
#include <limits>
#include <string>

namespace kyle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Keeps the first `head` and the last `tail` iterates.
class TraceWindow {
public:
    explicit TraceWindow(std::size_t cap) : head_cap_(cap - cap / 2), tail_cap_(cap / 2) {}

    void push(std::size_t index, const std::vector<double>& x) {
        if (head_.size() < head_cap_) {
            head_.emplace_back(index, x);
            return;
        }
        if (tail_cap_ == 0) return;
        if (tail_.size() == tail_cap_) tail_.pop_front();
        tail_.emplace_back(index, x);
    }

    void flush(IterationTrace& trace) {
        for (auto& [i, x] : head_) {
            trace.indices.push_back(i);
            trace.iterates.push_back(std::move(x));
        }
        for (auto& [i, x] : tail_) {
            trace.indices.push_back(i);
            trace.iterates.push_back(std::move(x));
        }
    }

private:
    std::size_t head_cap_;
    std::size_t tail_cap_;
    std::vector<std::pair<std::size_t, std::vector<double>>> head_;
    std::deque<std::pair<std::size_t, std::vector<double>>> tail_;
};

std::vector<double> pinned(const std::vector<double>& base, std::size_t k, double value) {
    std::vector<double> p = base;
    p[k - 1] = value;
    return p;
}

}  // namespace

VectorMap policy_map(PolicyOperator op, const ModelParams& params) {
    return [op, params](const std::vector<double>& x) { return apply_operator(op, x, params); };
}

std::vector<double> equilibrium_point(PolicyOperator op, const ModelParams& params) {
    Equilibrium eq = equilibrium_from_params(params);
    return op == PolicyOperator::insider ? eq.beta : eq.lambda;
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::converged: return "converged";
        case Verdict::diverged: return "diverged";
        case Verdict::left_domain: return "left_domain";
        case Verdict::max_iter: return "max_iter";
    }
    return "max_iter";
}

Verdict verdict_from_string(std::string_view s) {
    for (Verdict v : {Verdict::converged, Verdict::diverged, Verdict::left_domain, Verdict::max_iter})
        if (to_string(v) == s) return v;
    throw InputError("unknown verdict '" + std::string(s) + "'");
}

void IterationConfig::validate() const {
    if (!(tol > 0.0) || !std::isfinite(tol)) throw InputError("tol must be positive");
    if (max_iter < 1) throw InputError("max_iter must be >= 1");
    if (!(blowup > 0.0)) throw InputError("blowup must be positive");
    if (trace_cap < 2) throw InputError("trace_cap must be >= 2");
}

IterationTrace iterate(const VectorMap& map, const std::vector<double>& start,
                       const IterationConfig& config) {
    config.validate();
    if (start.empty()) throw InputError("iterate: empty start vector");
    for (double x : start)
        if (!std::isfinite(x)) throw InputError("iterate: non-finite start vector");

    IterationTrace trace;
    TraceWindow window(config.trace_cap);
    window.push(0, start);
    std::vector<double> current = start;
    trace.verdict = Verdict::max_iter;
    for (std::size_t m = 1; m <= config.max_iter; ++m) {
        OperatorResult next = map(current);
        trace.iterations_used = m;
        if (!next.in_domain) {
            window.push(m, next.value);
            trace.verdict = Verdict::left_domain;
            break;
        }
        const double norm = sup_norm(next.value);
        trace.final_step = sup_diff(next.value, current);
        window.push(m, next.value);
        if (!std::isfinite(norm) || norm > config.blowup) {
            trace.verdict = Verdict::diverged;
            break;
        }
        current = std::move(next.value);
        if (trace.final_step <= config.tol * (1.0 + norm)) {
            trace.verdict = Verdict::converged;
            trace.limit = current;
            break;
        }
    }
    window.flush(trace);
    return trace;
}

IterationTrace iterate(PolicyOperator op, const std::vector<double>& start,
                       const ModelParams& params, const IterationConfig& config) {
    params.validate();
    if (start.size() != params.n_periods)
        throw InputError("start vector length does not match n_periods");
    return iterate(policy_map(op, params), start, config);
}

Matrix jacobian_fd(const VectorMap& map, const std::vector<double>& point) {
    const std::size_t n = point.size();
    const double base_step = std::cbrt(std::numeric_limits<double>::epsilon());
    // Central difference of column j with step h, exact representable span.
    auto column = [&](std::size_t j, double h) {
        std::vector<double> up = point;
        std::vector<double> down = point;
        up[j] += h;
        down[j] -= h;
        const double span = up[j] - down[j];
        const OperatorResult fu = map(up);
        const OperatorResult fd = map(down);
        if (!fu.in_domain || !fd.in_domain)
            throw DomainError("finite-difference stencil left the domain in coordinate " +
                                  std::to_string(j + 1),
                              j + 1);
        if (fu.value.size() != n || fd.value.size() != n)
            throw InputError("jacobian_fd: map is not square");
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = (fu.value[i] - fd.value[i]) / span;
        return d;
    };
    Matrix jac(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const double h = base_step * (1.0 + std::abs(point[j]));
        const std::vector<double> coarse = column(j, h);
        const std::vector<double> fine = column(j, 0.5 * h);
        // One Richardson level cancels the h^2 term.
        for (std::size_t i = 0; i < n; ++i) jac(i, j) = (4.0 * fine[i] - coarse[i]) / 3.0;
    }
    return jac;
}

Matrix jacobian_fd(PolicyOperator op, const std::vector<double>& point,
                   const ModelParams& params) {
    params.validate();
    if (point.size() != params.n_periods)
        throw InputError("point length does not match n_periods");
    return jacobian_fd(policy_map(op, params), point);
}

Matrix jacobian_closed_form(const std::vector<double>& point, const ModelParams& params) {
    params.validate();
    if (point.size() != params.n_periods)
        throw InputError("point length does not match n_periods");
    const double c = params.delta * params.sigma0;
    const double s = params.sigma_u * params.sigma_u;

    if (point.size() == 1) {
        const double b = point[0];
        if (b == 0.0) throw DomainError("beta_1 = 0 is outside dom(T)", 1);
        // T(b) = b/2 + s / (2 c b)
        return Matrix{{0.5 - s / (2.0 * c * b * b)}};
    }
    if (point.size() != 2) throw InputError("closed-form Jacobian only for N = 1 and N = 2");

    const double b1 = point[0];
    const double b2 = point[1];
    if (b2 == 0.0) throw DomainError("beta_2 = 0 is outside dom(T)", 2);

    // T_1 = A B / E with E = b1 c D.
    const double A = b1 * b1 * c + s;
    const double A1 = 2.0 * c * b1;
    const double B = b1 * c * (b1 - b2) * (b1 - b2) + s * (b1 - 2.0 * b2);
    const double B1 = c * (b1 - b2) * (b1 - b2) + 2.0 * b1 * c * (b1 - b2) + s;
    const double B2 = -2.0 * b1 * c * (b1 - b2) - 2.0 * s;
    const double D = b1 * c * (b1 * b1 - 4.0 * b1 * b2 + b2 * b2) + s * (b1 - 4.0 * b2);
    const double D1 = c * (b1 * b1 - 4.0 * b1 * b2 + b2 * b2) + b1 * c * (2.0 * b1 - 4.0 * b2) + s;
    const double D2 = b1 * c * (-4.0 * b1 + 2.0 * b2) - 4.0 * s;
    const double E = b1 * c * D;
    if (E == 0.0) throw DomainError("first denominator vanishes: outside dom(T)", 1);
    const double E1 = c * D + b1 * c * D1;
    const double E2 = b1 * c * D2;

    Matrix jac(2, 2);
    jac(0, 0) = ((A1 * B + A * B1) * E - A * B * E1) / (E * E);
    jac(0, 1) = (A * B2 * E - A * B * E2) / (E * E);
    // T_2 = (c (b1^2 + b2^2) + s) / (2 b2 c)
    jac(1, 0) = b1 / b2;
    jac(1, 1) = (c * (b2 * b2 - b1 * b1) - s) / (2.0 * c * b2 * b2);
    return jac;
}

std::string_view to_string(Classification c) {
    switch (c) {
        case Classification::super_attractive: return "super_attractive";
        case Classification::attractive: return "attractive";
        case Classification::repellent: return "repellent";
        case Classification::neutral: return "neutral";
    }
    return "neutral";
}

Classification classification_from_string(std::string_view s) {
    for (Classification c : {Classification::super_attractive, Classification::attractive,
                             Classification::repellent, Classification::neutral})
        if (to_string(c) == s) return c;
    throw InputError("unknown classification '" + std::string(s) + "'");
}

Classification classify_spectral_radius(double rho, double eps) {
    if (rho <= eps) return Classification::super_attractive;
    if (rho < 1.0 - eps) return Classification::attractive;
    if (rho > 1.0 + eps) return Classification::repellent;
    return Classification::neutral;
}

StabilityReport analyze_fixed_point(PolicyOperator op, const std::vector<double>& point,
                                    const ModelParams& params, double fixed_point_tol) {
    params.validate();
    if (point.size() != params.n_periods)
        throw InputError("point length does not match n_periods");

    const OperatorResult image = apply_operator(op, point, params);
    if (!image.in_domain) throw NotFixedPointError("point is outside the operator's domain");
    StabilityReport report;
    report.fixed_point_residual = sup_diff(image.value, point) / (1.0 + sup_norm(point));
    if (!(report.fixed_point_residual <= fixed_point_tol))
        throw NotFixedPointError("point is not a fixed point (relative residual " +
                                 std::to_string(report.fixed_point_residual) + ")");

    report.jacobian = jacobian_fd(op, point, params);
    report.eigenvalues = eigenvalues(report.jacobian);
    report.spectral_radius = spectral_radius(report.eigenvalues);
    report.inf_norm = report.jacobian.inf_norm();
    report.classification = classify_spectral_radius(report.spectral_radius);
    return report;
}

StabilityReport analyze_equilibrium(PolicyOperator op, const ModelParams& params) {
    return analyze_fixed_point(op, equilibrium_point(op, params), params);
}

double coordinate_derivative(PolicyOperator op, std::size_t k,
                             const std::vector<double>& base, const ModelParams& params) {
    if (k < 1 || k > base.size()) throw InputError("coordinate index out of range");
    const double x0 = base[k - 1];
    auto central = [&](double h) {
        const double up = scalar_coordinate(op, x0 + h, k, base, params);
        const double down = scalar_coordinate(op, x0 - h, k, base, params);
        if (!std::isfinite(up) || !std::isfinite(down))
            throw DomainError("derivative stencil left the domain in coordinate " + std::to_string(k), k);
        return (up - down) / ((x0 + h) - (x0 - h));
    };
    const double h = 1e-3 * (1.0 + std::abs(x0));
    const double d1 = central(h);
    const double d2 = central(h / 2.0);
    const double d4 = central(h / 4.0);
    const double r1 = (4.0 * d2 - d1) / 3.0;
    const double r2 = (4.0 * d4 - d2) / 3.0;
    return (16.0 * r2 - r1) / 15.0;
}

double scalar_derivative(std::size_t k, const ModelParams& params) {
    params.validate();
    if (k < 1 || k > params.n_periods) throw InputError("coordinate index out of range");
    return coordinate_derivative(PolicyOperator::insider, k,
                                 equilibrium_from_params(params).beta, params);
}

ScalarTrace linearized_iterate(double start, std::size_t k, const ModelParams& params,
                               std::size_t max_iter, double blowup) {
    const std::vector<double> beta = equilibrium_from_params(params).beta;
    if (k < 1 || k > beta.size()) throw InputError("coordinate index out of range");
    constexpr double tol = 1e-12;
    const double fixed = beta[k - 1];

    ScalarTrace trace;
    trace.multiplier = scalar_derivative(k, params);
    trace.iterates.push_back(start);
    double x = start;
    for (std::size_t m = 1; m <= max_iter; ++m) {
        const double next = fixed + trace.multiplier * (x - fixed);
        trace.iterates.push_back(next);
        trace.iterations_used = m;
        if (!std::isfinite(next) || std::abs(next) > blowup) {
            trace.verdict = Verdict::diverged;
            return trace;
        }
        const double step = std::abs(next - x);
        x = next;
        if (step <= tol * (1.0 + std::abs(next))) {
            trace.verdict = Verdict::converged;
            trace.limit = x;
            return trace;
        }
    }
    trace.verdict = Verdict::max_iter;
    return trace;
}

std::string_view to_string(PerturbMode m) {
    return m == PerturbMode::coordinate ? "coordinate" : "full";
}

PerturbMode perturb_mode_from_string(std::string_view s) {
    if (s == "coordinate") return PerturbMode::coordinate;
    if (s == "full") return PerturbMode::full;
    throw InputError("unknown perturbation mode '" + std::string(s) + "'");
}

PerturbationOutcome perturb_equilibrium(PolicyOperator op, const ModelParams& params,
                                        std::size_t k, double delta, PerturbMode mode,
                                        const IterationConfig& config,
                                        double equilibrium_tol) {
    params.validate();
    if (k < 1 || k > params.n_periods) throw InputError("coordinate index out of range");
    if (!std::isfinite(delta)) throw InputError("delta must be finite");

    const std::vector<double> fixed = equilibrium_point(op, params);
    const std::vector<double> start = pinned(fixed, k, fixed[k - 1] + delta);

    VectorMap map = policy_map(op, params);
    if (mode == PerturbMode::coordinate) {
        map = [map, fixed, k](const std::vector<double>& x) {
            OperatorResult r = map(x);
            if (r.in_domain) r.value = pinned(fixed, k, r.value[k - 1]);
            return r;
        };
    }

    PerturbationOutcome out;
    out.coordinate = k;
    out.delta = delta;
    out.mode = mode;
    out.trace = iterate(map, start, config);
    out.distance_to_equilibrium = kInf;
    if (out.trace.verdict == Verdict::converged && out.trace.limit) {
        out.distance_to_equilibrium = sup_diff(*out.trace.limit, fixed);
        out.converged_to_equilibrium =
            out.distance_to_equilibrium <= equilibrium_tol * std::max(1.0, sup_norm(fixed));
    }
    return out;
}

std::vector<PerturbationOutcome> perturbation_battery(PolicyOperator op,
                                                      const ModelParams& params, double delta,
                                                      PerturbMode mode,
                                                      const IterationConfig& config,
                                                      double equilibrium_tol) {
    params.validate();
    std::vector<std::future<PerturbationOutcome>> jobs;
    for (std::size_t k = 1; k <= params.n_periods; ++k)
        jobs.push_back(std::async(std::launch::async, [=] {
            return perturb_equilibrium(op, params, k, delta, mode, config, equilibrium_tol);
        }));
    std::vector<PerturbationOutcome> out;
    out.reserve(jobs.size());
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

}  // namespace kyle
