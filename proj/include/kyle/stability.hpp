#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "kyle/linalg.hpp"
#include "kyle/model.hpp"
#include "kyle/policy.hpp"

namespace kyle {

/// A finite-difference stencil or scalar evaluation left the operator's
/// domain. `coordinate` is 1-based.
class DomainError : public std::domain_error {
public:
    DomainError(const std::string& what, std::size_t coordinate)
        : std::domain_error(what), coordinate_(coordinate) {}
    std::size_t coordinate() const { return coordinate_; }

private:
    std::size_t coordinate_;
};

/// Raised when asked to classify a point that does not satisfy x = F(x).
class NotFixedPointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using VectorMap = std::function<OperatorResult(const std::vector<double>&)>;

/// The map x -> F(x) for one of the two policy operators.
VectorMap policy_map(PolicyOperator op, const ModelParams& params);

/// beta-hat for T, lambda-hat for S.
std::vector<double> equilibrium_point(PolicyOperator op, const ModelParams& params);

// ---------------------------------------------------------------------------
// Iteration driver

enum class Verdict { converged, diverged, left_domain, max_iter };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct IterationConfig {
    double tol = 1e-12;           // relative successive-difference tolerance
    std::size_t max_iter = 10000;
    double blowup = 1e8;          // sup-norm divergence threshold
    std::size_t trace_cap = 1000; // retained iterates (head half + tail half)

    void validate() const;
};

/// Sequence x^(0), x^(1), ... of a fixed-point iteration. When more than
/// `trace_cap` iterates were produced only the head and tail windows are
/// kept; `indices` holds the iteration number of each retained iterate.
struct IterationTrace {
    std::vector<std::vector<double>> iterates;
    std::vector<std::size_t> indices;
    Verdict verdict = Verdict::max_iter;
    std::optional<std::vector<double>> limit;
    std::size_t iterations_used = 0;
    double final_step = 0.0;  // sup-norm of the last successive difference
};

IterationTrace iterate(const VectorMap& map, const std::vector<double>& start,
                       const IterationConfig& config);

IterationTrace iterate(PolicyOperator op, const std::vector<double>& start,
                       const ModelParams& params, const IterationConfig& config);

// ---------------------------------------------------------------------------
// Jacobians and spectra

/// Central differences with base step h_j = cbrt(eps) (1 + |x_j|) and one
/// Richardson level (h_j, h_j / 2). Throws DomainError when
/// a stencil point leaves the map's domain.
Matrix jacobian_fd(const VectorMap& map, const std::vector<double>& point);

Matrix jacobian_fd(PolicyOperator op, const std::vector<double>& point,
                   const ModelParams& params);

/// Analytic Jacobian of the explicit N = 1 and N = 2 forms of T.
/// Throws InputError for N >= 3 and DomainError outside dom(T).
Matrix jacobian_closed_form(const std::vector<double>& point, const ModelParams& params);

enum class Classification { super_attractive, attractive, repellent, neutral };

std::string_view to_string(Classification c);
Classification classification_from_string(std::string_view s);

inline constexpr double kClassEps = 1e-6;

Classification classify_spectral_radius(double spectral_radius, double eps = kClassEps);

struct StabilityReport {
    Matrix jacobian;
    std::vector<std::complex<double>> eigenvalues;  // descending magnitude
    double spectral_radius = 0.0;
    double inf_norm = 0.0;
    Classification classification = Classification::neutral;
    double fixed_point_residual = 0.0;  // |F(x) - x|_inf / (1 + |x|_inf)
};

/// Builds the full report at `point`. Throws NotFixedPointError when the
/// relative fixed-point residual exceeds `fixed_point_tol`.
StabilityReport analyze_fixed_point(PolicyOperator op, const std::vector<double>& point,
                                    const ModelParams& params,
                                    double fixed_point_tol = 1e-8);

/// Report at the operator's equilibrium point (beta-hat or lambda-hat).
StabilityReport analyze_equilibrium(PolicyOperator op, const ModelParams& params);

// ---------------------------------------------------------------------------
// Scalar coordinate analysis

/// d/dx of coordinate k of `op` at `base`, all other coordinates pinned to
/// `base`. Central differences with two Richardson extrapolation levels.
double coordinate_derivative(PolicyOperator op, std::size_t k,
                             const std::vector<double>& base, const ModelParams& params);

/// Derivative of scalar_T_coord at beta-hat_k.
double scalar_derivative(std::size_t k, const ModelParams& params);

struct ScalarTrace {
    std::vector<double> iterates;
    Verdict verdict = Verdict::max_iter;
    std::optional<double> limit;
    std::size_t iterations_used = 0;
    double multiplier = 0.0;
};

/// x -> beta-hat_k + T'(beta-hat_k) (x - beta-hat_k), the linearisation of
/// the scalar coordinate map at the equilibrium.
ScalarTrace linearized_iterate(double start, std::size_t k, const ModelParams& params,
                               std::size_t max_iter = 10000, double blowup = 1e8);

// ---------------------------------------------------------------------------
// Perturbation batteries

/// `coordinate` iterates only coordinate k with the others pinned at the
/// equilibrium (the scalar coordinate map); `full` iterates the whole
/// vector operator from the perturbed point.
enum class PerturbMode { coordinate, full };

std::string_view to_string(PerturbMode m);
PerturbMode perturb_mode_from_string(std::string_view s);

struct PerturbationOutcome {
    std::size_t coordinate = 0;  // 1-based
    double delta = 0.0;
    PerturbMode mode = PerturbMode::coordinate;
    IterationTrace trace;
    double distance_to_equilibrium = 0.0;  // sup-norm, +inf unless converged
    bool converged_to_equilibrium = false;
};

/// Perturbs coordinate k of the equilibrium by `delta` and iterates.
/// Convergence back counts when the limit lies within
/// `equilibrium_tol * max(1, |x-hat|_inf)` of the equilibrium.
PerturbationOutcome perturb_equilibrium(PolicyOperator op, const ModelParams& params,
                                        std::size_t k, double delta, PerturbMode mode,
                                        const IterationConfig& config,
                                        double equilibrium_tol = 1e-10);

/// One outcome per coordinate 1..N; runs concurrently.
std::vector<PerturbationOutcome> perturbation_battery(PolicyOperator op,
                                                      const ModelParams& params, double delta,
                                                      PerturbMode mode,
                                                      const IterationConfig& config,
                                                      double equilibrium_tol = 1e-10);

}  // namespace kyle
