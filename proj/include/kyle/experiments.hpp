#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kyle/report.hpp"

namespace kyle {

enum class Command { equilibrium, iterate, jacobian, stability, perturb, simulate, tables };

std::string_view to_string(Command c);
Command command_from_string(std::string_view s);

/// Exit codes of the command-line driver.
enum ExitCode : int {
    kExitOk = 0,
    kExitInputError = 2,
    kExitOutOfDomain = 3,
    kExitNotConverged = 4,
};

/// Fully validated description of one experiment run.
struct ExperimentSpec {
    Command command = Command::equilibrium;
    ModelParams params = ModelParams::unit(3);
    PolicyOperator op = PolicyOperator::insider;
    IterationConfig iteration;

    /// Start vector (iterate) or evaluation point (jacobian, stability);
    /// defaults to the equilibrium point of `op`.
    std::optional<std::vector<double>> point;
    std::string jacobian_method = "fd";  // fd | closed

    std::string coord = "last";  // last | penultimate | all | <1-based index>
    double perturbation = 1e-3;
    PerturbMode perturb_mode = PerturbMode::coordinate;

    std::uint64_t seed = 20240601;
    std::size_t paths = 1'000'000;
    double strategy_scale = 1.0;
    unsigned threads = 1;

    std::string which = "all";  // key-results | eigenvalues | shifted-start | all
    std::size_t max_n = 8;      // largest N in the key-results table

    std::string format = "json";  // json | csv
    std::optional<std::string> out;
    bool expect_converge = false;

    /// Throws InputError on any invalid option.
    void validate() const;
};

json to_json(const ExperimentSpec& spec);
/// Rejects unknown fields.
ExperimentSpec experiment_spec_from_json(const json& j);

struct ExperimentOutput {
    int exit_code = kExitOk;
    json report;
};

/// Dispatches a spec to the library and builds the versioned report.
/// Input errors and domain failures are reported through exit_code with an
/// "error" entry in the report; nothing is thrown for them.
ExperimentOutput run(const ExperimentSpec& spec);

std::string serialize(const json& report, std::string_view format);

// ---------------------------------------------------------------------------
// Reproductions

/// Policy iteration at N = 3 started from the equilibrium of a market whose
/// noise variance is shifted by `variance_shift`.
struct ShiftedStartRun {
    ModelParams params;
    double variance_shift = 1e-10;
    std::vector<double> beta_start;
    std::vector<double> beta_hat;
    IterationTrace trace;
    std::vector<double> limit;
    double limit_residual = 0.0;  // |T(limit) - limit|_inf
    double start_distance = 0.0;  // |beta_start - beta_hat|_inf
};

ShiftedStartRun reproduce_shifted_start(const ModelParams& params = ModelParams::unit(3),
                                         double variance_shift = 1e-10,
                                         const IterationConfig& config = {});

/// Reference digits, used only for comparison columns in reports.
namespace reference {
inline const std::vector<double> beta_hat_n3 = {0.5381695932221123, 0.7575868210282761,
                                                1.3651242809592772};
inline const std::vector<double> beta_start_n3 = {0.5381695932490208, 0.7575868210661554,
                                                  1.3651242810275332};
inline const std::vector<double> beta_limit_n3 = {1.2582536009629393, -2.157491457005712,
                                                  2.6903478420808034};
inline const std::vector<double> eigen_at_hat = {-2.16095, -0.896373, 0.0};
inline const std::vector<double> eigen_at_limit = {0.413853, 0.193926, 0.0};
inline const std::vector<double> jacobian_n2 = {-0.981214, 0.0, 0.554958, 0.0};
inline constexpr double scalar_derivative = -2.07611;
}  // namespace reference

struct KeyResultRow {
    std::size_t n = 0;
    Classification classification = Classification::neutral;
    double spectral_radius = 0.0;
    double inf_norm = 0.0;
    bool stable = false;
};

/// Classification of the equilibrium for N = 1..max_n (computed).
std::vector<KeyResultRow> key_results_table(const ModelParams& base, std::size_t max_n);

struct EigenvalueTable {
    std::vector<std::complex<double>> at_limit;
    std::vector<std::complex<double>> at_equilibrium;
};

EigenvalueTable eigenvalue_table(const ShiftedStartRun& rep);

}  // namespace kyle
