#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kyle/model.hpp"

namespace kyle {

/// Simulation of the trading game under a linear insider strategy
/// dx_n = beta_n (v - p_{n-1}) Delta and linear pricing dp_n = lambda_n dy_n.
struct SimConfig {
    ModelParams params;
    std::size_t n_paths = 1'000'000;
    std::uint64_t seed = 0;
    std::vector<double> strategy_beta;
    std::vector<double> pricing_lambda;
    unsigned threads = 1;

    void validate() const;

    /// Equilibrium strategy scaled by `strategy_scale`, equilibrium pricing.
    static SimConfig at_equilibrium(const ModelParams& params, std::size_t n_paths,
                                    std::uint64_t seed, double strategy_scale = 1.0);
};

/// OLS of the pricing error v - p_n on the order flows dy_1..dy_n (no
/// intercept). Under an efficient price every coefficient is zero.
struct EfficiencyRegression {
    std::size_t period = 0;  // 1-based
    std::vector<double> coefficients;
    std::vector<double> standard_errors;
    std::vector<double> t_stats;
    double residual_variance = 0.0;

    double max_abs_t() const;

    friend bool operator==(const EfficiencyRegression&, const EfficiencyRegression&) = default;
};

struct SimResult {
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double mean_profit = 0.0;
    double profit_se = 0.0;
    std::vector<EfficiencyRegression> efficiency;
    double terminal_mean_error = 0.0;              // sample mean of v - p_N
    double terminal_variance_estimate = 0.0;       // sample variance of v - p_N
    double terminal_variance_se = 0.0;

    friend bool operator==(const SimResult&, const SimResult&) = default;
};

/// Runs the simulation. Path i draws its normals from Philox stream i under
/// `seed`; paths are reduced in fixed-size chunks in chunk order, so the
/// result is bit-identical for any thread count.
SimResult simulate(const SimConfig& config);

/// Paired comparison of two insider strategies under the same pricing rule
/// and the same random draws.
struct ProfitComparison {
    double mean_profit_base = 0.0;
    double mean_profit_alt = 0.0;
    double mean_difference = 0.0;  // alt - base
    double difference_se = 0.0;    // standard error of the paired difference
};

ProfitComparison compare_strategies(const SimConfig& base, const std::vector<double>& alt_beta);

struct TerminalVarianceCheck {
    double model_sigma_n = 0.0;
    double estimate = 0.0;
    double standard_error = 0.0;
    double z_score = 0.0;
};

/// Compares the sample variance of v - p_N with the equilibrium Sigma_N.
/// Meaningful when the configured strategy and pricing are the equilibrium
/// ones.
TerminalVarianceCheck terminal_variance_check(const SimConfig& config);

}  // namespace kyle
