#include "kyle/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "kyle/linalg.hpp"
#include "kyle/philox.hpp"

namespace kyle {

namespace {

constexpr std::size_t kChunkPaths = std::size_t{1} << 14;

// Neumaier compensated sum.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    void merge(const CompensatedSum& o) {
        add(o.sum);
        comp += o.comp;
    }
    double value() const { return sum + comp; }
};

void merge_all(std::vector<CompensatedSum>& into, const std::vector<CompensatedSum>& from) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i].merge(from[i]);
}

// Normals for one path: z[0] drives v, z[1..N] drive the noise orders.
void draw_path(const Philox4x32& rng, std::uint64_t path, std::vector<double>& z) {
    for (std::size_t i = 0; i < z.size(); i += 2) {
        const auto pair = normal_pair(rng.block(path, i / 2));
        z[i] = pair[0];
        if (i + 1 < z.size()) z[i + 1] = pair[1];
    }
}

struct PathState {
    double profit = 0.0;
    std::vector<double> dy;
    std::vector<double> err;  // v - p_n after round n
};

void run_path(const SimConfig& cfg, const std::vector<double>& beta, const std::vector<double>& z,
              PathState& out) {
    const ModelParams& p = cfg.params;
    const std::size_t n = p.n_periods;
    const double v = std::sqrt(p.sigma0) * z[0];
    const double noise_scale = p.sigma_u * std::sqrt(p.delta);
    double price = 0.0;
    out.profit = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double du = noise_scale * z[i + 1];
        const double dx = beta[i] * (v - price) * p.delta;
        const double dy = du + dx;
        price += cfg.pricing_lambda[i] * dy;
        out.profit += (v - price) * dx;
        out.dy[i] = dy;
        out.err[i] = v - price;
    }
}

// Runs `kernel(path, acc)` over all paths, chunk by chunk, and reduces the
// per-chunk accumulators in chunk order.
template <class Acc, class Kernel>
Acc run_chunked(std::size_t n_paths, unsigned threads, const Acc& prototype, Kernel kernel) {
    const std::size_t n_chunks = (n_paths + kChunkPaths - 1) / kChunkPaths;
    std::vector<Acc> partial(n_chunks, prototype);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        Kernel local = kernel;  // owns per-thread scratch buffers
        for (std::size_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
            const std::size_t begin = c * kChunkPaths;
            const std::size_t end = std::min(n_paths, begin + kChunkPaths);
            for (std::size_t path = begin; path < end; ++path) local(path, partial[c]);
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_chunks)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    Acc total = prototype;
    for (const Acc& a : partial) total.merge(a);
    return total;
}

struct SimAccumulator {
    std::size_t n_periods = 0;
    CompensatedSum profit, profit_sq;
    // Period p (0-based) regresses err_p on dy_0..dy_p: (p+1)^2 cross products.
    std::vector<std::vector<CompensatedSum>> xtx;
    std::vector<std::vector<CompensatedSum>> xte;
    std::vector<CompensatedSum> ete;
    std::vector<CompensatedSum> terminal;  // raw moments 1..4 of v - p_N

    explicit SimAccumulator(std::size_t n) : n_periods(n), xtx(n), xte(n), ete(n), terminal(4) {
        for (std::size_t p = 0; p < n; ++p) {
            xtx[p].resize((p + 1) * (p + 1));
            xte[p].resize(p + 1);
        }
    }

    void add(const PathState& s) {
        profit.add(s.profit);
        profit_sq.add(s.profit * s.profit);
        for (std::size_t p = 0; p < n_periods; ++p) {
            const std::size_t k = p + 1;
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = 0; j < k; ++j) xtx[p][i * k + j].add(s.dy[i] * s.dy[j]);
                xte[p][i].add(s.dy[i] * s.err[p]);
            }
            ete[p].add(s.err[p] * s.err[p]);
        }
        const double e = s.err[n_periods - 1];
        const double e2 = e * e;
        terminal[0].add(e);
        terminal[1].add(e2);
        terminal[2].add(e2 * e);
        terminal[3].add(e2 * e2);
    }

    void merge(const SimAccumulator& o) {
        profit.merge(o.profit);
        profit_sq.merge(o.profit_sq);
        for (std::size_t p = 0; p < n_periods; ++p) {
            merge_all(xtx[p], o.xtx[p]);
            merge_all(xte[p], o.xte[p]);
            ete[p].merge(o.ete[p]);
        }
        merge_all(terminal, o.terminal);
    }
};

EfficiencyRegression regress(const SimAccumulator& acc, std::size_t p, std::size_t n_paths) {
    const std::size_t k = p + 1;
    Matrix xtx(k, k);
    std::vector<double> xte(k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) xtx(i, j) = acc.xtx[p][i * k + j].value();
        xte[i] = acc.xte[p][i].value();
    }
    const Matrix inv = inverse(xtx);
    EfficiencyRegression r;
    r.period = k;
    r.coefficients = inv * xte;
    double explained = 0.0;
    for (std::size_t i = 0; i < k; ++i) explained += r.coefficients[i] * xte[i];
    const double rss = std::max(0.0, acc.ete[p].value() - explained);
    const double dof = static_cast<double>(n_paths) - static_cast<double>(k);
    r.residual_variance = dof > 0.0 ? rss / dof : 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double se = std::sqrt(r.residual_variance * inv(i, i));
        r.standard_errors.push_back(se);
        r.t_stats.push_back(se > 0.0 ? r.coefficients[i] / se : 0.0);
    }
    return r;
}

double mean_se(double sum, double sum_sq, double n) {
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return std::sqrt(var / n);
}

}  // namespace

void SimConfig::validate() const {
    params.validate();
    if (n_paths < 2) throw InputError("n_paths must be >= 2");
    if (strategy_beta.size() != params.n_periods)
        throw InputError("strategy_beta length does not match n_periods");
    if (pricing_lambda.size() != params.n_periods)
        throw InputError("pricing_lambda length does not match n_periods");
    for (double x : strategy_beta)
        if (!std::isfinite(x)) throw InputError("strategy_beta must be finite");
    for (double x : pricing_lambda)
        if (!std::isfinite(x)) throw InputError("pricing_lambda must be finite");
}

SimConfig SimConfig::at_equilibrium(const ModelParams& params, std::size_t n_paths,
                                    std::uint64_t seed, double strategy_scale) {
    const Equilibrium eq = equilibrium_from_params(params);
    SimConfig cfg;
    cfg.params = params;
    cfg.n_paths = n_paths;
    cfg.seed = seed;
    cfg.strategy_beta = eq.beta;
    for (double& b : cfg.strategy_beta) b *= strategy_scale;
    cfg.pricing_lambda = eq.lambda;
    return cfg;
}

double EfficiencyRegression::max_abs_t() const {
    double m = 0.0;
    for (double t : t_stats) m = std::max(m, std::abs(t));
    return m;
}

SimResult simulate(const SimConfig& config) {
    config.validate();
    const std::size_t n = config.params.n_periods;
    const Philox4x32 rng(config.seed);

    const SimAccumulator total = run_chunked(
        config.n_paths, config.threads, SimAccumulator(n),
        [&, z = std::vector<double>(n + 1), state = PathState{0.0, std::vector<double>(n),
                                                               std::vector<double>(n)}](
            std::size_t path, SimAccumulator& acc) mutable {
            draw_path(rng, path, z);
            run_path(config, config.strategy_beta, z, state);
            acc.add(state);
        });

    const double np = static_cast<double>(config.n_paths);
    SimResult r;
    r.n_paths = config.n_paths;
    r.seed = config.seed;
    r.mean_profit = total.profit.value() / np;
    r.profit_se = mean_se(total.profit.value(), total.profit_sq.value(), np);
    for (std::size_t p = 0; p < n; ++p) r.efficiency.push_back(regress(total, p, config.n_paths));

    const double m1 = total.terminal[0].value() / np;
    const double r2 = total.terminal[1].value() / np;
    const double r3 = total.terminal[2].value() / np;
    const double r4 = total.terminal[3].value() / np;
    const double c2 = r2 - m1 * m1;
    const double c4 = r4 - 4.0 * m1 * r3 + 6.0 * m1 * m1 * r2 - 3.0 * m1 * m1 * m1 * m1;
    r.terminal_mean_error = m1;
    r.terminal_variance_estimate = c2 * np / (np - 1.0);
    r.terminal_variance_se = std::sqrt(std::max(0.0, c4 - c2 * c2) / np);
    return r;
}

ProfitComparison compare_strategies(const SimConfig& base, const std::vector<double>& alt_beta) {
    base.validate();
    const std::size_t n = base.params.n_periods;
    if (alt_beta.size() != n) throw InputError("alternative strategy length does not match n_periods");

    struct Acc {
        CompensatedSum base, alt, diff, diff_sq;
        void merge(const Acc& o) {
            base.merge(o.base);
            alt.merge(o.alt);
            diff.merge(o.diff);
            diff_sq.merge(o.diff_sq);
        }
    };
    const Philox4x32 rng(base.seed);
    const Acc total = run_chunked(
        base.n_paths, base.threads, Acc{},
        [&, z = std::vector<double>(n + 1),
         s = PathState{0.0, std::vector<double>(n), std::vector<double>(n)}](std::size_t path,
                                                                              Acc& acc) mutable {
            draw_path(rng, path, z);
            run_path(base, base.strategy_beta, z, s);
            const double pb = s.profit;
            run_path(base, alt_beta, z, s);
            const double pa = s.profit;
            acc.base.add(pb);
            acc.alt.add(pa);
            acc.diff.add(pa - pb);
            acc.diff_sq.add((pa - pb) * (pa - pb));
        });

    const double np = static_cast<double>(base.n_paths);
    ProfitComparison out;
    out.mean_profit_base = total.base.value() / np;
    out.mean_profit_alt = total.alt.value() / np;
    out.mean_difference = total.diff.value() / np;
    out.difference_se = mean_se(total.diff.value(), total.diff_sq.value(), np);
    return out;
}

TerminalVarianceCheck terminal_variance_check(const SimConfig& config) {
    const SimResult r = simulate(config);
    TerminalVarianceCheck out;
    out.model_sigma_n = equilibrium_from_params(config.params).sigma_sq.back();
    out.estimate = r.terminal_variance_estimate;
    out.standard_error = r.terminal_variance_se;
    out.z_score = out.standard_error > 0.0 ? (out.estimate - out.model_sigma_n) / out.standard_error : 0.0;
    return out;
}

}  // namespace kyle
