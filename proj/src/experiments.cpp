#include "kyle/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace kyle {

namespace {

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

json eigen_json(const std::vector<std::complex<double>>& eig) {
    json a = json::array();
    for (const auto& z : eig) a.push_back({{"re", encode_number(z.real())}, {"im", encode_number(z.imag())}});
    return a;
}

std::vector<std::size_t> resolve_coords(const std::string& coord, std::size_t n) {
    if (coord == "all") {
        std::vector<std::size_t> all(n);
        for (std::size_t k = 0; k < n; ++k) all[k] = k + 1;
        return all;
    }
    if (coord == "last") return {n};
    if (coord == "penultimate") {
        if (n < 2) throw InputError("--coord penultimate needs N >= 2");
        return {n - 1};
    }
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(coord.data(), coord.data() + coord.size(), k);
    if (ec != std::errc{} || ptr != coord.data() + coord.size() || k < 1 || k > n)
        throw InputError("--coord must be last, penultimate, all or an index in 1..N");
    return {k};
}

json shifted_start_json(const ShiftedStartRun& rep) {
    json out = {{"params", to_json(rep.params)},
                {"variance_shift", rep.variance_shift},
                {"beta_start", encode_vector(rep.beta_start)},
                {"beta_hat", encode_vector(rep.beta_hat)},
                {"verdict", std::string(to_string(rep.trace.verdict))},
                {"iterations_used", rep.trace.iterations_used},
                {"limit", encode_vector(rep.limit)},
                {"limit_residual", encode_number(rep.limit_residual)},
                {"start_distance", encode_number(rep.start_distance)}};
    if (rep.params.n_periods == 3 && rep.params.delta == 1.0 && rep.params.sigma_u == 1.0 &&
        rep.params.sigma0 == 1.0) {
        out["reference"] = {{"beta_start", encode_vector(reference::beta_start_n3)},
                            {"beta_hat", encode_vector(reference::beta_hat_n3)},
                            {"limit", encode_vector(reference::beta_limit_n3)}};
        out["deviation"] = {{"beta_start", sup_diff(rep.beta_start, reference::beta_start_n3)},
                            {"beta_hat", sup_diff(rep.beta_hat, reference::beta_hat_n3)},
                            {"limit", rep.limit.empty() ? json("inf")
                                                        : json(sup_diff(rep.limit, reference::beta_limit_n3))}};
    }
    return out;
}

json run_tables(const ExperimentSpec& spec) {
    json result = json::object();
    const bool all = spec.which == "all";
    if (all || spec.which == "key-results") {
        const auto rows = key_results_table(spec.params, spec.max_n);
        json table = json::array();
        bool all_repellent = true;
        for (const auto& r : rows) {
            table.push_back({{"N", r.n},
                             {"fixed_point_type", std::string(to_string(r.classification))},
                             {"conclusion", r.stable ? "stable" : "not stable"},
                             {"spectral_radius", encode_number(r.spectral_radius)},
                             {"inf_norm", encode_number(r.inf_norm)}});
            if (r.n >= 3 && r.classification != Classification::repellent) all_repellent = false;
        }
        json summary = json::array();
        for (const auto& r : rows)
            if (r.n <= 2)
                summary.push_back({{"N", std::to_string(r.n)},
                                   {"fixed_point_type", std::string(to_string(r.classification))},
                                   {"conclusion", r.stable ? "stable" : "not stable"}});
        if (spec.max_n >= 3)
            summary.push_back({{"N", ">=3 (checked up to " + std::to_string(spec.max_n) + ")"},
                               {"fixed_point_type", all_repellent ? "repellent" : "mixed"},
                               {"conclusion", all_repellent ? "not stable" : "mixed"}});
        result["key_results"] = {{"rows", table}, {"summary", summary}};
    }
    ShiftedStartRun rep;
    const bool need_shifted = all || spec.which == "eigenvalues" || spec.which == "shifted-start";
    if (need_shifted) {
        ModelParams p = spec.params;
        p.n_periods = 3;
        rep = reproduce_shifted_start(p, 1e-10, spec.iteration);
    }
    if (all || spec.which == "shifted-start") result["shifted_start"] = shifted_start_json(rep);
    if (all || spec.which == "eigenvalues") {
        if (rep.trace.verdict != Verdict::converged)
            throw std::runtime_error("policy iteration from the perturbed equilibrium did not converge");
        const EigenvalueTable t = eigenvalue_table(rep);
        result["eigenvalues"] = {{"at_limit", eigen_json(t.at_limit)},
                                 {"at_equilibrium", eigen_json(t.at_equilibrium)},
                                 {"reference_at_limit", encode_vector(reference::eigen_at_limit)},
                                 {"reference_at_equilibrium", encode_vector(reference::eigen_at_hat)}};
    }
    return result;
}

}  // namespace

std::string_view to_string(Command c) {
    switch (c) {
        case Command::equilibrium: return "equilibrium";
        case Command::iterate: return "iterate";
        case Command::jacobian: return "jacobian";
        case Command::stability: return "stability";
        case Command::perturb: return "perturb";
        case Command::simulate: return "simulate";
        case Command::tables: return "tables";
    }
    return "equilibrium";
}

Command command_from_string(std::string_view s) {
    for (Command c : {Command::equilibrium, Command::iterate, Command::jacobian, Command::stability,
                      Command::perturb, Command::simulate, Command::tables})
        if (to_string(c) == s) return c;
    throw InputError("unknown command '" + std::string(s) + "'");
}

void ExperimentSpec::validate() const {
    params.validate();
    iteration.validate();
    if (point) {
        if (point->size() != params.n_periods)
            throw InputError("--start/--at vector length does not match --n");
        for (double x : *point)
            if (!std::isfinite(x)) throw InputError("--start/--at entries must be finite");
    }
    if (jacobian_method != "fd" && jacobian_method != "closed")
        throw InputError("--method must be fd or closed");
    if (jacobian_method == "closed" && op != PolicyOperator::insider)
        throw InputError("closed-form Jacobian exists only for operator T");
    (void)resolve_coords(coord, params.n_periods);
    if (!std::isfinite(perturbation)) throw InputError("perturbation size must be finite");
    if (paths < 2) throw InputError("--paths must be >= 2");
    if (!std::isfinite(strategy_scale)) throw InputError("--strategy-scale must be finite");
    if (threads < 1) throw InputError("--threads must be >= 1");
    static const std::set<std::string> tables = {"all", "key-results", "eigenvalues", "shifted-start"};
    if (!tables.count(which)) throw InputError("--which must be one of all, key-results, eigenvalues, shifted-start");
    if (max_n < 1 || max_n > 64) throw InputError("--max-n must be in 1..64");
    if (format != "json" && format != "csv") throw InputError("--format must be json or csv");
}

json to_json(const ExperimentSpec& s) {
    return {{"command", std::string(to_string(s.command))},
            {"params", to_json(s.params)},
            {"operator", std::string(to_string(s.op))},
            {"tol", s.iteration.tol},
            {"max_iter", s.iteration.max_iter},
            {"blowup", s.iteration.blowup},
            {"trace_cap", s.iteration.trace_cap},
            {"point", s.point ? encode_vector(*s.point) : json(nullptr)},
            {"method", s.jacobian_method},
            {"coord", s.coord},
            {"perturbation", s.perturbation},
            {"mode", std::string(to_string(s.perturb_mode))},
            {"seed", s.seed},
            {"paths", s.paths},
            {"strategy_scale", s.strategy_scale},
            {"threads", s.threads},
            {"which", s.which},
            {"max_n", s.max_n},
            {"format", s.format},
            {"out", s.out ? json(*s.out) : json(nullptr)},
            {"expect_converge", s.expect_converge}};
}

ExperimentSpec experiment_spec_from_json(const json& j) {
    static const std::set<std::string> known = {
        "command", "params", "operator", "tol", "max_iter", "blowup", "trace_cap",
        "point", "method", "coord", "perturbation", "mode", "seed", "paths",
        "strategy_scale", "threads", "which", "max_n", "format", "out", "expect_converge"};
    if (!j.is_object()) throw InputError("experiment spec must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw InputError("unknown field '" + key + "' in experiment spec");

    ExperimentSpec s;
    try {
        s.command = command_from_string(j.at("command").get<std::string>());
        if (j.contains("params")) s.params = model_params_from_json(j.at("params"));
        if (j.contains("operator")) s.op = policy_operator_from_string(j.at("operator").get<std::string>());
        if (j.contains("tol")) s.iteration.tol = j.at("tol").get<double>();
        if (j.contains("max_iter")) s.iteration.max_iter = j.at("max_iter").get<std::size_t>();
        if (j.contains("blowup")) s.iteration.blowup = j.at("blowup").get<double>();
        if (j.contains("trace_cap")) s.iteration.trace_cap = j.at("trace_cap").get<std::size_t>();
        if (j.contains("point") && !j.at("point").is_null()) s.point = decode_vector(j.at("point"));
        if (j.contains("method")) s.jacobian_method = j.at("method").get<std::string>();
        if (j.contains("coord")) s.coord = j.at("coord").get<std::string>();
        if (j.contains("perturbation")) s.perturbation = j.at("perturbation").get<double>();
        if (j.contains("mode")) s.perturb_mode = perturb_mode_from_string(j.at("mode").get<std::string>());
        if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("paths")) s.paths = j.at("paths").get<std::size_t>();
        if (j.contains("strategy_scale")) s.strategy_scale = j.at("strategy_scale").get<double>();
        if (j.contains("threads")) s.threads = j.at("threads").get<unsigned>();
        if (j.contains("which")) s.which = j.at("which").get<std::string>();
        if (j.contains("max_n")) s.max_n = j.at("max_n").get<std::size_t>();
        if (j.contains("format")) s.format = j.at("format").get<std::string>();
        if (j.contains("out") && !j.at("out").is_null()) s.out = j.at("out").get<std::string>();
        if (j.contains("expect_converge")) s.expect_converge = j.at("expect_converge").get<bool>();
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed experiment spec: ") + e.what());
    }
    s.validate();
    return s;
}

ShiftedStartRun reproduce_shifted_start(const ModelParams& params, double variance_shift,
                                         const IterationConfig& config) {
    params.validate();
    ShiftedStartRun rep;
    rep.params = params;
    rep.variance_shift = variance_shift;
    ModelParams shifted = params;
    shifted.sigma_u = std::sqrt(params.sigma_u * params.sigma_u + variance_shift);
    rep.beta_start = equilibrium_from_params(shifted).beta;
    rep.beta_hat = equilibrium_from_params(params).beta;
    rep.start_distance = sup_diff(rep.beta_start, rep.beta_hat);
    rep.trace = iterate(PolicyOperator::insider, rep.beta_start, params, config);
    if (rep.trace.limit) {
        rep.limit = *rep.trace.limit;
        const OperatorResult image = operator_T(rep.limit, params);
        rep.limit_residual = image.in_domain ? sup_diff(image.value, rep.limit)
                                             : std::numeric_limits<double>::infinity();
    } else {
        rep.limit_residual = std::numeric_limits<double>::infinity();
    }
    return rep;
}

std::vector<KeyResultRow> key_results_table(const ModelParams& base, std::size_t max_n) {
    std::vector<KeyResultRow> rows;
    for (std::size_t n = 1; n <= max_n; ++n) {
        ModelParams p = base;
        p.n_periods = n;
        const StabilityReport rep = analyze_equilibrium(PolicyOperator::insider, p);
        KeyResultRow row;
        row.n = n;
        row.classification = rep.classification;
        row.spectral_radius = rep.spectral_radius;
        row.inf_norm = rep.inf_norm;
        row.stable = rep.classification == Classification::super_attractive ||
                     rep.classification == Classification::attractive;
        rows.push_back(row);
    }
    return rows;
}

EigenvalueTable eigenvalue_table(const ShiftedStartRun& rep) {
    EigenvalueTable t;
    t.at_limit = analyze_fixed_point(PolicyOperator::insider, rep.limit, rep.params).eigenvalues;
    t.at_equilibrium = analyze_fixed_point(PolicyOperator::insider, rep.beta_hat, rep.params).eigenvalues;
    return t;
}

ExperimentOutput run(const ExperimentSpec& spec) {
    ExperimentOutput out;
    out.report = {{"schema", kSchema}, {"command", std::string(to_string(spec.command))}};
    try {
        spec.validate();
        out.report["input"] = to_json(spec);
        const ModelParams& params = spec.params;
        const std::size_t n = params.n_periods;
        json result = json::object();

        switch (spec.command) {
            case Command::equilibrium: {
                const BCoefficients b = solve_b_recursion(n);
                const Equilibrium eq = equilibrium_from_params(params);
                result["b"] = encode_vector(b.b);
                result["equilibrium"] = to_json(eq);
                result["residuals"] = to_json(verify_kyle_recursions(eq, params, 1e-10));
                break;
            }
            case Command::iterate: {
                const std::vector<double> start = spec.point.value_or(equilibrium_point(spec.op, params));
                const IterationTrace trace = iterate(spec.op, start, params, spec.iteration);
                result["operator"] = std::string(to_string(spec.op));
                result["start"] = encode_vector(start);
                result["trace"] = to_json(trace);
                if (trace.limit) {
                    const OperatorResult image = apply_operator(spec.op, *trace.limit, params);
                    result["limit_residual"] = encode_number(
                        image.in_domain ? sup_diff(image.value, *trace.limit)
                                        : std::numeric_limits<double>::infinity());
                    result["distance_to_equilibrium"] =
                        sup_diff(*trace.limit, equilibrium_point(spec.op, params));
                }
                if (trace.verdict == Verdict::left_domain)
                    out.exit_code = kExitOutOfDomain;
                else if (spec.expect_converge && trace.verdict != Verdict::converged)
                    out.exit_code = kExitNotConverged;
                break;
            }
            case Command::jacobian: {
                const std::vector<double> at = spec.point.value_or(equilibrium_point(spec.op, params));
                const Matrix jac = spec.jacobian_method == "closed" ? jacobian_closed_form(at, params)
                                                                    : jacobian_fd(spec.op, at, params);
                result["operator"] = std::string(to_string(spec.op));
                result["method"] = spec.jacobian_method;
                result["point"] = encode_vector(at);
                result["jacobian"] = to_json(jac);
                result["inf_norm"] = encode_number(jac.inf_norm());
                break;
            }
            case Command::stability: {
                const std::vector<double> at = spec.point.value_or(equilibrium_point(spec.op, params));
                result["operator"] = std::string(to_string(spec.op));
                result["point"] = encode_vector(at);
                result["report"] = to_json(analyze_fixed_point(spec.op, at, params));
                if (spec.op == PolicyOperator::insider && n >= 3 && !spec.point) {
                    result["scalar_derivative_n_minus_2"] = encode_number(scalar_derivative(n - 2, params));
                    result["scalar_derivative_n"] = encode_number(scalar_derivative(n, params));
                }
                break;
            }
            case Command::perturb: {
                const std::vector<std::size_t> coords = resolve_coords(spec.coord, n);
                std::vector<PerturbationOutcome> outcomes;
                if (coords.size() == n && spec.coord == "all") {
                    outcomes = perturbation_battery(spec.op, params, spec.perturbation,
                                                    spec.perturb_mode, spec.iteration);
                } else {
                    for (std::size_t k : coords)
                        outcomes.push_back(perturb_equilibrium(spec.op, params, k, spec.perturbation,
                                                               spec.perturb_mode, spec.iteration));
                }
                json arr = json::array();
                bool all_back = true;
                for (const auto& o : outcomes) {
                    arr.push_back(to_json(o));
                    all_back = all_back && o.converged_to_equilibrium;
                }
                result["operator"] = std::string(to_string(spec.op));
                result["outcomes"] = arr;
                result["all_converged_to_equilibrium"] = all_back;
                if (spec.expect_converge && !all_back) out.exit_code = kExitNotConverged;
                break;
            }
            case Command::simulate: {
                SimConfig cfg = SimConfig::at_equilibrium(params, spec.paths, spec.seed, spec.strategy_scale);
                cfg.threads = spec.threads;
                result["strategy_beta"] = encode_vector(cfg.strategy_beta);
                result["pricing_lambda"] = encode_vector(cfg.pricing_lambda);
                const SimResult sim = simulate(cfg);
                result["simulation"] = to_json(sim);
                if (spec.strategy_scale == 1.0) {
                    TerminalVarianceCheck check;
                    check.model_sigma_n = equilibrium_from_params(params).sigma_sq.back();
                    check.estimate = sim.terminal_variance_estimate;
                    check.standard_error = sim.terminal_variance_se;
                    check.z_score = check.standard_error > 0.0
                                        ? (check.estimate - check.model_sigma_n) / check.standard_error
                                        : 0.0;
                    result["terminal_variance_check"] = to_json(check);
                } else {
                    SimConfig eq_cfg = SimConfig::at_equilibrium(params, spec.paths, spec.seed, 1.0);
                    eq_cfg.threads = spec.threads;
                    result["versus_equilibrium"] = to_json(compare_strategies(eq_cfg, cfg.strategy_beta));
                }
                break;
            }
            case Command::tables:
                result = run_tables(spec);
                break;
        }
        out.report["result"] = result;
    } catch (const InputError& e) {
        out.exit_code = kExitInputError;
        out.report["error"] = {{"kind", "input"}, {"message", e.what()}};
    } catch (const DomainError& e) {
        out.exit_code = kExitOutOfDomain;
        out.report["error"] = {{"kind", "out_of_domain"}, {"message", e.what()}, {"coordinate", e.coordinate()}};
    } catch (const NotFixedPointError& e) {
        out.exit_code = kExitOutOfDomain;
        out.report["error"] = {{"kind", "not_fixed_point"}, {"message", e.what()}};
    } catch (const std::exception& e) {
        out.exit_code = kExitNotConverged;
        out.report["error"] = {{"kind", "numerical_failure"}, {"message", e.what()}};
    }
    return out;
}

std::string serialize(const json& report, std::string_view format) {
    if (format == "csv") return to_csv(report);
    return report.dump(2) + "\n";
}

}  // namespace kyle
