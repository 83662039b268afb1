#include "kyle/report.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace kyle {

json encode_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double decode_number(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw InputError("expected a number or non-finite token, got " + j.dump());
}

json encode_vector(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(encode_number(x));
    return a;
}

std::vector<double> decode_vector(const json& j) {
    if (!j.is_array()) throw InputError("expected an array of numbers");
    std::vector<double> v;
    v.reserve(j.size());
    for (const auto& x : j) v.push_back(decode_number(x));
    return v;
}

json to_json(const ModelParams& p) {
    return {{"n_periods", p.n_periods},
            {"delta", p.delta},
            {"sigma_u", p.sigma_u},
            {"sigma0", p.sigma0}};
}

ModelParams model_params_from_json(const json& j) {
    ModelParams p;
    p.n_periods = j.at("n_periods").get<std::size_t>();
    p.delta = decode_number(j.at("delta"));
    p.sigma_u = decode_number(j.at("sigma_u"));
    p.sigma0 = decode_number(j.at("sigma0"));
    return p;
}

json to_json(const Equilibrium& eq) {
    return {{"beta", encode_vector(eq.beta)},
            {"lambda", encode_vector(eq.lambda)},
            {"alpha", encode_vector(eq.alpha)},
            {"sigma_sq", encode_vector(eq.sigma_sq)}};
}

Equilibrium equilibrium_from_json(const json& j) {
    return {decode_vector(j.at("beta")), decode_vector(j.at("lambda")),
            decode_vector(j.at("alpha")), decode_vector(j.at("sigma_sq"))};
}

json to_json(const RecursionResiduals& r) {
    return {{"lambda", encode_number(r.lambda)},
            {"sigma", encode_number(r.sigma)},
            {"alpha", encode_number(r.alpha)},
            {"beta", encode_number(r.beta)},
            {"terminal_alpha", encode_number(r.terminal_alpha)},
            {"max_lambda_alpha", encode_number(r.max_lambda_alpha)},
            {"second_order_ok", r.second_order_ok},
            {"ok", r.ok}};
}

json to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(encode_vector(m.row(i)));
    return rows;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_array()) throw InputError("expected a matrix as an array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = rows == 0 ? 0 : j[0].size();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto r = decode_vector(j[i]);
        if (r.size() != cols) throw InputError("ragged matrix");
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = r[c];
    }
    return m;
}

json to_json(const IterationTrace& t) {
    json iterates = json::array();
    for (std::size_t i = 0; i < t.iterates.size(); ++i)
        iterates.push_back({{"m", t.indices[i]}, {"x", encode_vector(t.iterates[i])}});
    return {{"verdict", std::string(to_string(t.verdict))},
            {"iterations_used", t.iterations_used},
            {"final_step", encode_number(t.final_step)},
            {"limit", t.limit ? encode_vector(*t.limit) : json(nullptr)},
            {"iterates", iterates}};
}

IterationTrace iteration_trace_from_json(const json& j) {
    IterationTrace t;
    t.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    t.iterations_used = j.at("iterations_used").get<std::size_t>();
    t.final_step = decode_number(j.at("final_step"));
    if (!j.at("limit").is_null()) t.limit = decode_vector(j.at("limit"));
    for (const auto& it : j.at("iterates")) {
        t.indices.push_back(it.at("m").get<std::size_t>());
        t.iterates.push_back(decode_vector(it.at("x")));
    }
    return t;
}

json to_json(const StabilityReport& r) {
    json eig = json::array();
    for (const auto& z : r.eigenvalues)
        eig.push_back({{"re", encode_number(z.real())}, {"im", encode_number(z.imag())}});
    return {{"jacobian", to_json(r.jacobian)},
            {"eigenvalues", eig},
            {"spectral_radius", encode_number(r.spectral_radius)},
            {"inf_norm", encode_number(r.inf_norm)},
            {"classification", std::string(to_string(r.classification))},
            {"fixed_point_residual", encode_number(r.fixed_point_residual)}};
}

StabilityReport stability_report_from_json(const json& j) {
    StabilityReport r;
    r.jacobian = matrix_from_json(j.at("jacobian"));
    for (const auto& z : j.at("eigenvalues"))
        r.eigenvalues.emplace_back(decode_number(z.at("re")), decode_number(z.at("im")));
    r.spectral_radius = decode_number(j.at("spectral_radius"));
    r.inf_norm = decode_number(j.at("inf_norm"));
    r.classification = classification_from_string(j.at("classification").get<std::string>());
    r.fixed_point_residual = decode_number(j.at("fixed_point_residual"));
    return r;
}

json to_json(const ScalarTrace& t) {
    return {{"verdict", std::string(to_string(t.verdict))},
            {"iterations_used", t.iterations_used},
            {"multiplier", encode_number(t.multiplier)},
            {"limit", t.limit ? encode_number(*t.limit) : json(nullptr)},
            {"iterates", encode_vector(t.iterates)}};
}

json to_json(const PerturbationOutcome& o) {
    std::string outcome;
    if (o.converged_to_equilibrium)
        outcome = "converged_to_equilibrium";
    else if (o.trace.verdict == Verdict::converged)
        outcome = "converged_elsewhere";
    else
        outcome = std::string(to_string(o.trace.verdict));
    return {{"coordinate", o.coordinate},
            {"delta", encode_number(o.delta)},
            {"mode", std::string(to_string(o.mode))},
            {"outcome", outcome},
            {"converged_to_equilibrium", o.converged_to_equilibrium},
            {"distance_to_equilibrium", encode_number(o.distance_to_equilibrium)},
            {"trace", to_json(o.trace)}};
}

PerturbationOutcome perturbation_outcome_from_json(const json& j) {
    PerturbationOutcome o;
    o.coordinate = j.at("coordinate").get<std::size_t>();
    o.delta = decode_number(j.at("delta"));
    o.mode = perturb_mode_from_string(j.at("mode").get<std::string>());
    o.converged_to_equilibrium = j.at("converged_to_equilibrium").get<bool>();
    o.distance_to_equilibrium = decode_number(j.at("distance_to_equilibrium"));
    o.trace = iteration_trace_from_json(j.at("trace"));
    return o;
}

json to_json(const SimResult& r) {
    json eff = json::array();
    for (const auto& e : r.efficiency)
        eff.push_back({{"period", e.period},
                       {"coefficients", encode_vector(e.coefficients)},
                       {"standard_errors", encode_vector(e.standard_errors)},
                       {"t_stats", encode_vector(e.t_stats)},
                       {"residual_variance", encode_number(e.residual_variance)}});
    return {{"n_paths", r.n_paths},
            {"seed", r.seed},
            {"mean_profit", encode_number(r.mean_profit)},
            {"profit_se", encode_number(r.profit_se)},
            {"efficiency", eff},
            {"terminal_mean_error", encode_number(r.terminal_mean_error)},
            {"terminal_variance_estimate", encode_number(r.terminal_variance_estimate)},
            {"terminal_variance_se", encode_number(r.terminal_variance_se)}};
}

SimResult sim_result_from_json(const json& j) {
    SimResult r;
    r.n_paths = j.at("n_paths").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mean_profit = decode_number(j.at("mean_profit"));
    r.profit_se = decode_number(j.at("profit_se"));
    for (const auto& e : j.at("efficiency")) {
        EfficiencyRegression reg;
        reg.period = e.at("period").get<std::size_t>();
        reg.coefficients = decode_vector(e.at("coefficients"));
        reg.standard_errors = decode_vector(e.at("standard_errors"));
        reg.t_stats = decode_vector(e.at("t_stats"));
        reg.residual_variance = decode_number(e.at("residual_variance"));
        r.efficiency.push_back(std::move(reg));
    }
    r.terminal_mean_error = decode_number(j.at("terminal_mean_error"));
    r.terminal_variance_estimate = decode_number(j.at("terminal_variance_estimate"));
    r.terminal_variance_se = decode_number(j.at("terminal_variance_se"));
    return r;
}

json to_json(const ProfitComparison& c) {
    return {{"mean_profit_base", encode_number(c.mean_profit_base)},
            {"mean_profit_alt", encode_number(c.mean_profit_alt)},
            {"mean_difference", encode_number(c.mean_difference)},
            {"difference_se", encode_number(c.difference_se)}};
}

json to_json(const TerminalVarianceCheck& c) {
    return {{"model_sigma_n", encode_number(c.model_sigma_n)},
            {"estimate", encode_number(c.estimate)},
            {"standard_error", encode_number(c.standard_error)},
            {"z_score", encode_number(c.z_score)}};
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string to_csv(const json& report) {
    std::ostringstream out;
    out << "field,value\n";
    const json flat = report.flatten();
    for (const auto& [pointer, value] : flat.items()) {
        std::string cell;
        if (value.is_string())
            cell = value.get<std::string>();
        else if (value.is_null())
            cell = "";
        else
            cell = value.dump();
        out << csv_escape(pointer) << ',' << csv_escape(cell) << '\n';
    }
    return out.str();
}

}  // namespace kyle
