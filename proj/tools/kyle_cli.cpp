// kyle: command-line driver for the equilibrium, stability and simulation experiments.

#include <charconv>
#include <fstream>
#include <iostream>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kyle/experiments.hpp"

namespace {

std::vector<double> parse_vector(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        std::string item = text.substr(pos, comma - pos);
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        if (first == std::string::npos) throw kyle::InputError("empty entry in vector '" + text + "'");
        item = item.substr(first, last - first + 1);
        double x = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
        if (ec != std::errc{} || ptr != item.data() + item.size())
            throw kyle::InputError("cannot parse '" + item + "' as a number");
        out.push_back(x);
        pos = comma + 1;
    }
    return out;
}

kyle::ExperimentSpec load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw kyle::InputError("cannot open spec file '" + path + "'");
    kyle::json j;
    try {
        in >> j;
    } catch (const kyle::json::exception& e) {
        throw kyle::InputError("spec file is not valid JSON: " + std::string(e.what()));
    }
    return kyle::experiment_spec_from_json(j);
}

int emit(const kyle::ExperimentOutput& result, const std::string& format,
         const std::optional<std::string>& out_path) {
    const std::string text = kyle::serialize(result.report, format);
    if (out_path) {
        std::ofstream out(*out_path, std::ios::binary);
        out << text;
        if (!out) {
            std::cerr << "error: cannot write '" << *out_path << "'\n";
            return kyle::kExitInputError;
        }
    } else {
        std::cout << text;
    }
    if (result.report.contains("error"))
        std::cerr << "error: " << result.report["error"].value("message", "") << '\n';
    return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    std::locale::global(std::locale::classic());
    std::cout.imbue(std::locale::classic());

    CLI::App app{"Discrete-time Kyle equilibrium: policy iteration, stability and simulation"};
    app.fallthrough();
    app.require_subcommand(0, 1);

    kyle::ExperimentSpec spec;
    std::string spec_file;
    std::size_t n = spec.params.n_periods;
    double sigma_u = spec.params.sigma_u;
    double sigma0 = spec.params.sigma0;
    std::optional<double> delta_flag;
    std::optional<double> time_step;
    std::optional<double> perturbation;
    std::string op = "T";
    std::string start;
    std::string mode = "coordinate";
    bool battery = false;

    app.add_option("--spec", spec_file, "Read the full experiment spec from a JSON file");
    app.add_option("--n", n, "Number of trading rounds N")->check(CLI::PositiveNumber);
    app.add_option("--delta", delta_flag,
                   "Time step; for 'perturb' the perturbation size instead");
    app.add_option("--time-step,--dt", time_step, "Time step (all commands)");
    app.add_option("--sigma-u", sigma_u, "Noise-trader volatility");
    app.add_option("--sigma0", sigma0, "Prior variance of the asset value");
    app.add_option("--tol", spec.iteration.tol, "Relative convergence tolerance");
    app.add_option("--max-iter", spec.iteration.max_iter, "Iteration limit");
    app.add_option("--blowup", spec.iteration.blowup, "Divergence threshold on the sup-norm");
    app.add_option("--trace-cap", spec.iteration.trace_cap, "Retained iterates");
    app.add_option("--seed", spec.seed, "Monte Carlo seed");
    app.add_option("--paths", spec.paths, "Monte Carlo paths");
    app.add_option("--format", spec.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--out", spec.out, "Write the report to PATH instead of stdout");
    app.add_flag("--expect-converge", spec.expect_converge,
                 "Exit 4 unless the iteration converges (back to the equilibrium for perturb)");
    app.add_option("--operator", op, "T (insider side) or S (market-maker side)");
    app.add_option("--start,--at,--point", start, "Comma-separated start or evaluation vector");
    app.add_option("--method", spec.jacobian_method, "Jacobian method: fd or closed");
    app.add_option("--coord", spec.coord, "last, penultimate, all or a 1-based index");
    app.add_option("--perturbation", perturbation, "Perturbation size (perturb)");
    app.add_option("--mode", mode, "Perturbation mode: coordinate or full");
    app.add_flag("--battery", battery, "Perturb every coordinate");
    app.add_option("--strategy-scale", spec.strategy_scale, "Multiplier on the equilibrium strategy");
    app.add_option("--threads", spec.threads, "Monte Carlo worker threads");
    app.add_option("--which", spec.which, "key-results, eigenvalues, shifted-start or all");
    app.add_option("--max-n", spec.max_n, "Largest N in the key-results table");

    std::vector<CLI::App*> commands;
    for (kyle::Command c : {kyle::Command::equilibrium, kyle::Command::iterate, kyle::Command::jacobian,
                            kyle::Command::stability, kyle::Command::perturb, kyle::Command::simulate,
                            kyle::Command::tables})
        commands.push_back(app.add_subcommand(std::string(kyle::to_string(c))));
    commands[0]->description("Equilibrium coefficients and recursion residuals");
    commands[1]->description("Policy iteration from --start (default: the equilibrium)");
    commands[2]->description("Jacobian of the operator at --at");
    commands[3]->description("Jacobian, spectrum and classification at a fixed point");
    commands[4]->description("Perturb the equilibrium and iterate");
    commands[5]->description("Monte Carlo simulation of the equilibrium market");
    commands[6]->description("Reproduce the reference tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kyle::kExitInputError;
    }

    kyle::ExperimentOutput result;
    try {
        if (!spec_file.empty()) {
            if (app.get_subcommands().size() != 0 || argc > 3)
                throw kyle::InputError("--spec cannot be combined with other arguments");
            spec = load_spec_file(spec_file);
        } else {
            if (app.get_subcommands().empty()) throw kyle::InputError("a command is required (see --help)");
            spec.command = kyle::command_from_string(app.get_subcommands().front()->get_name());
            spec.params.n_periods = n;
            spec.params.sigma_u = sigma_u;
            spec.params.sigma0 = sigma0;
            spec.op = kyle::policy_operator_from_string(op);
            spec.perturb_mode = kyle::perturb_mode_from_string(mode);
            if (battery) spec.coord = "all";
            if (!start.empty()) spec.point = parse_vector(start);

            const bool perturb = spec.command == kyle::Command::perturb;
            if (perturb) {
                if (delta_flag && perturbation)
                    throw kyle::InputError("give the perturbation size once (--delta or --perturbation)");
                if (delta_flag) spec.perturbation = *delta_flag;
                if (perturbation) spec.perturbation = *perturbation;
                if (time_step) spec.params.delta = *time_step;
            } else {
                if (perturbation) throw kyle::InputError("--perturbation applies to perturb only");
                if (delta_flag && time_step)
                    throw kyle::InputError("give the time step once (--delta or --time-step)");
                if (delta_flag) spec.params.delta = *delta_flag;
                if (time_step) spec.params.delta = *time_step;
            }
        }
        result = kyle::run(spec);
    } catch (const kyle::InputError& e) {
        result.exit_code = kyle::kExitInputError;
        result.report = {{"schema", kyle::kSchema},
                         {"error", {{"kind", "input"}, {"message", e.what()}}}};
    }
    return emit(result, spec.format, spec.out);
}
