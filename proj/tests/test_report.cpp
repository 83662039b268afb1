#include <doctest.h>

#include <cmath>
#include <limits>

#include "kyle/experiments.hpp"

using namespace kyle;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("non-finite numbers use explicit tokens") {
    CHECK(encode_number(kInf) == "inf");
    CHECK(encode_number(-kInf) == "-inf");
    CHECK(encode_number(std::nan("")) == "nan");
    CHECK(std::isnan(decode_number(json("nan"))));
    CHECK(decode_number(json("-inf")) == -kInf);
    CHECK_THROWS_AS(decode_number(json("infinity")), InputError);
    const std::vector<double> v = {0.1, 1.0 / 3.0, 1e-300, -kInf, 5e-324};
    const auto back = decode_vector(json::parse(encode_vector(v).dump()));
    CHECK(back == v);
}

TEST_CASE("stability report round-trips through JSON text") {
    const StabilityReport r = analyze_equilibrium(PolicyOperator::insider, ModelParams::unit(3));
    const StabilityReport back = stability_report_from_json(json::parse(to_json(r).dump()));
    CHECK(back.jacobian == r.jacobian);
    CHECK(back.eigenvalues == r.eigenvalues);
    CHECK(back.spectral_radius == r.spectral_radius);
    CHECK(back.classification == r.classification);
    CHECK(back.fixed_point_residual == r.fixed_point_residual);
}

TEST_CASE("iteration trace and perturbation outcome round-trip") {
    const auto o = perturb_equilibrium(PolicyOperator::insider, ModelParams::unit(3), 1, 1e-3,
                                       PerturbMode::full, IterationConfig{});
    const json j = json::parse(to_json(o).dump());
    const PerturbationOutcome back = perturbation_outcome_from_json(j);
    CHECK(back.coordinate == o.coordinate);
    CHECK(back.mode == o.mode);
    CHECK(back.converged_to_equilibrium == o.converged_to_equilibrium);
    CHECK(back.trace.verdict == o.trace.verdict);
    CHECK(back.trace.iterates == o.trace.iterates);
    CHECK(back.trace.indices == o.trace.indices);
    CHECK(back.trace.limit == o.trace.limit);
    CHECK((back.distance_to_equilibrium == o.distance_to_equilibrium ||
           (std::isinf(back.distance_to_equilibrium) && std::isinf(o.distance_to_equilibrium))));

    IterationTrace t;
    t.iterates = {{1.0}, {kInf}};
    t.indices = {0, 1};
    t.verdict = Verdict::left_domain;
    t.final_step = kInf;
    const IterationTrace tb = iteration_trace_from_json(json::parse(to_json(t).dump()));
    CHECK(tb.iterates == t.iterates);
    CHECK(tb.verdict == Verdict::left_domain);
    CHECK_FALSE(tb.limit.has_value());
}

TEST_CASE("equilibrium, parameters and simulation results round-trip") {
    const ModelParams p{4, 0.3, 2.0, 1.7};
    CHECK(model_params_from_json(json::parse(to_json(p).dump())).sigma0 == p.sigma0);
    const Equilibrium eq = equilibrium_from_params(p);
    const Equilibrium eb = equilibrium_from_json(json::parse(to_json(eq).dump()));
    CHECK(eb.beta == eq.beta);
    CHECK(eb.sigma_sq == eq.sigma_sq);
    const SimResult r = simulate(SimConfig::at_equilibrium(p, 1000, 4));
    CHECK(sim_result_from_json(json::parse(to_json(r).dump())) == r);
}

TEST_CASE("CSV output flattens the report") {
    const json report = {{"schema", kSchema}, {"a", {{"b", 1.5}, {"c", "x,y"}}}, {"v", {1, 2}}, {"n", nullptr}};
    const std::string csv = to_csv(report);
    CHECK(csv.rfind("field,value\n", 0) == 0);
    CHECK(csv.find("/a/b,1.5\n") != std::string::npos);
    CHECK(csv.find("/a/c,\"x,y\"\n") != std::string::npos);
    CHECK(csv.find("/v/1,2\n") != std::string::npos);
    CHECK(csv.find("/n,\n") != std::string::npos);
    CHECK(csv.find("/schema,kyle-stability/1\n") != std::string::npos);
}

TEST_CASE("experiment specs reject unknown fields and invalid options") {
    const json good = {{"command", "iterate"}, {"params", to_json(ModelParams::unit(2))}, {"tol", 1e-10}};
    const ExperimentSpec s = experiment_spec_from_json(good);
    CHECK(s.command == Command::iterate);
    CHECK(s.iteration.tol == 1e-10);
    const ExperimentSpec round = experiment_spec_from_json(to_json(s));
    CHECK(round.params.n_periods == 2);
    CHECK(round.iteration.tol == s.iteration.tol);

    json bad = good;
    bad["tolerance"] = 1e-3;
    CHECK_THROWS_AS(experiment_spec_from_json(bad), InputError);
    CHECK_THROWS_AS(experiment_spec_from_json({{"command", "fly"}}), InputError);
    CHECK_THROWS_AS(experiment_spec_from_json({{"command", "iterate"}, {"point", {1.0}}}), InputError);
    CHECK_THROWS_AS(experiment_spec_from_json({{"command", "iterate"}, {"tol", "small"}}), InputError);
}

TEST_CASE("run maps failures to exit codes") {
    ExperimentSpec spec;
    spec.command = Command::equilibrium;
    ExperimentOutput out = run(spec);
    CHECK(out.exit_code == kExitOk);
    CHECK(out.report["schema"] == kSchema);
    CHECK(out.report["input"]["params"]["n_periods"] == 3);
    CHECK(out.report["result"]["residuals"]["ok"] == true);

    spec.params.sigma_u = -1.0;
    out = run(spec);
    CHECK(out.exit_code == kExitInputError);
    CHECK(out.report["error"]["kind"] == "input");

    spec.params = ModelParams::unit(3);
    spec.command = Command::jacobian;
    spec.point = std::vector<double>{0.0, 0.0, 0.0};
    CHECK(run(spec).exit_code == kExitOutOfDomain);

    spec.command = Command::stability;
    spec.point = std::vector<double>{1.0, 1.0, 1.0};
    CHECK(run(spec).exit_code == kExitOutOfDomain);

    spec.command = Command::iterate;
    spec.point = std::vector<double>{0.6, 0.7, 1.3};
    spec.iteration.max_iter = 5;
    CHECK(run(spec).exit_code == kExitOk);
    spec.expect_converge = true;
    CHECK(run(spec).exit_code == kExitNotConverged);

    spec.point.reset();
    spec.iteration = IterationConfig{};
    spec.command = Command::perturb;
    spec.coord = "1";
    CHECK(run(spec).exit_code == kExitNotConverged);
    spec.coord = "last";
    CHECK(run(spec).exit_code == kExitOk);
}

TEST_CASE("key-results table is computed from the classification pipeline") {
    const auto rows = key_results_table(ModelParams::unit(1), 5);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].classification == Classification::super_attractive);
    CHECK(rows[1].classification == Classification::attractive);
    for (std::size_t i = 2; i < 5; ++i) {
        CHECK(rows[i].classification == Classification::repellent);
        CHECK_FALSE(rows[i].stable);
    }
    ExperimentSpec spec;
    spec.command = Command::tables;
    spec.which = "key-results";
    spec.max_n = 4;
    const ExperimentOutput out = run(spec);
    CHECK(out.exit_code == kExitOk);
    CHECK(out.report["result"]["key_results"]["rows"].size() == 4);
    CHECK(serialize(out.report, "csv").find("/result/key_results/rows/0/fixed_point_type,super_attractive") !=
          std::string::npos);
}
