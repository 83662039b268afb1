#pragma once

#include <string>

#include <json.hpp>

#include "kyle/model.hpp"
#include "kyle/montecarlo.hpp"
#include "kyle/stability.hpp"

namespace kyle {

using json = nlohmann::json;

inline constexpr const char* kSchema = "kyle-stability/1";

/// Finite doubles become JSON numbers (shortest round-trip form); infinities
/// and NaN become the string tokens "inf", "-inf" and "nan".
json encode_number(double x);
double decode_number(const json& j);

json encode_vector(const std::vector<double>& v);
std::vector<double> decode_vector(const json& j);

json to_json(const ModelParams& p);
ModelParams model_params_from_json(const json& j);

json to_json(const Equilibrium& eq);
Equilibrium equilibrium_from_json(const json& j);

json to_json(const RecursionResiduals& r);

json to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

json to_json(const IterationTrace& t);
IterationTrace iteration_trace_from_json(const json& j);

json to_json(const StabilityReport& r);
StabilityReport stability_report_from_json(const json& j);

json to_json(const ScalarTrace& t);

json to_json(const PerturbationOutcome& o);
PerturbationOutcome perturbation_outcome_from_json(const json& j);

json to_json(const SimResult& r);
SimResult sim_result_from_json(const json& j);

json to_json(const ProfitComparison& c);
json to_json(const TerminalVarianceCheck& c);

/// Flattens a report into `field,value` rows. Field names are JSON pointers
/// (e.g. /result/limit/0); strings are written verbatim, booleans as
/// true/false, numbers in shortest round-trip form.
std::string to_csv(const json& report);

}  // namespace kyle
