#pragma once

#include <json.hpp>

#include "tensamp/reconstruct.hpp"
#include "tensamp/retsina.hpp"

namespace tensamp {

using json = nlohmann::json;

json to_json(const SolverConfig& c);
/// Missing keys keep their defaults. Throws ValidationError on bad values.
SolverConfig solver_config_from_json(const json& j);

/// {"kind","dims","patterns":[{"rows","cols","fibers"}],"one_based"}. A slab
/// plan has a single pattern carrying rows (horizontal) and fibers (frontal).
json to_json(const SamplingPlan& p, bool one_based = true);
/// Accepts the form above, where a selection may also be "all" or
/// {"start", "stride"}, or {"kind","dims","strides"[,"offsets"]} for a regular
/// plan. "one_based" defaults to true. Throws ValidationError.
SamplingPlan plan_from_json(const json& j);

json to_json(const RuleVerdict& v);
json to_json(const GenericVerdict& v);
json to_json(const DeterministicVerdict& v);
json to_json(const History& h);
json to_json(const RecoveryReport& r);

/// {"n"} or {"r","s"}, plus {"geometry": {"mx","my","ms","mc"}}.
json to_json(const AccelPlan& p);
AccelPlan accel_plan_from_json(const json& j);

/// {"rank", "A"|"B"|"C": {"rows", "re", "im"}}, column-major.
json to_json(const FactorTriple& f);
FactorTriple factors_from_json(const json& j);

}  // namespace tensamp
