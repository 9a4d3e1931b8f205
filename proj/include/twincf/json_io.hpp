#pragma once

#include <string>

#include <json.hpp>

#include "twincf/causation.hpp"
#include "twincf/datagen.hpp"
#include "twincf/learn.hpp"
#include "twincf/ordering.hpp"
#include "twincf/scm.hpp"
#include "twincf/twin.hpp"

namespace twincf {

using Json = nlohmann::json;

// SCM spec: {"variables":[{"name","kind","cardinality"}],
//            "latents":[{"variable","probs":[...]}],
//            "mechanisms":[{"child","parents":[...],"table":[...]}]}
ScmSpec scm_spec_from_json(const Json& j);
Json scm_spec_to_json(const ScmSpec& spec);

// Query: {"target":{"var","event":{"op":"eq|ge|le","value"}},
//         "evidence":{...},"factual_do":{...},"cf_do":{...}}
CounterfactualQuery query_from_json(const Json& j);
Json query_to_json(const CounterfactualQuery& q);

// Ordering: {"treatment","outcome","treatment_order":[...],"outcome_order":[...]}
struct NamedOrdering {
    std::string treatment;
    std::string outcome;
    OrderingSpec spec;
};
NamedOrdering ordering_from_json(const Json& j);
Json ordering_to_json(const NamedOrdering& ord);

Json estimate_to_json(const Estimate& e);
Json poc_to_json(const PocResult& r);
Json bench_row_to_json(const BenchRow& row);
Json violation_to_json(const Violation& v);

// Model weights: {"config":{...},"z_block":[...],"u_block":[...],"heads":[[...]]}
Json model_to_json(const TwinModel& model);
TwinModel model_from_json(const Json& j);

// Generator manifest: analytic PoC values, column roles, SCM encoding.
Json manifest_to_json(const GeneratedData& g, const std::string& kind, const Json& params);

Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

Json cf_table_to_json(const CfTable& t);
CfTable cf_table_from_json(const Json& j);
Json residuals_to_json(const std::vector<ResidualMatrix>& residuals, const OrderingSpec& ord);

}  // namespace twincf
