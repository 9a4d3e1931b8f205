#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twincf/scm.hpp"

namespace twincf {

enum class EventOp { Eq, Ge, Le };

// Event on a single categorical variable. Ge/Le compare positions in
// `outcome_order`; an empty order means the natural order 0 < 1 < ... < k-1.
struct OutcomeEvent {
    std::string var;
    EventOp op = EventOp::Eq;
    int value = 0;
    std::vector<int> outcome_order;

    bool matches(int category) const;
    int rank_of(int category) const;
};

// A counterfactual query P(target | evidence, factual_do, cf_do). The target
// lives in the counterfactual (starred) world; evidence and factual_do in
// the factual world. Variables are named unstarred on both sides; the engine
// adds the star.
struct CounterfactualQuery {
    OutcomeEvent target;
    Assignment evidence;
    Assignment factual_do;
    Assignment cf_do;  // must be nonempty, otherwise this is a plain conditional
};

struct TwinNetwork {
    Scm graph;                         // doubled model over {v, v*} with shared latents
    std::vector<std::string> cut_set;  // starred variables whose parents were removed
};

struct Estimate {
    double value = 0.0;
    double stderr_value = 0.0;
    std::uint64_t n_effective = 0;
};

struct CfParts {
    double joint_prob = 0.0;     // P(target, evidence)
    double evidence_prob = 0.0;  // P(evidence)
};

inline std::string starred(const std::string& name) { return name + "*"; }

// Duplicates the model, reusing each latent as the parent of both v and v*,
// and cuts the parents of every starred intervention variable (their
// mechanisms become constant-pending placeholders until a query fixes them).
TwinNetwork build_twin(const Scm& scm, const std::vector<std::string>& cf_intervention_vars);

// Exact counterfactual probability by enumeration in the twin network.
double counterfactual_exact(const Scm& scm, const CounterfactualQuery& q,
                            std::uint64_t cap = kDefaultEnumCap, Exec exec = Exec::Parallel);

// Same enumeration, returning the joint and evidence masses separately; the
// joint part is what joint-counterfactual quantities such as PNS read off.
CfParts counterfactual_exact_parts(const Scm& scm, const CounterfactualQuery& q,
                                   std::uint64_t cap = kDefaultEnumCap, Exec exec = Exec::Parallel);

// Rejection sampling in the twin network: propagate both worlds from shared
// latent draws, keep draws matching the evidence, return the target
// frequency among kept draws with a binomial standard error.
Estimate counterfactual_mc(const Scm& scm, const CounterfactualQuery& q, std::uint64_t n,
                           std::uint64_t seed, Exec exec = Exec::Parallel);

// Abduction-action-prediction baseline: exact latent posterior given the
// evidence (rejection-based above the enumeration cap), then Monte Carlo
// prediction in the intervened submodel.
Estimate counterfactual_aap(const Scm& scm, const CounterfactualQuery& q, std::uint64_t n,
                            std::uint64_t seed, std::uint64_t cap = kDefaultEnumCap);

struct BenchRow {
    std::string query_id;
    std::string method;  // "twin-mc" or "aap"
    double estimate = 0.0;
    double stderr_value = 0.0;
    std::uint64_t n_accepted = 0;
    double wall_ms = 0.0;
};

// Runs twin-MC and AAP on every query, timing each, and checks that the two
// estimates agree within 2x their combined standard error.
std::vector<BenchRow> bench_compare(const Scm& scm, const std::vector<CounterfactualQuery>& queries,
                                    std::uint64_t n, std::uint64_t seed);

}  // namespace twincf
