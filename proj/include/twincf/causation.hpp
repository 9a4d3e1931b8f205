#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twincf/learn.hpp"
#include "twincf/ordering.hpp"
#include "twincf/scm.hpp"
#include "twincf/twin.hpp"

namespace twincf {

struct PocResult {
    Estimate pn, ps, pns;  // stderr 0 for the exact path
};

// T x T' matrix of counterfactual estimates for a fixed query template;
// the diagonal is 0 by convention.
struct CfTable {
    std::vector<int> treatments;  // categories, in treatment order
    std::vector<std::vector<Estimate>> cells;
    double dominance = 0.0;  // mean upper-triangle value - mean lower-triangle value
};

// Template for CfTable cells: P(Y_{X=T'} (target) | X=T, Y=evidence_y).
struct CfTemplate {
    int evidence_y = 0;
    EventOp target_op = EventOp::Eq;
    int target_value = 0;
};

// Forbidden-conditional matrices, one per ordered treatment pair: entry
// [row][col] is P(Y_{x_hi}=col | Y_{x_lo}=row) with categories in outcome
// order; cells with col rank < row rank are the ones a counterfactually
// ordered model must keep at zero.
struct ResidualMatrix {
    int x_lo = 0, x_hi = 0;  // treatment categories, lo below hi in the order
    std::vector<std::vector<Estimate>> cells;
};

// Exact probabilities of causation via twin-network queries; requires binary
// treatment and outcome.
PocResult poc_exact(const Scm& scm, const std::string& treatment, const std::string& outcome,
                    std::uint64_t cap = kDefaultEnumCap);

// Monte Carlo probabilities of causation from a trained model, over noise
// draws and dataset covariates. `xs` carries the factual treatment of each
// covariate row so observational evidence can condition the z distribution.
PocResult poc_from_model(const TwinModel& model, const std::vector<int>& xs,
                         const std::vector<std::vector<double>>& zs, std::uint64_t n,
                         std::uint64_t seed);

CfTable counterfactual_table(const Scm& scm, const std::string& treatment, const std::string& outcome,
                             const CfTemplate& tpl, const OrderingSpec& ord,
                             std::uint64_t cap = kDefaultEnumCap);

CfTable counterfactual_table(const TwinModel& model, const std::vector<int>& xs,
                             const std::vector<std::vector<double>>& zs, const CfTemplate& tpl,
                             const OrderingSpec& ord, std::uint64_t n, std::uint64_t seed);

std::vector<ResidualMatrix> theorem2_residuals(const Scm& scm, const std::string& treatment,
                                               const std::string& outcome, const OrderingSpec& ord,
                                               std::uint64_t cap = kDefaultEnumCap);

std::vector<ResidualMatrix> theorem2_residuals(const TwinModel& model,
                                               const std::vector<std::vector<double>>& zs,
                                               const OrderingSpec& ord, std::uint64_t n,
                                               std::uint64_t seed);

// Largest forbidden (strictly lower-triangle) entry across the matrices.
double max_forbidden_residual(const std::vector<ResidualMatrix>& residuals,
                              const OrderingSpec& ord);

// Gate from the trained-model tolerance discussion.
constexpr double kTrainedResidualGate = 0.02;

}  // namespace twincf
