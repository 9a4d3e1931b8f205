#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twincf/scm.hpp"
#include "twincf/twin.hpp"

namespace twincf {

// Total orders on the treatment and outcome categories. Entry i of an order
// is the category occupying rank i (rank 0 lowest).
struct OrderingSpec {
    std::vector<int> treatment_order;
    std::vector<int> outcome_order;
};

enum class ViolationKind { Ordering, Monotonicity, Stability, InterventionalPremise };

struct Violation {
    ViolationKind kind = ViolationKind::Ordering;
    // Treatment rank pair (i > j) and outcome rank pair involved, where
    // applicable; -1 when not.
    int i = -1;
    int j = -1;
    int h = -1;
    int l = -1;
    std::vector<int> latent_witness;  // joint latent configuration, for monotonicity
    double magnitude = 0.0;
    std::string detail;
};

// Pairs skipped because their conditioning event has probability zero.
struct SkippedPair {
    int i = -1, j = -1, h = -1, l = -1;
    std::string reason;
};

struct CheckReport {
    std::vector<Violation> violations;
    std::vector<SkippedPair> skipped;
    bool passed() const { return violations.empty(); }
};

constexpr double kExactCheckTol = 1e-12;

// Verifies the interventional premise: along the treatment order, the
// highest-ranked outcomes only gain probability and the lowest-ranked only
// lose it, i.e. for all rank pairs i>j and k>h,
// P(Y_{x_i}=y_k) >= P(Y_{x_j}=y_k) and P(Y_{x_i}=y_h) <= P(Y_{x_j}=y_h).
CheckReport check_interventional_premise(const Scm& scm, const std::string& treatment,
                                         const std::string& outcome, const OrderingSpec& ord,
                                         std::uint64_t cap = kDefaultEnumCap);

// Enumerates every positive-probability joint latent configuration u and
// reports each one where the outcome decreases along the treatment order.
CheckReport check_monotone(const Scm& scm, const std::string& treatment, const std::string& outcome,
                           const OrderingSpec& ord, std::uint64_t cap = kDefaultEnumCap);

// Computes every forbidden conditional P(Y_{x_j}=y_l | Y_{x_i}=y_h) for
// i>j, l>h via exact twin-network queries and reports values above 1e-12.
CheckReport check_cf_ordering(const Scm& scm, const std::string& treatment, const std::string& outcome,
                              const OrderingSpec& ord, std::uint64_t cap = kDefaultEnumCap);

// Counterfactual stability: for ordered pairs x != x', y != y' where the
// multiplicative-change condition P(Y_x=y)/P(Y_{x'}=y') >= P(Y_x=y')/P(Y_{x'}=y)
// holds, P(Y_x=y' | Y_{x'}=y) must be zero. Ratios a/0 with a>0 count as
// +infinity; 0/0 pairs are skipped.
CheckReport check_stability(const Scm& scm, const std::string& treatment, const std::string& outcome,
                            const OrderingSpec& ord, std::uint64_t cap = kDefaultEnumCap);

// ATE matrix and interventional table backing an inferred ordering.
// ate[r][c] = E[Y | do(X=x_c)] - E[Y | do(X=x_r)] (rows are the control
// treatment); py_do_x[t][y] = P(Y=y | do(X=t)).
struct TrendReport {
    std::vector<double> mean_outcome;            // E[Y | do(X=t)] per treatment category
    std::vector<std::vector<double>> ate;        // N x N
    std::vector<std::vector<double>> py_do_x;    // N x M
    bool non_monotone = false;                   // natural category order breaks the trend
};

struct InferredOrdering {
    OrderingSpec spec;
    TrendReport trend;
};

// Orders treatments by ascending interventional mean outcome (ties broken by
// category index). Exact-SCM variant.
InferredOrdering infer_ordering(const Scm& scm, const std::string& treatment,
                                const std::string& outcome, std::uint64_t cap = kDefaultEnumCap);

// Dataset variant: columns of integer categories; means are per-treatment
// conditional means (interpreting them interventionally assumes
// unconfoundedness, which holds for randomized treatments).
InferredOrdering infer_ordering(const std::vector<int>& treatment_column,
                                const std::vector<int>& outcome_column, int n_treatments,
                                int n_outcomes);

}  // namespace twincf
