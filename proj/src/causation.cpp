#include "twincf/causation.hpp"

#include <algorithm>
#include <cmath>

#include "twincf/error.hpp"
#include "twincf/rng.hpp"

namespace twincf {

namespace {

void require_binary(const Scm& scm, const std::string& treatment, const std::string& outcome) {
    if (scm.variable(scm.index_of(treatment)).cardinality != 2 ||
        scm.variable(scm.index_of(outcome)).cardinality != 2)
        throw NonBinary("probabilities of causation need binary treatment and outcome");
}

std::vector<std::vector<double>> filter_rows(const std::vector<int>& xs,
                                             const std::vector<std::vector<double>>& zs, int x) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (xs[i] == x) out.push_back(zs[i]);
    if (out.empty()) throw NoMatch("no covariate rows with treatment " + std::to_string(x));
    return out;
}

double triangle_dominance(const CfTable& t) {
    double upper = 0.0, lower = 0.0;
    std::size_t n_upper = 0, n_lower = 0;
    for (std::size_t r = 0; r < t.cells.size(); ++r) {
        for (std::size_t c = 0; c < t.cells.size(); ++c) {
            if (r == c) continue;
            if (c > r) {
                upper += t.cells[r][c].value;
                ++n_upper;
            } else {
                lower += t.cells[r][c].value;
                ++n_lower;
            }
        }
    }
    if (n_upper == 0 || n_lower == 0) return 0.0;
    return upper / static_cast<double>(n_upper) - lower / static_cast<double>(n_lower);
}

}  // namespace

PocResult poc_exact(const Scm& scm, const std::string& treatment, const std::string& outcome,
                    std::uint64_t cap) {
    require_binary(scm, treatment, outcome);
    PocResult r;

    // PN = P(Y_{X=0}=0 | X=1, Y=1)
    CounterfactualQuery pn;
    pn.target = {outcome, EventOp::Eq, 0, {}};
    pn.evidence = {{treatment, 1}, {outcome, 1}};
    pn.cf_do = {{treatment, 0}};
    r.pn = {counterfactual_exact(scm, pn, cap), 0.0, 0};

    // PS = P(Y_{X=1}=1 | X=0, Y=0)
    CounterfactualQuery ps;
    ps.target = {outcome, EventOp::Eq, 1, {}};
    ps.evidence = {{treatment, 0}, {outcome, 0}};
    ps.cf_do = {{treatment, 1}};
    r.ps = {counterfactual_exact(scm, ps, cap), 0.0, 0};

    // PNS = P(Y_{X=0}=0, Y_{X=1}=1): the joint mass of the twin query with
    // the factual world intervened at X=0.
    CounterfactualQuery pns;
    pns.target = {outcome, EventOp::Eq, 1, {}};
    pns.evidence = {{outcome, 0}};
    pns.factual_do = {{treatment, 0}};
    pns.cf_do = {{treatment, 1}};
    r.pns = {counterfactual_exact_parts(scm, pns, cap).joint_prob, 0.0, 0};
    return r;
}

PocResult poc_from_model(const TwinModel& model, const std::vector<int>& xs,
                         const std::vector<std::vector<double>>& zs, std::uint64_t n,
                         std::uint64_t seed) {
    if (model.config.n_outcomes != 2 || model.config.n_treatments != 2)
        throw NonBinary("probabilities of causation need binary treatment and outcome");
    if (xs.size() != zs.size()) throw ParseError("poc_from_model: xs/zs length mismatch");

    PocResult r;
    // PN: observational evidence (X=1, Y=1), counterfactual world X*=0.
    {
        ModelQuery q{1, 0, 1, EventOp::Eq, 0, false};
        r.pn = model_query(model, filter_rows(xs, zs, 1), q, {}, n, derive_seed(seed, 1));
    }
    // PS: observational evidence (X=0, Y=0), counterfactual world X*=1.
    {
        ModelQuery q{0, 1, 0, EventOp::Eq, 1, false};
        r.ps = model_query(model, filter_rows(xs, zs, 0), q, {}, n, derive_seed(seed, 2));
    }
    // PNS: joint P(Y_{X=0}=0, Y_{X=1}=1); the factual world is intervened,
    // so z comes from the full covariate distribution.
    {
        ModelQuery q{0, 1, 0, EventOp::Eq, 1, true};
        r.pns = model_query(model, zs, q, {}, n, derive_seed(seed, 3));
    }
    return r;
}

CfTable counterfactual_table(const Scm& scm, const std::string& treatment, const std::string& outcome,
                             const CfTemplate& tpl, const OrderingSpec& ord, std::uint64_t cap) {
    CfTable t;
    t.treatments = ord.treatment_order;
    const int n = static_cast<int>(ord.treatment_order.size());
    t.cells.assign(n, std::vector<Estimate>(n));
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            if (r == c) continue;  // diagonal fixed at 0 by convention
            CounterfactualQuery q;
            q.target = {outcome, tpl.target_op, tpl.target_value, ord.outcome_order};
            q.evidence = {{treatment, ord.treatment_order[r]}, {outcome, tpl.evidence_y}};
            q.cf_do = {{treatment, ord.treatment_order[c]}};
            t.cells[r][c] = {counterfactual_exact(scm, q, cap), 0.0, 0};
        }
    }
    t.dominance = triangle_dominance(t);
    return t;
}

CfTable counterfactual_table(const TwinModel& model, const std::vector<int>& xs,
                             const std::vector<std::vector<double>>& zs, const CfTemplate& tpl,
                             const OrderingSpec& ord, std::uint64_t n, std::uint64_t seed) {
    CfTable t;
    t.treatments = ord.treatment_order;
    const int nt = static_cast<int>(ord.treatment_order.size());
    t.cells.assign(nt, std::vector<Estimate>(nt));
    for (int r = 0; r < nt; ++r) {
        const auto rows = filter_rows(xs, zs, ord.treatment_order[r]);
        for (int c = 0; c < nt; ++c) {
            if (r == c) continue;
            ModelQuery q{ord.treatment_order[r], ord.treatment_order[c], tpl.evidence_y,
                         tpl.target_op, tpl.target_value, false};
            t.cells[r][c] = model_query(model, rows, q, ord.outcome_order, n,
                                        derive_seed(seed, static_cast<std::uint64_t>(r) * nt + c));
        }
    }
    t.dominance = triangle_dominance(t);
    return t;
}

std::vector<ResidualMatrix> theorem2_residuals(const Scm& scm, const std::string& treatment,
                                               const std::string& outcome, const OrderingSpec& ord,
                                               std::uint64_t cap) {
    std::vector<ResidualMatrix> out;
    const int nt = static_cast<int>(ord.treatment_order.size());
    const int m = static_cast<int>(ord.outcome_order.size());
    for (int lo = 0; lo < nt; ++lo) {
        for (int hi = lo + 1; hi < nt; ++hi) {
            ResidualMatrix rm;
            rm.x_lo = ord.treatment_order[lo];
            rm.x_hi = ord.treatment_order[hi];
            rm.cells.assign(m, std::vector<Estimate>(m));
            for (int row = 0; row < m; ++row) {
                for (int col = 0; col < m; ++col) {
                    CounterfactualQuery q;
                    q.target = {outcome, EventOp::Eq, ord.outcome_order[col], ord.outcome_order};
                    q.evidence = {{outcome, ord.outcome_order[row]}};
                    q.factual_do = {{treatment, rm.x_lo}};
                    q.cf_do = {{treatment, rm.x_hi}};
                    const CfParts parts = counterfactual_exact_parts(scm, q, cap);
                    rm.cells[row][col] =
                        parts.evidence_prob < kZeroEvidenceTol
                            ? Estimate{0.0, 0.0, 0}
                            : Estimate{parts.joint_prob / parts.evidence_prob, 0.0, 0};
                }
            }
            out.push_back(std::move(rm));
        }
    }
    return out;
}

std::vector<ResidualMatrix> theorem2_residuals(const TwinModel& model,
                                               const std::vector<std::vector<double>>& zs,
                                               const OrderingSpec& ord, std::uint64_t n,
                                               std::uint64_t seed) {
    std::vector<ResidualMatrix> out;
    const int nt = static_cast<int>(ord.treatment_order.size());
    const int m = static_cast<int>(ord.outcome_order.size());
    std::uint64_t stream = 0;
    for (int lo = 0; lo < nt; ++lo) {
        for (int hi = lo + 1; hi < nt; ++hi) {
            ResidualMatrix rm;
            rm.x_lo = ord.treatment_order[lo];
            rm.x_hi = ord.treatment_order[hi];
            rm.cells.assign(m, std::vector<Estimate>(m));
            for (int row = 0; row < m; ++row) {
                for (int col = 0; col < m; ++col) {
                    ModelQuery q{rm.x_lo, rm.x_hi, ord.outcome_order[row], EventOp::Eq,
                                 ord.outcome_order[col], false};
                    try {
                        rm.cells[row][col] =
                            model_query(model, zs, q, ord.outcome_order, n, derive_seed(seed, stream));
                    } catch (const NoAcceptedSamples&) {
                        rm.cells[row][col] = {0.0, 0.0, 0};
                    }
                    ++stream;
                }
            }
            out.push_back(std::move(rm));
        }
    }
    return out;
}

double max_forbidden_residual(const std::vector<ResidualMatrix>& residuals, const OrderingSpec& ord) {
    const int m = static_cast<int>(ord.outcome_order.size());
    double worst = 0.0;
    for (const auto& rm : residuals)
        for (int row = 0; row < m; ++row)
            for (int col = 0; col < row; ++col)  // higher treatment landed strictly lower
                worst = std::max(worst, rm.cells[row][col].value);
    return worst;
}

}  // namespace twincf
