#include "twincf/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "twincf/error.hpp"

namespace twincf {

namespace {

void require_permutation(const std::vector<int>& order, int cardinality, const char* what) {
    if (static_cast<int>(order.size()) != cardinality)
        throw ParseError(std::string(what) + " order has " + std::to_string(order.size()) +
                         " entries, expected " + std::to_string(cardinality));
    std::vector<bool> seen(cardinality, false);
    for (int c : order) {
        if (c < 0 || c >= cardinality || seen[c])
            throw ParseError(std::string(what) + " order is not a permutation");
        seen[c] = true;
    }
}

// P(Y = y | do(X = x)) for every treatment and outcome category.
std::vector<std::vector<double>> interventional_table(const Scm& scm, const std::string& treatment,
                                                      const std::string& outcome, std::uint64_t cap) {
    const int n_treat = scm.variable(scm.index_of(treatment)).cardinality;
    const int n_out = scm.variable(scm.index_of(outcome)).cardinality;
    std::vector<std::vector<double>> table(n_treat, std::vector<double>(n_out, 0.0));
    for (int x = 0; x < n_treat; ++x) {
        const DistTable d = scm.interventional({outcome}, {{treatment, x}}, {}, cap);
        for (std::size_t i = 0; i < d.support.size(); ++i) table[x][d.support[i][0]] = d.probs[i];
    }
    return table;
}

}  // namespace

CheckReport check_interventional_premise(const Scm& scm, const std::string& treatment,
                                         const std::string& outcome, const OrderingSpec& ord,
                                         std::uint64_t cap) {
    const int n_treat = scm.variable(scm.index_of(treatment)).cardinality;
    const int n_out = scm.variable(scm.index_of(outcome)).cardinality;
    require_permutation(ord.treatment_order, n_treat, "treatment");
    require_permutation(ord.outcome_order, n_out, "outcome");

    const auto table = interventional_table(scm, treatment, outcome, cap);
    CheckReport report;
    for (int i = 1; i < n_treat; ++i) {
        for (int j = 0; j < i; ++j) {
            const int xi = ord.treatment_order[i], xj = ord.treatment_order[j];
            for (int k = 1; k < n_out; ++k) {
                for (int h = 0; h < k; ++h) {
                    const int yk = ord.outcome_order[k], yh = ord.outcome_order[h];
                    const double up = table[xj][yk] - table[xi][yk];
                    if (up > kExactCheckTol) {
                        std::ostringstream os;
                        os << "P(Y_" << xi << "=" << yk << ")=" << table[xi][yk] << " < P(Y_" << xj
                           << "=" << yk << ")=" << table[xj][yk];
                        report.violations.push_back(
                            {ViolationKind::InterventionalPremise, i, j, h, k, {}, up, os.str()});
                    }
                    const double down = table[xi][yh] - table[xj][yh];
                    if (down > kExactCheckTol) {
                        std::ostringstream os;
                        os << "P(Y_" << xi << "=" << yh << ")=" << table[xi][yh] << " > P(Y_" << xj
                           << "=" << yh << ")=" << table[xj][yh];
                        report.violations.push_back(
                            {ViolationKind::InterventionalPremise, i, j, h, k, {}, down, os.str()});
                    }
                }
            }
        }
    }
    return report;
}

CheckReport check_monotone(const Scm& scm, const std::string& treatment, const std::string& outcome,
                           const OrderingSpec& ord, std::uint64_t cap) {
    const int treat_id = scm.index_of(treatment);
    const int out_id = scm.index_of(outcome);
    const int n_treat = scm.variable(treat_id).cardinality;
    require_permutation(ord.treatment_order, n_treat, "treatment");
    require_permutation(ord.outcome_order, scm.variable(out_id).cardinality, "outcome");

    std::vector<int> outcome_rank(ord.outcome_order.size());
    for (int r = 0; r < static_cast<int>(ord.outcome_order.size()); ++r)
        outcome_rank[ord.outcome_order[r]] = r;

    // One intervened submodel per treatment category; each latent
    // configuration is pushed through all of them.
    std::vector<Scm> submodels;
    for (int r = 0; r < n_treat; ++r)
        submodels.push_back(scm.intervene({{treatment, ord.treatment_order[r]}}));

    const std::uint64_t n_configs = scm.latent_config_count();
    if (n_configs > cap)
        throw EnumerationTooLarge("latent support size " + std::to_string(n_configs) +
                                  " exceeds enumeration cap " + std::to_string(cap));

    CheckReport report;
    std::vector<int> latent_values(scm.latent_ids().size(), 0);
    std::vector<int> values(scm.var_count(), 0);
    std::vector<int> ranks(n_treat, 0);
    for (std::uint64_t cfg = 0; cfg < n_configs; ++cfg) {
        scm.decode_latent_config(cfg, latent_values);
        const double prob = scm.latent_config_prob(latent_values);
        if (prob == 0.0) continue;  // zero-probability configurations are vacuous
        for (int r = 0; r < n_treat; ++r) {
            const Scm& sub = submodels[r];
            for (std::size_t k = 0; k < sub.latent_ids().size(); ++k)
                values[sub.latent_ids()[k]] = latent_values[k];
            sub.propagate(values);
            ranks[r] = outcome_rank[values[out_id]];
        }
        for (int i = 1; i < n_treat; ++i) {
            for (int j = 0; j < i; ++j) {
                if (ranks[i] < ranks[j]) {
                    std::ostringstream os;
                    os << "Y_x(" << ord.treatment_order[i] << ")(u) ranks below Y_x("
                       << ord.treatment_order[j] << ")(u)";
                    report.violations.push_back({ViolationKind::Monotonicity, i, j, ranks[i], ranks[j],
                                                 std::vector<int>(latent_values.begin(), latent_values.end()),
                                                 prob, os.str()});
                }
            }
        }
    }
    return report;
}

CheckReport check_cf_ordering(const Scm& scm, const std::string& treatment, const std::string& outcome,
                              const OrderingSpec& ord, std::uint64_t cap) {
    const int n_treat = scm.variable(scm.index_of(treatment)).cardinality;
    const int n_out = scm.variable(scm.index_of(outcome)).cardinality;
    require_permutation(ord.treatment_order, n_treat, "treatment");
    require_permutation(ord.outcome_order, n_out, "outcome");

    CheckReport report;
    for (int i = 1; i < n_treat; ++i) {
        for (int j = 0; j < i; ++j) {
            const int xi = ord.treatment_order[i], xj = ord.treatment_order[j];
            for (int h = 0; h < n_out; ++h) {
                for (int l = h + 1; l < n_out; ++l) {
                    const int yh = ord.outcome_order[h], yl = ord.outcome_order[l];
                    // P(Y_{xj} = yl | Y_{xi} = yh) as a twin query: condition
                    // the factual world on do(X=xi), Y=yh; intervene X*=xj.
                    CounterfactualQuery q;
                    q.target = {outcome, EventOp::Eq, yl, {}};
                    q.evidence = {{outcome, yh}};
                    q.factual_do = {{treatment, xi}};
                    q.cf_do = {{treatment, xj}};
                    const CfParts parts = counterfactual_exact_parts(scm, q, cap);
                    if (parts.evidence_prob < kZeroEvidenceTol) {
                        report.skipped.push_back({i, j, h, l, "conditioning event has probability 0"});
                        continue;
                    }
                    const double value = parts.joint_prob / parts.evidence_prob;
                    if (value > kExactCheckTol) {
                        std::ostringstream os;
                        os << "P(Y_" << xj << "=" << yl << " | Y_" << xi << "=" << yh << ") = " << value;
                        report.violations.push_back(
                            {ViolationKind::Ordering, i, j, h, l, {}, value, os.str()});
                    }
                }
            }
        }
    }
    return report;
}

CheckReport check_stability(const Scm& scm, const std::string& treatment, const std::string& outcome,
                            const OrderingSpec& ord, std::uint64_t cap) {
    const int n_treat = scm.variable(scm.index_of(treatment)).cardinality;
    const int n_out = scm.variable(scm.index_of(outcome)).cardinality;
    require_permutation(ord.treatment_order, n_treat, "treatment");
    require_permutation(ord.outcome_order, n_out, "outcome");

    const auto table = interventional_table(scm, treatment, outcome, cap);

    CheckReport report;
    for (int x_obs = 0; x_obs < n_treat; ++x_obs) {
        for (int x_cf = 0; x_cf < n_treat; ++x_cf) {
            if (x_obs == x_cf) continue;
            for (int y_obs = 0; y_obs < n_out; ++y_obs) {
                for (int y_cf = 0; y_cf < n_out; ++y_cf) {
                    if (y_obs == y_cf) continue;
                    // No-switch condition: the multiplicative change of the
                    // observed outcome into the counterfactual world is at
                    // least that of the alternative outcome,
                    //   P(Y_xcf=y_obs)/P(Y_xobs=y_obs) >= P(Y_xcf=y_cf)/P(Y_xobs=y_cf).
                    const double chg_obs_num = table[x_cf][y_obs], chg_obs_den = table[x_obs][y_obs];
                    const double chg_cf_num = table[x_cf][y_cf], chg_cf_den = table[x_obs][y_cf];
                    if ((chg_obs_num == 0.0 && chg_obs_den == 0.0) ||
                        (chg_cf_num == 0.0 && chg_cf_den == 0.0)) {
                        report.skipped.push_back({x_obs, x_cf, y_obs, y_cf, "0/0 ratio"});
                        continue;
                    }
                    bool condition;
                    if (chg_obs_den == 0.0)
                        condition = true;  // +inf >= anything
                    else if (chg_cf_den == 0.0)
                        condition = false;  // finite < +inf
                    else
                        condition = chg_obs_num * chg_cf_den >= chg_cf_num * chg_obs_den;
                    if (!condition) continue;

                    if (chg_obs_den < kZeroEvidenceTol) {
                        report.skipped.push_back(
                            {x_obs, x_cf, y_obs, y_cf, "conditioning event has probability 0"});
                        continue;
                    }
                    CounterfactualQuery q;
                    q.target = {outcome, EventOp::Eq, y_cf, {}};
                    q.evidence = {{outcome, y_obs}};
                    q.factual_do = {{treatment, x_obs}};
                    q.cf_do = {{treatment, x_cf}};
                    const CfParts parts = counterfactual_exact_parts(scm, q, cap);
                    if (parts.evidence_prob < kZeroEvidenceTol) {
                        report.skipped.push_back(
                            {x_obs, x_cf, y_obs, y_cf, "conditioning event has probability 0"});
                        continue;
                    }
                    const double value = parts.joint_prob / parts.evidence_prob;
                    if (value > kExactCheckTol) {
                        std::ostringstream os;
                        os << "P(Y_" << x_cf << "=" << y_cf << " | Y_" << x_obs << "=" << y_obs
                           << ") = " << value;
                        report.violations.push_back(
                            {ViolationKind::Stability, x_obs, x_cf, y_obs, y_cf, {}, value, os.str()});
                    }
                }
            }
        }
    }
    return report;
}

namespace {

InferredOrdering ordering_from_table(std::vector<std::vector<double>> py_do_x, int n_treatments,
                                     int n_outcomes) {
    TrendReport trend;
    trend.py_do_x = std::move(py_do_x);
    trend.mean_outcome.assign(n_treatments, 0.0);
    for (int t = 0; t < n_treatments; ++t)
        for (int y = 0; y < n_outcomes; ++y) trend.mean_outcome[t] += y * trend.py_do_x[t][y];

    trend.ate.assign(n_treatments, std::vector<double>(n_treatments, 0.0));
    for (int r = 0; r < n_treatments; ++r)
        for (int c = 0; c < n_treatments; ++c)
            trend.ate[r][c] = trend.mean_outcome[c] - trend.mean_outcome[r];

    OrderingSpec spec;
    spec.treatment_order.resize(n_treatments);
    std::iota(spec.treatment_order.begin(), spec.treatment_order.end(), 0);
    std::stable_sort(spec.treatment_order.begin(), spec.treatment_order.end(),
                     [&](int a, int b) { return trend.mean_outcome[a] < trend.mean_outcome[b]; });
    spec.outcome_order.resize(n_outcomes);
    std::iota(spec.outcome_order.begin(), spec.outcome_order.end(), 0);

    std::vector<int> identity(n_treatments);
    std::iota(identity.begin(), identity.end(), 0);
    trend.non_monotone = spec.treatment_order != identity;
    return {std::move(spec), std::move(trend)};
}

}  // namespace

InferredOrdering infer_ordering(const Scm& scm, const std::string& treatment,
                                const std::string& outcome, std::uint64_t cap) {
    const int n_treat = scm.variable(scm.index_of(treatment)).cardinality;
    const int n_out = scm.variable(scm.index_of(outcome)).cardinality;
    return ordering_from_table(interventional_table(scm, treatment, outcome, cap), n_treat, n_out);
}

InferredOrdering infer_ordering(const std::vector<int>& treatment_column,
                                const std::vector<int>& outcome_column, int n_treatments,
                                int n_outcomes) {
    if (treatment_column.size() != outcome_column.size())
        throw ParseError("treatment and outcome columns differ in length");
    std::vector<std::vector<double>> table(n_treatments, std::vector<double>(n_outcomes, 0.0));
    std::vector<double> counts(n_treatments, 0.0);
    for (std::size_t r = 0; r < treatment_column.size(); ++r) {
        const int t = treatment_column[r], y = outcome_column[r];
        if (t < 0 || t >= n_treatments || y < 0 || y >= n_outcomes)
            throw ParseError("category out of range in row " + std::to_string(r));
        table[t][y] += 1.0;
        counts[t] += 1.0;
    }
    for (int t = 0; t < n_treatments; ++t)
        if (counts[t] > 0.0)
            for (int y = 0; y < n_outcomes; ++y) table[t][y] /= counts[t];
    return ordering_from_table(std::move(table), n_treatments, n_outcomes);
}

}  // namespace twincf
