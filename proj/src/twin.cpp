#include "twincf/twin.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>

#include "twincf/error.hpp"
#include "twincf/rng.hpp"

namespace twincf {

int OutcomeEvent::rank_of(int category) const {
    if (outcome_order.empty()) return category;
    for (int i = 0; i < static_cast<int>(outcome_order.size()); ++i)
        if (outcome_order[i] == category) return i;
    throw ParseError("category " + std::to_string(category) + " missing from outcome order");
}

bool OutcomeEvent::matches(int category) const {
    switch (op) {
        case EventOp::Eq: return category == value;
        case EventOp::Ge: return rank_of(category) >= rank_of(value);
        case EventOp::Le: return rank_of(category) <= rank_of(value);
    }
    return false;
}

TwinNetwork build_twin(const Scm& scm, const std::vector<std::string>& cf_intervention_vars) {
    for (const auto& name : cf_intervention_vars) {
        const int id = scm.index_of(name);
        if (scm.variable(id).kind != VarKind::Observed)
            throw LatentIntervention("cannot intervene on latent variable '" + name + "'");
    }

    const ScmSpec base = scm.to_spec();
    ScmSpec twin;
    twin.variables = base.variables;
    for (const auto& v : base.variables)
        if (v.kind == VarKind::Observed) twin.variables.push_back({starred(v.name), v.kind, v.cardinality});
    twin.latents = base.latents;

    TwinNetwork result;
    twin.mechanisms = base.mechanisms;
    for (const auto& mech : base.mechanisms) {
        Mechanism star;
        star.child = starred(mech.child);
        const bool cut = std::find(cf_intervention_vars.begin(), cf_intervention_vars.end(),
                                   mech.child) != cf_intervention_vars.end();
        if (cut) {
            star.table = {0};  // constant-pending; a query's do() supplies the value
            result.cut_set.push_back(star.child);
        } else {
            // Observed parents point at their starred copies; the latent
            // parent stays shared with the factual side.
            for (const auto& p : mech.parents) {
                const int pid = scm.index_of(p);
                star.parents.push_back(scm.variable(pid).kind == VarKind::Observed ? starred(p) : p);
            }
            star.table = mech.table;
        }
        twin.mechanisms.push_back(std::move(star));
    }
    result.graph = Scm::validate(twin);
    return result;
}

namespace {

// Applies the query's interventions to the twin graph and resolves the
// variable ids the evaluation loop needs.
struct PreparedQuery {
    Scm graph;
    int target_id = -1;
    std::vector<std::pair<int, int>> evidence;  // variable id, value
    OutcomeEvent target;
};

PreparedQuery prepare(const Scm& scm, const CounterfactualQuery& q) {
    if (q.cf_do.empty())
        throw ParseError("cf_do is empty; a counterfactual query needs a counterfactual intervention");
    std::vector<std::string> cf_vars;
    for (const auto& [name, value] : q.cf_do) cf_vars.push_back(name);
    TwinNetwork twin = build_twin(scm, cf_vars);

    Assignment star_do;
    for (const auto& [name, value] : q.cf_do) star_do[starred(name)] = value;
    Scm graph = twin.graph.intervene(star_do);
    if (!q.factual_do.empty()) graph = graph.intervene(q.factual_do);

    PreparedQuery p{std::move(graph), -1, {}, q.target};
    p.target_id = p.graph.index_of(starred(q.target.var));
    for (const auto& [name, value] : q.evidence) p.evidence.emplace_back(p.graph.index_of(name), value);
    return p;
}

}  // namespace

CfParts counterfactual_exact_parts(const Scm& scm, const CounterfactualQuery& q, std::uint64_t cap,
                                   Exec exec) {
    const PreparedQuery p = prepare(scm, q);
    const Scm& g = p.graph;
    const std::uint64_t n_configs = g.latent_config_count();
    if (n_configs > cap)
        throw EnumerationTooLarge("latent support size " + std::to_string(n_configs) +
                                  " exceeds enumeration cap " + std::to_string(cap));

    const int n_threads = max_threads(exec);
    const std::uint64_t chunk = std::max<std::uint64_t>(1, (n_configs + n_threads - 1) / n_threads);
    const std::uint64_t n_blocks = n_configs == 0 ? 0 : (n_configs + chunk - 1) / chunk;
    std::vector<CfParts> partials(std::max<std::uint64_t>(1, n_blocks));
    for_blocks(n_configs, chunk, exec, [&](std::uint64_t block, std::uint64_t begin, std::uint64_t end) {
        CfParts acc;
        std::vector<int> latent_values(g.latent_ids().size(), 0);
        std::vector<int> values(g.var_count(), 0);
        for (std::uint64_t cfg = begin; cfg < end; ++cfg) {
            g.decode_latent_config(cfg, latent_values);
            const double prob = g.latent_config_prob(latent_values);
            if (prob == 0.0) continue;
            for (std::size_t i = 0; i < g.latent_ids().size(); ++i)
                values[g.latent_ids()[i]] = latent_values[i];
            g.propagate(values);
            bool keep = true;
            for (const auto& [id, v] : p.evidence)
                if (values[id] != v) {
                    keep = false;
                    break;
                }
            if (!keep) continue;
            acc.evidence_prob += prob;
            if (p.target.matches(values[p.target_id])) acc.joint_prob += prob;
        }
        partials[block] = acc;
    });
    CfParts total;
    for (const auto& part : partials) {
        total.joint_prob += part.joint_prob;
        total.evidence_prob += part.evidence_prob;
    }
    return total;
}

double counterfactual_exact(const Scm& scm, const CounterfactualQuery& q, std::uint64_t cap, Exec exec) {
    const CfParts parts = counterfactual_exact_parts(scm, q, cap, exec);
    if (parts.evidence_prob < kZeroEvidenceTol) {
        std::ostringstream os;
        os << "evidence probability " << parts.evidence_prob << " below 1e-15";
        throw ZeroEvidence(os.str());
    }
    return parts.joint_prob / parts.evidence_prob;
}

Estimate counterfactual_mc(const Scm& scm, const CounterfactualQuery& q, std::uint64_t n,
                           std::uint64_t seed, Exec exec) {
    const PreparedQuery p = prepare(scm, q);
    const Scm& g = p.graph;

    const std::uint64_t n_blocks = (n + kMcBlockSize - 1) / kMcBlockSize;
    std::vector<std::uint64_t> accepted(n_blocks, 0), hits(n_blocks, 0);
    for_blocks(n, kMcBlockSize, exec, [&](std::uint64_t block, std::uint64_t begin, std::uint64_t end) {
        SplitMix64 rng(derive_seed(seed, block));
        std::vector<int> values(g.var_count(), 0);
        std::uint64_t acc = 0, hit = 0;
        for (std::uint64_t i = begin; i < end; ++i) {
            g.draw_latents(rng, values);
            g.propagate(values);
            bool keep = true;
            for (const auto& [id, v] : p.evidence)
                if (values[id] != v) {
                    keep = false;
                    break;
                }
            if (!keep) continue;
            ++acc;
            if (p.target.matches(values[p.target_id])) ++hit;
        }
        accepted[block] = acc;
        hits[block] = hit;
    });

    std::uint64_t acc = 0, hit = 0;
    for (std::uint64_t b = 0; b < n_blocks; ++b) {
        acc += accepted[b];
        hit += hits[b];
    }
    if (acc == 0)
        throw NoAcceptedSamples("no samples matched the evidence after " + std::to_string(n) + " draws");
    Estimate e;
    e.value = static_cast<double>(hit) / static_cast<double>(acc);
    e.stderr_value = std::sqrt(e.value * (1.0 - e.value) / static_cast<double>(acc));
    e.n_effective = acc;
    return e;
}

Estimate counterfactual_aap(const Scm& scm, const CounterfactualQuery& q, std::uint64_t n,
                            std::uint64_t seed, std::uint64_t cap) {
    if (q.cf_do.empty()) throw ParseError("cf_do is empty");

    // Abduction: posterior over joint latent configurations given the
    // evidence, in the factual submodel.
    const Scm factual = q.factual_do.empty() ? scm : scm.intervene(q.factual_do);
    std::vector<std::pair<int, int>> evidence;
    for (const auto& [name, value] : q.evidence) evidence.emplace_back(factual.index_of(name), value);

    std::vector<std::vector<int>> posterior_support;
    std::vector<double> posterior_probs;
    const std::uint64_t n_configs = factual.latent_config_count();
    if (n_configs <= cap) {
        std::vector<int> latent_values(factual.latent_ids().size(), 0);
        std::vector<int> values(factual.var_count(), 0);
        double mass = 0.0;
        for (std::uint64_t cfg = 0; cfg < n_configs; ++cfg) {
            factual.decode_latent_config(cfg, latent_values);
            const double prob = factual.latent_config_prob(latent_values);
            if (prob == 0.0) continue;
            for (std::size_t i = 0; i < factual.latent_ids().size(); ++i)
                values[factual.latent_ids()[i]] = latent_values[i];
            factual.propagate(values);
            bool keep = true;
            for (const auto& [id, v] : evidence)
                if (values[id] != v) {
                    keep = false;
                    break;
                }
            if (!keep) continue;
            posterior_support.push_back(latent_values);
            posterior_probs.push_back(prob);
            mass += prob;
        }
        if (mass < kZeroEvidenceTol) {
            std::ostringstream os;
            os << "evidence probability " << mass << " below 1e-15";
            throw ZeroEvidence(os.str());
        }
        for (double& p : posterior_probs) p /= mass;
    } else {
        // Above the enumeration cap: represent the posterior by rejection
        // draws from the prior.
        SplitMix64 rng(derive_seed(seed, 0x0abdu));
        std::vector<int> values(factual.var_count(), 0);
        std::vector<int> latent_values(factual.latent_ids().size(), 0);
        for (std::uint64_t i = 0; i < n; ++i) {
            factual.draw_latents(rng, values);
            bool keep = true;
            factual.propagate(values);
            for (const auto& [id, v] : evidence)
                if (values[id] != v) {
                    keep = false;
                    break;
                }
            if (!keep) continue;
            for (std::size_t j = 0; j < factual.latent_ids().size(); ++j)
                latent_values[j] = values[factual.latent_ids()[j]];
            posterior_support.push_back(latent_values);
            posterior_probs.push_back(1.0);
        }
        if (posterior_support.empty())
            throw NoAcceptedSamples("abduction found no draws matching the evidence");
        const double w = 1.0 / static_cast<double>(posterior_probs.size());
        for (double& p : posterior_probs) p = w;
    }

    // Action: intervened submodel (the counterfactual intervention applies
    // to the base model, not to the factual submodel).
    const Scm acted = scm.intervene(q.cf_do);
    const int target_id = acted.index_of(q.target.var);

    // Prediction: Monte Carlo over the posterior.
    std::vector<double> cumulative(posterior_probs.size());
    double running = 0.0;
    for (std::size_t i = 0; i < posterior_probs.size(); ++i) {
        running += posterior_probs[i];
        cumulative[i] = running;
    }
    SplitMix64 rng(derive_seed(seed, 0x9ced));
    std::vector<int> values(acted.var_count(), 0);
    std::uint64_t hit = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double r = rng.next_double() * running;
        const std::size_t pick = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
        const auto& latent_values = posterior_support[std::min(pick, posterior_support.size() - 1)];
        for (std::size_t j = 0; j < acted.latent_ids().size(); ++j)
            values[acted.latent_ids()[j]] = latent_values[j];
        acted.propagate(values);
        if (q.target.matches(values[target_id])) ++hit;
    }
    Estimate e;
    e.value = static_cast<double>(hit) / static_cast<double>(n);
    e.stderr_value = std::sqrt(e.value * (1.0 - e.value) / static_cast<double>(n));
    e.n_effective = n;
    return e;
}

std::vector<BenchRow> bench_compare(const Scm& scm, const std::vector<CounterfactualQuery>& queries,
                                    std::uint64_t n, std::uint64_t seed) {
    using clock = std::chrono::steady_clock;
    std::vector<BenchRow> report;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const std::uint64_t query_seed = derive_seed(seed, i);

        const auto t0 = clock::now();
        const Estimate mc = counterfactual_mc(scm, queries[i], n, query_seed);
        const auto t1 = clock::now();
        const Estimate aap = counterfactual_aap(scm, queries[i], n, query_seed);
        const auto t2 = clock::now();

        const double tolerance =
            std::max(2.0 * (mc.stderr_value + aap.stderr_value), 1e-9);
        if (std::abs(mc.value - aap.value) > tolerance) {
            std::ostringstream os;
            os << "query " << i << ": twin-mc " << mc.value << " and aap " << aap.value
               << " disagree beyond 2x combined stderr " << tolerance;
            throw Error("EstimatorDisagreement", os.str());
        }

        const auto ms = [](auto d) {
            return std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(d).count();
        };
        report.push_back({std::to_string(i), "twin-mc", mc.value, mc.stderr_value, mc.n_effective,
                          ms(t1 - t0)});
        report.push_back({std::to_string(i), "aap", aap.value, aap.stderr_value, aap.n_effective,
                          ms(t2 - t1)});
    }
    return report;
}

}  // namespace twincf
