#include "twincf/scm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "twincf/error.hpp"
#include "twincf/rng.hpp"

namespace twincf {

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

double DistTable::prob_of(const Assignment& a) const {
    for (std::size_t i = 0; i < support.size(); ++i) {
        bool match = true;
        for (std::size_t v = 0; v < vars.size(); ++v) {
            auto it = a.find(vars[v]);
            if (it == a.end() || it->second != support[i][v]) {
                match = false;
                break;
            }
        }
        if (match) return probs[i];
    }
    return 0.0;
}

double DistTable::mass() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
}

Scm Scm::validate(const ScmSpec& spec) {
    Scm m;
    m.spec_ = spec;
    m.variables_ = spec.variables;

    for (int i = 0; i < static_cast<int>(m.variables_.size()); ++i) {
        const auto& v = m.variables_[i];
        if (v.cardinality < 1)
            throw BadDistribution("variable '" + v.name + "' has cardinality " +
                                  std::to_string(v.cardinality) + "; must be >= 1");
        if (!m.name_to_id_.emplace(v.name, i).second)
            throw ParseError("duplicate variable name '" + v.name + "'");
        (v.kind == VarKind::Observed ? m.observed_ids_ : m.latent_ids_).push_back(i);
    }

    // Latent distributions: one per latent variable, normalized.
    m.latent_probs_.resize(m.variables_.size());
    std::vector<bool> has_dist(m.variables_.size(), false);
    for (const auto& ld : spec.latents) {
        const int id = m.index_of(ld.variable);
        if (m.variables_[id].kind != VarKind::Latent)
            throw BadDistribution("'" + ld.variable + "' is not a latent variable");
        if (has_dist[id]) throw BadDistribution("duplicate distribution for '" + ld.variable + "'");
        if (static_cast<int>(ld.probs.size()) != m.variables_[id].cardinality)
            throw BadDistribution("distribution for '" + ld.variable + "' has " +
                                  std::to_string(ld.probs.size()) + " entries, expected " +
                                  std::to_string(m.variables_[id].cardinality));
        double sum = 0.0;
        for (double p : ld.probs) {
            if (!(p >= 0.0))
                throw BadDistribution("negative probability in distribution for '" + ld.variable + "'");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            std::ostringstream os;
            os << "distribution for '" << ld.variable << "' sums to " << sum;
            throw BadDistribution(os.str());
        }
        m.latent_probs_[id] = ld.probs;
        has_dist[id] = true;
    }
    for (int id : m.latent_ids_)
        if (!has_dist[id])
            throw BadDistribution("latent '" + m.variables_[id].name + "' has no distribution");

    // Mechanisms: one per observed variable, total over the parent tuple
    // space, children in range.
    m.mechanisms_.resize(m.variables_.size());
    std::vector<bool> has_mech(m.variables_.size(), false);
    for (const auto& mech : spec.mechanisms) {
        const int child = m.index_of(mech.child);
        if (m.variables_[child].kind != VarKind::Observed)
            throw LatentIntervention("mechanism declared for latent variable '" + mech.child + "'");
        if (has_mech[child]) throw ParseError("duplicate mechanism for '" + mech.child + "'");

        CompiledMechanism cm;
        cm.child = child;
        std::uint64_t tuple_count = 1;
        int latent_parents = 0;
        for (const auto& p : mech.parents) {
            const int pid = m.index_of(p);
            if (pid == child) throw CycleDetected("variable '" + mech.child + "' is its own parent");
            if (m.variables_[pid].kind == VarKind::Latent) ++latent_parents;
            cm.parent_ids.push_back(pid);
            tuple_count *= static_cast<std::uint64_t>(m.variables_[pid].cardinality);
        }
        if (latent_parents > 1)
            throw ParseError("mechanism for '" + mech.child + "' has " +
                             std::to_string(latent_parents) + " latent parents; at most 1 allowed");
        if (mech.table.size() != tuple_count)
            throw PartialMechanism("mechanism for '" + mech.child + "' covers " +
                                   std::to_string(mech.table.size()) + " tuples, expected " +
                                   std::to_string(tuple_count) + " (parents: " +
                                   join(mech.parents, ", ") + ")");
        for (int y : mech.table)
            if (y < 0 || y >= m.variables_[child].cardinality)
                throw PartialMechanism("mechanism for '" + mech.child + "' outputs category " +
                                       std::to_string(y) + ", out of range");
        // Row-major with the last parent fastest-varying.
        cm.strides.assign(cm.parent_ids.size(), 1);
        for (int i = static_cast<int>(cm.parent_ids.size()) - 2; i >= 0; --i)
            cm.strides[i] = cm.strides[i + 1] * m.variables_[cm.parent_ids[i + 1]].cardinality;
        cm.table = mech.table;
        m.mechanisms_[child] = std::move(cm);
        has_mech[child] = true;
    }
    for (int id : m.observed_ids_)
        if (!has_mech[id])
            throw PartialMechanism("observed variable '" + m.variables_[id].name + "' has no mechanism");

    // Topological order via Kahn's algorithm over observed->observed edges;
    // a leftover node names a back edge.
    std::vector<int> indegree(m.variables_.size(), 0);
    std::vector<std::vector<int>> children(m.variables_.size());
    for (int id : m.observed_ids_)
        for (int pid : m.mechanisms_[id].parent_ids)
            if (m.variables_[pid].kind == VarKind::Observed) {
                ++indegree[id];
                children[pid].push_back(id);
            }
    std::vector<int> frontier;
    for (int id : m.observed_ids_)
        if (indegree[id] == 0) frontier.push_back(id);
    while (!frontier.empty()) {
        const int id = frontier.back();
        frontier.pop_back();
        m.topo_order_.push_back(id);
        for (int c : children[id])
            if (--indegree[c] == 0) frontier.push_back(c);
    }
    if (m.topo_order_.size() != m.observed_ids_.size()) {
        for (int id : m.observed_ids_)
            if (indegree[id] > 0)
                for (int pid : m.mechanisms_[id].parent_ids)
                    if (m.variables_[pid].kind == VarKind::Observed && indegree[pid] > 0)
                        throw CycleDetected("back edge into '" + m.variables_[id].name + "' from '" +
                                            m.variables_[pid].name + "'");
        throw CycleDetected("graph contains a cycle");
    }
    return m;
}

int Scm::index_of(const std::string& name) const {
    auto it = name_to_id_.find(name);
    if (it == name_to_id_.end()) throw UnknownVariable("unknown variable '" + name + "'");
    return it->second;
}

bool Scm::has_variable(const std::string& name) const { return name_to_id_.count(name) > 0; }

const std::vector<double>& Scm::latent_probs(int latent_id) const { return latent_probs_[latent_id]; }

std::uint64_t Scm::latent_config_count() const {
    std::uint64_t n = 1;
    for (int id : latent_ids_) {
        const std::uint64_t c = static_cast<std::uint64_t>(variables_[id].cardinality);
        if (n > std::numeric_limits<std::uint64_t>::max() / c)
            return std::numeric_limits<std::uint64_t>::max();
        n *= c;
    }
    return n;
}

void Scm::decode_latent_config(std::uint64_t index, std::span<int> latent_values) const {
    for (int i = static_cast<int>(latent_ids_.size()) - 1; i >= 0; --i) {
        const std::uint64_t c = static_cast<std::uint64_t>(variables_[latent_ids_[i]].cardinality);
        latent_values[i] = static_cast<int>(index % c);
        index /= c;
    }
}

double Scm::latent_config_prob(std::span<const int> latent_values) const {
    double p = 1.0;
    for (std::size_t i = 0; i < latent_ids_.size(); ++i)
        p *= latent_probs_[latent_ids_[i]][latent_values[i]];
    return p;
}

void Scm::propagate(std::span<int> values) const {
    for (int id : topo_order_) {
        const CompiledMechanism& cm = mechanisms_[id];
        std::size_t idx = 0;
        for (std::size_t i = 0; i < cm.parent_ids.size(); ++i)
            idx += static_cast<std::size_t>(cm.strides[i]) * values[cm.parent_ids[i]];
        values[id] = cm.table[idx];
    }
}

void Scm::draw_latents(SplitMix64& rng, std::span<int> values) const {
    for (int id : latent_ids_) values[id] = rng.draw_categorical(latent_probs_[id]);
}

std::vector<Assignment> Scm::sample(std::uint64_t n, std::uint64_t seed, Exec exec) const {
    std::vector<Assignment> rows(n);
    for_blocks(n, kMcBlockSize, exec, [&](std::uint64_t block, std::uint64_t begin, std::uint64_t end) {
        SplitMix64 rng(derive_seed(seed, block));
        std::vector<int> values(variables_.size(), 0);
        for (std::uint64_t r = begin; r < end; ++r) {
            draw_latents(rng, values);
            propagate(values);
            Assignment row;
            for (int id : observed_ids_) row[variables_[id].name] = values[id];
            rows[r] = std::move(row);
        }
    });
    return rows;
}

Scm Scm::intervene(const Assignment& intervention) const {
    ScmSpec spec = spec_;
    for (const auto& [name, value] : intervention) {
        const int id = index_of(name);
        if (variables_[id].kind == VarKind::Latent)
            throw LatentIntervention("cannot intervene on latent variable '" + name + "'");
        if (value < 0 || value >= variables_[id].cardinality)
            throw ParseError("intervention value " + std::to_string(value) + " out of range for '" +
                             name + "'");
        for (auto& mech : spec.mechanisms) {
            if (mech.child == name) {
                mech.parents.clear();
                mech.table = {value};
            }
        }
    }
    return validate(spec);
}

std::uint64_t Scm::observed_tuple_count() const {
    std::uint64_t n = 1;
    for (int id : observed_ids_) {
        const std::uint64_t c = static_cast<std::uint64_t>(variables_[id].cardinality);
        if (n > std::numeric_limits<std::uint64_t>::max() / c)
            return std::numeric_limits<std::uint64_t>::max();
        n *= c;
    }
    return n;
}

std::uint64_t Scm::pack_observed(std::span<const int> values) const {
    std::uint64_t idx = 0;
    for (int id : observed_ids_)
        idx = idx * static_cast<std::uint64_t>(variables_[id].cardinality) + values[id];
    return idx;
}

void Scm::unpack_observed(std::uint64_t index, std::span<int> values) const {
    for (int i = static_cast<int>(observed_ids_.size()) - 1; i >= 0; --i) {
        const int id = observed_ids_[i];
        const std::uint64_t c = static_cast<std::uint64_t>(variables_[id].cardinality);
        values[i] = static_cast<int>(index % c);
        index /= c;
    }
}

std::vector<double> Scm::dense_joint(std::uint64_t cap, Exec exec) const {
    const std::uint64_t n_configs = latent_config_count();
    if (n_configs > cap)
        throw EnumerationTooLarge("latent support size " + std::to_string(n_configs) +
                                  " exceeds enumeration cap " + std::to_string(cap));
    const std::uint64_t n_tuples = observed_tuple_count();
    if (n_tuples > cap)
        throw EnumerationTooLarge("observed tuple space " + std::to_string(n_tuples) +
                                  " exceeds enumeration cap " + std::to_string(cap));

    const int n_threads = max_threads(exec);
    std::vector<std::vector<double>> partials(n_threads, std::vector<double>(n_tuples, 0.0));

    auto accumulate = [&](std::vector<double>& acc, std::uint64_t begin, std::uint64_t end) {
        std::vector<int> latent_values(latent_ids_.size(), 0);
        std::vector<int> values(variables_.size(), 0);
        for (std::uint64_t cfg = begin; cfg < end; ++cfg) {
            decode_latent_config(cfg, latent_values);
            const double p = latent_config_prob(latent_values);
            if (p == 0.0) continue;
            for (std::size_t i = 0; i < latent_ids_.size(); ++i) values[latent_ids_[i]] = latent_values[i];
            propagate(values);
            std::uint64_t idx = 0;
            for (int id : observed_ids_)
                idx = idx * static_cast<std::uint64_t>(variables_[id].cardinality) + values[id];
            acc[idx] += p;
        }
    };

#ifdef _OPENMP
    if (exec == Exec::Parallel && n_configs >= 4096) {
#pragma omp parallel num_threads(n_threads)
        {
            const int t = omp_get_thread_num();
            const std::uint64_t per = (n_configs + n_threads - 1) / n_threads;
            const std::uint64_t begin = per * static_cast<std::uint64_t>(t);
            const std::uint64_t end = std::min(n_configs, begin + per);
            if (begin < end) accumulate(partials[t], begin, end);
        }
        // Merge in thread order: deterministic for a fixed thread count.
        for (int t = 1; t < n_threads; ++t)
            for (std::uint64_t i = 0; i < n_tuples; ++i) partials[0][i] += partials[t][i];
        return std::move(partials[0]);
    }
#endif
    accumulate(partials[0], 0, n_configs);
    return std::move(partials[0]);
}

DistTable Scm::joint(std::uint64_t cap, Exec exec) const {
    const std::vector<double> dense = dense_joint(cap, exec);
    DistTable t;
    for (int id : observed_ids_) {
        t.vars.push_back(variables_[id].name);
        t.cards.push_back(variables_[id].cardinality);
    }
    std::vector<int> values(observed_ids_.size(), 0);
    for (std::uint64_t i = 0; i < dense.size(); ++i) {
        if (dense[i] == 0.0) continue;
        unpack_observed(i, values);
        t.support.push_back(values);
        t.probs.push_back(dense[i]);
    }
    return t;
}

DistTable Scm::conditional(const std::vector<std::string>& target, const Assignment& evidence,
                           std::uint64_t cap, Exec exec) const {
    std::vector<int> target_ids;
    for (const auto& name : target) target_ids.push_back(index_of(name));
    std::vector<std::pair<std::size_t, int>> evidence_slots;  // position in observed_ids_, value
    for (const auto& [name, value] : evidence) {
        const int id = index_of(name);
        const auto it = std::find(observed_ids_.begin(), observed_ids_.end(), id);
        if (it == observed_ids_.end())
            throw LatentIntervention("evidence on latent variable '" + name + "'");
        evidence_slots.emplace_back(static_cast<std::size_t>(it - observed_ids_.begin()), value);
    }

    const DistTable full = joint(cap, exec);
    std::vector<std::size_t> target_slots;
    for (int id : target_ids)
        target_slots.push_back(static_cast<std::size_t>(
            std::find(observed_ids_.begin(), observed_ids_.end(), id) - observed_ids_.begin()));

    DistTable out;
    for (int id : target_ids) {
        out.vars.push_back(variables_[id].name);
        out.cards.push_back(variables_[id].cardinality);
    }
    std::map<std::vector<int>, double> acc;
    double evidence_mass = 0.0;
    for (std::size_t i = 0; i < full.support.size(); ++i) {
        bool keep = true;
        for (const auto& [slot, value] : evidence_slots)
            if (full.support[i][slot] != value) {
                keep = false;
                break;
            }
        if (!keep) continue;
        evidence_mass += full.probs[i];
        std::vector<int> key;
        key.reserve(target_slots.size());
        for (std::size_t s : target_slots) key.push_back(full.support[i][s]);
        acc[key] += full.probs[i];
    }
    if (evidence_mass < kZeroEvidenceTol) {
        std::ostringstream os;
        os << "evidence probability " << evidence_mass << " below 1e-15";
        throw ZeroEvidence(os.str());
    }
    for (const auto& [key, p] : acc) {
        if (p == 0.0) continue;
        out.support.push_back(key);
        out.probs.push_back(p / evidence_mass);
    }
    return out;
}

DistTable Scm::interventional(const std::vector<std::string>& target, const Assignment& intervention,
                              const Assignment& covariates, std::uint64_t cap, Exec exec) const {
    return intervene(intervention).conditional(target, covariates, cap, exec);
}

}  // namespace twincf
