#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twincf/parallel.hpp"

namespace twincf {

enum class VarKind { Observed, Latent };

struct VariableDecl {
    std::string name;
    VarKind kind = VarKind::Observed;
    int cardinality = 0;  // categories are 0..cardinality-1
};

// Deterministic mechanism of one observed variable: a dense lookup table
// over its parent tuples, row-major with the last parent fastest-varying.
struct Mechanism {
    std::string child;
    std::vector<std::string> parents;  // observed parents first, then the latent parent
    std::vector<int> table;
};

struct LatentDist {
    std::string variable;
    std::vector<double> probs;
};

// Raw, pre-validation model description (mirrors the JSON SCM format).
struct ScmSpec {
    std::vector<VariableDecl> variables;
    std::vector<LatentDist> latents;
    std::vector<Mechanism> mechanisms;
};

// Map from variable name to category value.
using Assignment = std::map<std::string, int>;

// Exact distribution over a variable set. Only entries with positive
// probability are kept in the support.
struct DistTable {
    std::vector<std::string> vars;
    std::vector<int> cards;
    std::vector<std::vector<int>> support;  // one value row per entry, aligned with vars
    std::vector<double> probs;

    double prob_of(const Assignment& a) const;  // 0 when a is not in the support
    double mass() const;
};

constexpr std::uint64_t kDefaultEnumCap = 10'000'000;

constexpr double kZeroEvidenceTol = 1e-15;

// Validated, immutable structural causal model. Values are safe to share
// across threads; all mutating operations return a new model.
class Scm {
public:
    // Checks every invariant (DAG, table totality, category ranges,
    // distribution normalization) and compiles index structures. Throws
    // CycleDetected / PartialMechanism / BadDistribution / UnknownVariable.
    static Scm validate(const ScmSpec& spec);

    const std::vector<VariableDecl>& variables() const { return variables_; }
    const VariableDecl& variable(int id) const { return variables_[id]; }
    int index_of(const std::string& name) const;  // throws UnknownVariable
    bool has_variable(const std::string& name) const;
    const std::vector<int>& observed_ids() const { return observed_ids_; }
    const std::vector<int>& latent_ids() const { return latent_ids_; }
    const std::vector<int>& topo_order() const { return topo_order_; }
    const std::vector<double>& latent_probs(int latent_id) const;
    ScmSpec to_spec() const { return spec_; }

    // Number of joint latent configurations (saturates at u64 max).
    std::uint64_t latent_config_count() const;

    // Ancestral sampling of the observed variables; deterministic given seed
    // and independent of thread count.
    std::vector<Assignment> sample(std::uint64_t n, std::uint64_t seed,
                                   Exec exec = Exec::Parallel) const;

    // do-operator: replaces the mechanisms of the intervened variables with
    // constants and empties their parent lists.
    Scm intervene(const Assignment& intervention) const;

    // Exact joint over all observed variables by enumerating latent
    // configurations. Throws EnumerationTooLarge above `cap`.
    DistTable joint(std::uint64_t cap = kDefaultEnumCap, Exec exec = Exec::Parallel) const;

    // Exact P(target | evidence). Throws ZeroEvidence when the evidence
    // probability falls below 1e-15.
    DistTable conditional(const std::vector<std::string>& target, const Assignment& evidence,
                          std::uint64_t cap = kDefaultEnumCap, Exec exec = Exec::Parallel) const;

    // Exact P(target | do(intervention), covariates) in the submodel.
    DistTable interventional(const std::vector<std::string>& target, const Assignment& intervention,
                             const Assignment& covariates = {}, std::uint64_t cap = kDefaultEnumCap,
                             Exec exec = Exec::Parallel) const;

    // --- low-level hooks used by the twin engine and the checkers ---

    // Writes the latent configuration with the given mixed-radix index
    // (first latent slowest-varying) into `latent_values`, ordered like
    // latent_ids().
    void decode_latent_config(std::uint64_t index, std::span<int> latent_values) const;
    double latent_config_prob(std::span<const int> latent_values) const;

    // Fills `values` (indexed by variable id, latent slots already set) by
    // evaluating mechanisms in topological order.
    void propagate(std::span<int> values) const;

    // Draws every latent into `values` (indexed by variable id).
    void draw_latents(SplitMix64& rng, std::span<int> values) const;

    int var_count() const { return static_cast<int>(variables_.size()); }

private:
    Scm() = default;

    struct CompiledMechanism {
        int child = -1;
        std::vector<int> parent_ids;
        std::vector<int> strides;
        std::vector<int> table;
    };

    ScmSpec spec_;
    std::vector<VariableDecl> variables_;
    std::map<std::string, int> name_to_id_;
    std::vector<int> observed_ids_;
    std::vector<int> latent_ids_;
    std::vector<int> topo_order_;                    // observed ids, parents before children
    std::vector<CompiledMechanism> mechanisms_;      // indexed by variable id (observed only)
    std::vector<std::vector<double>> latent_probs_;  // indexed by variable id (latent only)

    std::vector<double> dense_joint(std::uint64_t cap, Exec exec) const;  // over packed observed tuples
    std::uint64_t observed_tuple_count() const;
    std::uint64_t pack_observed(std::span<const int> values) const;
    void unpack_observed(std::uint64_t index, std::span<int> values) const;
};

}  // namespace twincf
