#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twincf/scm.hpp"

namespace twincf {

// Column-oriented integer dataset plus optional auxiliary real columns.
struct Dataset {
    std::vector<std::string> columns;
    std::vector<std::vector<int>> rows;
    std::vector<std::string> aux_columns;          // e.g. the retained sigmoid value
    std::vector<std::vector<double>> aux_rows;

    std::size_t size() const { return rows.size(); }
    int column_index(const std::string& name) const;
};

// Per-row latent draws, recoverable ground truth for counterfactual scoring.
struct Sidecar {
    std::vector<std::string> columns;      // latent names; real-valued latents stored as doubles
    std::vector<std::vector<double>> rows;
};

struct AnalyticPoc {
    std::optional<double> pn, ps, pns;  // nullopt when the formula is 0/0
};

struct GeneratedData {
    Dataset dataset;
    Sidecar sidecar;
    AnalyticPoc analytic;
    std::optional<ScmSpec> scm_encoding;  // absent for the continuous-latent generator
    std::string treatment;
    std::string outcome;
    std::vector<std::string> covariates;
};

// Appendix-style unconfounded generator: X ~ Bernoulli(px1), U_Y ~ q over
// {0,1,2}, Y = X / 0 / 1 by branch. Attaches the closed-form PN/PS/PNS.
GeneratedData gen_unconfounded(const std::array<double, 3>& q, double px1, std::uint64_t n,
                               std::uint64_t seed);

// Confounded variant: Z ~ Bernoulli(pz1), U_x ~ Bernoulli(0.5), X = U_x xor Z,
// Y = X*Z / 0 / 1 by branch.
GeneratedData gen_confounded(const std::array<double, 3>& q, double pz1, std::uint64_t n,
                             std::uint64_t seed);

// Seven-branch credit-style generator over X, Z uniform in {0,1,2} with
// outcomes clipped to {0,1,2}.
GeneratedData gen_credit7(std::uint64_t n, std::uint64_t seed);

// Logistic stroke-trial generator: X uniform {0,1,2}; SEX, AGE ~ Bernoulli(0.5);
// CONSC uniform {0,1,2}; U_y standard normal;
// g = X + SEX + 0.2 (CONSC - 1) + 0.5 X SEX AGE + U_y; Y = 1[sigmoid(g) > 0.5].
GeneratedData gen_ist_logistic(std::uint64_t n, std::uint64_t seed);

// Deterministic outcome of the credit7 rule for a given branch; exposed so
// counterfactual labels can be recomputed from sidecar draws.
int credit7_outcome(int x, int z, int u_y);

// Same for the logistic generator.
int ist_outcome(int x, int sex, int age, int consc, double u_y);
double ist_sigmoid(int x, int sex, int age, int consc, double u_y);

// Explicit SCM encodings (also embedded in GeneratedData).
ScmSpec encode_unconfounded(const std::array<double, 3>& q, double px1);
ScmSpec encode_confounded(const std::array<double, 3>& q, double pz1, double pux1 = 0.5);
ScmSpec encode_credit7();

}  // namespace twincf
