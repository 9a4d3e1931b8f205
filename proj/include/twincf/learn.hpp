#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twincf/twin.hpp"

namespace twincf {

enum class NoiseKind { StandardNormal, Uniform };
enum class PenaltyKind { None, PairwiseHinge };
enum class LossKind { Mse, CrossEntropy };

// One training example of the two-headed dataset: factual treatment/outcome
// plus a counterfactual treatment with its label.
struct TwinRow {
    int x = 0;
    int x_star = 0;  // must differ from x
    std::vector<double> z;
    int y = 0;
    int y_star = 0;
};

struct TwinDataset {
    int n_treatments = 0;
    int n_outcomes = 0;
    int z_dim = 0;
    std::vector<TwinRow> rows;

    void check() const;  // enforces x != x_star and category ranges
};

// Observational rows before counterfactual labels are attached.
struct ObsData {
    int n_treatments = 0;
    int n_outcomes = 0;
    int z_dim = 0;
    std::vector<int> x;
    std::vector<std::vector<double>> z;
    std::vector<int> y;
};

// Ground-truth label source for the semi-synthetic path: returns the
// counterfactual outcome of `row` under treatment x_star (computable from
// the generator plus the row's sidecar latents).
using CounterfactualOracle = std::function<int(std::size_t row, int x_star)>;

// Expands each observational row into one TwinRow per counterfactual
// treatment, labelled by the oracle.
TwinDataset make_labels(const ObsData& data, const CounterfactualOracle& oracle);

// Estimator path: 1-nearest-neighbour covariate matching inside the
// x_star-treated subsample, seeded uniform choice among distance ties.
// Throws NoMatch when a treatment stratum is empty (overlap failure).
TwinDataset make_labels_matching(const ObsData& data, std::uint64_t seed);

struct Dense {
    int in = 0, out = 0;
    std::vector<double> w;  // row-major [out][in]
    std::vector<double> b;
};

// Dense layers with rectified units between them and a linear output layer.
struct Mlp {
    std::vector<Dense> layers;
};

struct ModelConfig {
    int n_treatments = 2;
    int n_outcomes = 2;
    int z_dim = 0;
    int noise_dim = 1;
    std::vector<int> z_widths{32, 32};
    std::vector<int> u_widths{32, 32};
};

// Two independent base representations (covariates and latent noise) feeding
// one softmax head per treatment category.
struct TwinModel {
    ModelConfig config;
    Mlp z_block;
    Mlp u_block;
    std::vector<Dense> heads;

    static TwinModel init(const ModelConfig& config, std::uint64_t seed);
    int rep_dim() const;  // width of [r_z | r_u]
};

struct TrainConfig {
    double learning_rate = 0.2;
    int batch_size = 128;
    int epochs = 60;
    double lambda = 1.0;
    PenaltyKind penalty = PenaltyKind::PairwiseHinge;
    LossKind loss = LossKind::Mse;
    NoiseKind noise = NoiseKind::StandardNormal;
    std::uint64_t seed = 0;
    std::vector<int> treatment_order;  // empty = natural order
    std::vector<int> outcome_order;    // empty = natural order
};

struct EpochStats {
    double loss = 0.0;     // mean two-head loss per row
    double penalty = 0.0;  // mean penalty per row
};

struct TrainResult {
    TwinModel model;
    std::vector<EpochStats> curve;
};

// Evaluates heads x and x_star on the shared representations; the remaining
// heads are not evaluated. Returns (dist over y, dist over y*).
std::pair<std::vector<double>, std::vector<double>> forward(const TwinModel& model, int x, int x_star,
                                                            std::span<const double> z,
                                                            std::span<const double> u);

// The learned map g from base noise to the latent representation.
std::vector<double> reparam_noise(const TwinModel& model, std::span<const double> sample);

// Mini-batch SGD on MSE(y, y') + MSE(y*, y'*) + lambda * penalty. One noise
// draw per row, fixed for the whole run; bitwise deterministic given the
// seed. Throws NonFiniteLoss on divergence.
TrainResult train(const TwinDataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg);

// Pairwise-hinge ordering penalty, summed over the batch: for each (z, u)
// and each adjacent treatment pair in the order, max(0, E_rank[lower head] -
// E_rank[higher head]) where E_rank is the expected outcome rank.
double penalty(const TwinModel& model, const std::vector<std::vector<double>>& zs,
               const std::vector<std::vector<double>>& us, const std::vector<int>& treatment_order,
               const std::vector<int>& outcome_order);

// Central-difference check of the analytic gradients of the full training
// loss on a batch; returns the maximum relative parameter-wise error.
double grad_check(const TwinModel& model, const TwinDataset& batch,
                  const std::vector<std::vector<double>>& noise, const TrainConfig& cfg, double eps);

// --- reading the trained model as a twin network (inference) ---

// Draws one noise vector per the configured kind.
std::vector<double> draw_noise(NoiseKind kind, int dim, SplitMix64& rng);

// CDF inversion of a head distribution in outcome-rank order with a shared
// uniform draw. Sharing the draw across the two heads couples the worlds
// comonotonically, which is exact for deterministic-given-noise mechanisms
// and realizes the monotone coupling when residual softness remains.
int invert_ranked_cdf(const std::vector<double>& probs, const std::vector<int>& outcome_order,
                      double r);

struct ModelQuery {
    int factual_treatment = 0;
    int cf_treatment = 0;
    std::optional<int> evidence_y;  // accept condition on the factual outcome
    EventOp target_op = EventOp::Eq;
    int target_value = 0;
    bool joint = false;  // estimate P(target, evidence) instead of P(target | evidence)
};

// Monte Carlo query over noise draws and the supplied covariate rows
// (callers filter rows by factual treatment for observational evidence).
Estimate model_query(const TwinModel& model, const std::vector<std::vector<double>>& zs,
                     const ModelQuery& q, const std::vector<int>& outcome_order, std::uint64_t n,
                     std::uint64_t seed);

// Factual prediction: argmax of the head-x distribution averaged over noise.
int predict_factual(const TwinModel& model, int x, std::span<const double> z, std::uint64_t n,
                    std::uint64_t seed);

// Counterfactual prediction given observed (x, y): rejection over noise
// draws matching the factual outcome, argmax of the accepted counterfactual
// head aggregate. Falls back to the unconditioned aggregate when nothing is
// accepted.
int predict_counterfactual(const TwinModel& model, int x, int y, int x_star, std::span<const double> z,
                           const std::vector<int>& outcome_order, std::uint64_t n, std::uint64_t seed);

// Joint counterfactual outcome frequencies over noise draws for a binary
// treatment: entry [a][b] is the frequency of (Y_{x=0}=a, Y_{x=1}=b). On the
// three-branch synthetic generators this recovers the latent distribution.
std::vector<std::vector<double>> induced_latent_frequencies(const TwinModel& model,
                                                            const std::vector<std::vector<double>>& zs,
                                                            std::uint64_t n, std::uint64_t seed);

// Macro-averaged F1 over categories.
double macro_f1(const std::vector<int>& truth, const std::vector<int>& predicted, int n_categories);

}  // namespace twincf
