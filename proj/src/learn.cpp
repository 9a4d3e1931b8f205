#include "twincf/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "twincf/error.hpp"
#include "twincf/rng.hpp"

namespace twincf {

namespace {

constexpr double kPi = 3.14159265358979323846;

double draw_standard_normal(SplitMix64& rng) {
    double u1 = rng.next_double();
    while (u1 == 0.0) u1 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * rng.next_double());
}

std::vector<int> natural_order(int n) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    return order;
}

std::vector<int> ranks_of(const std::vector<int>& order) {
    std::vector<int> rank(order.size());
    for (int r = 0; r < static_cast<int>(order.size()); ++r) rank[order[r]] = r;
    return rank;
}

void fisher_yates(std::vector<std::uint32_t>& idx, SplitMix64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.next_below(i)]);
}

// ---- dense / MLP primitives -------------------------------------------------

void dense_forward(const Dense& d, std::span<const double> in, std::vector<double>& out) {
    out.assign(d.out, 0.0);
    for (int r = 0; r < d.out; ++r) {
        double acc = d.b[r];
        const double* wr = d.w.data() + static_cast<std::size_t>(r) * d.in;
        for (int c = 0; c < d.in; ++c) acc += wr[c] * in[c];
        out[r] = acc;
    }
}

struct MlpCache {
    std::vector<std::vector<double>> inputs;  // input of each layer (post-activation of previous)
    std::vector<std::vector<double>> pre;     // preactivation of each layer
};

// ReLU between layers, linear output layer.
void mlp_forward(const Mlp& m, std::span<const double> in, std::vector<double>& out, MlpCache* cache) {
    std::vector<double> cur(in.begin(), in.end());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        if (cache) cache->inputs[l] = cur;
        std::vector<double> next;
        dense_forward(m.layers[l], cur, next);
        if (cache) cache->pre[l] = next;
        if (l + 1 < m.layers.size())
            for (double& v : next) v = v > 0.0 ? v : 0.0;
        cur = std::move(next);
    }
    out = std::move(cur);
}

struct DenseGrad {
    std::vector<double> w, b;
};

struct MlpGrad {
    std::vector<DenseGrad> layers;
};

DenseGrad make_grad(const Dense& d) { return {std::vector<double>(d.w.size(), 0.0), std::vector<double>(d.b.size(), 0.0)}; }

MlpGrad make_grad(const Mlp& m) {
    MlpGrad g;
    for (const auto& l : m.layers) g.layers.push_back(make_grad(l));
    return g;
}

// Backpropagates grad_out through the MLP, accumulating parameter grads and
// (optionally) the gradient w.r.t. the input.
void mlp_backward(const Mlp& m, const MlpCache& cache, std::vector<double> grad_out, MlpGrad& grads,
                  std::vector<double>* grad_in) {
    for (int l = static_cast<int>(m.layers.size()) - 1; l >= 0; --l) {
        const Dense& d = m.layers[l];
        if (l + 1 < static_cast<int>(m.layers.size()))
            for (int r = 0; r < d.out; ++r)
                if (cache.pre[l][r] <= 0.0) grad_out[r] = 0.0;
        const auto& in = cache.inputs[l];
        DenseGrad& dg = grads.layers[l];
        std::vector<double> grad_prev(d.in, 0.0);
        for (int r = 0; r < d.out; ++r) {
            const double go = grad_out[r];
            dg.b[r] += go;
            double* wgr = dg.w.data() + static_cast<std::size_t>(r) * d.in;
            const double* wr = d.w.data() + static_cast<std::size_t>(r) * d.in;
            for (int c = 0; c < d.in; ++c) {
                wgr[c] += go * in[c];
                grad_prev[c] += go * wr[c];
            }
        }
        grad_out = std::move(grad_prev);
    }
    if (grad_in) *grad_in = std::move(grad_out);
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) sum += (p[i] = std::exp(logits[i] - m));
    for (double& v : p) v /= sum;
    return p;
}

// dL/dlogits from dL/dprobs through the softmax Jacobian.
std::vector<double> softmax_backward(const std::vector<double>& probs,
                                     const std::vector<double>& grad_probs) {
    double dot = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) dot += grad_probs[i] * probs[i];
    std::vector<double> grad_logits(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) grad_logits[i] = probs[i] * (grad_probs[i] - dot);
    return grad_logits;
}

// ---- loss pieces -------------------------------------------------------------

// MSE between the softmax output and the one-hot target, averaged over
// components; returns loss, writes dL/dprobs.
double head_loss(LossKind kind, const std::vector<double>& probs, int target,
                 std::vector<double>* grad_probs) {
    const int m = static_cast<int>(probs.size());
    if (kind == LossKind::CrossEntropy) {
        const double p = std::max(probs[target], 1e-12);
        if (grad_probs) {
            grad_probs->assign(m, 0.0);
            (*grad_probs)[target] = -1.0 / p;
        }
        return -std::log(p);
    }
    double loss = 0.0;
    if (grad_probs) grad_probs->assign(m, 0.0);
    for (int i = 0; i < m; ++i) {
        const double t = i == target ? 1.0 : 0.0;
        const double diff = probs[i] - t;
        loss += diff * diff / m;
        if (grad_probs) (*grad_probs)[i] = 2.0 * diff / m;
    }
    return loss;
}

struct ModelGrads {
    MlpGrad z_block, u_block;
    std::vector<DenseGrad> heads;
};

ModelGrads make_grads(const TwinModel& model) {
    ModelGrads g{make_grad(model.z_block), make_grad(model.u_block), {}};
    for (const auto& h : model.heads) g.heads.push_back(make_grad(h));
    return g;
}

struct RowWork {
    MlpCache zc, uc;
    std::vector<double> rz, ru, rep;
    std::vector<std::vector<double>> head_logits, head_probs;  // indexed by treatment
    std::vector<bool> head_evaluated;
};

void eval_blocks(const TwinModel& model, std::span<const double> z, std::span<const double> u,
                 RowWork& w) {
    w.zc.inputs.assign(model.z_block.layers.size(), {});
    w.zc.pre.assign(model.z_block.layers.size(), {});
    w.uc.inputs.assign(model.u_block.layers.size(), {});
    w.uc.pre.assign(model.u_block.layers.size(), {});
    mlp_forward(model.z_block, z, w.rz, &w.zc);
    mlp_forward(model.u_block, u, w.ru, &w.uc);
    w.rep.assign(w.rz.begin(), w.rz.end());
    w.rep.insert(w.rep.end(), w.ru.begin(), w.ru.end());
    const int n = model.config.n_treatments;
    w.head_logits.assign(n, {});
    w.head_probs.assign(n, {});
    w.head_evaluated.assign(n, false);
}

void eval_head(const TwinModel& model, RowWork& w, int t) {
    if (w.head_evaluated[t]) return;
    dense_forward(model.heads[t], w.rep, w.head_logits[t]);
    w.head_probs[t] = softmax(w.head_logits[t]);
    w.head_evaluated[t] = true;
}

// Accumulates dL/dlogits of one head into parameter grads and grad_rep.
void head_backward(const TwinModel& model, const RowWork& w, int t,
                   const std::vector<double>& grad_logits, ModelGrads& grads,
                   std::vector<double>& grad_rep) {
    const Dense& h = model.heads[t];
    DenseGrad& hg = grads.heads[t];
    for (int r = 0; r < h.out; ++r) {
        const double go = grad_logits[r];
        hg.b[r] += go;
        double* wgr = hg.w.data() + static_cast<std::size_t>(r) * h.in;
        const double* wr = h.w.data() + static_cast<std::size_t>(r) * h.in;
        for (int c = 0; c < h.in; ++c) {
            wgr[c] += go * w.rep[c];
            grad_rep[c] += go * wr[c];
        }
    }
}

struct PenaltyTerms {
    double value = 0.0;
    // dPenalty/dE_rank per treatment head (only heads touched by an active
    // hinge get a nonzero entry).
    std::vector<double> grad_expected_rank;
};

PenaltyTerms penalty_for_sample(const TwinModel& model, RowWork& w, const std::vector<int>& t_order,
                                const std::vector<int>& out_rank) {
    const int n = model.config.n_treatments;
    PenaltyTerms terms;
    terms.grad_expected_rank.assign(n, 0.0);
    std::vector<double> expected(n, 0.0);
    for (int t = 0; t < n; ++t) {
        eval_head(model, w, t);
        double e = 0.0;
        for (int m = 0; m < model.config.n_outcomes; ++m)
            e += out_rank[m] * w.head_probs[t][m];
        expected[t] = e;
    }
    for (int r = 0; r + 1 < n; ++r) {
        const int lo = t_order[r], hi = t_order[r + 1];
        const double margin = expected[lo] - expected[hi];
        if (margin > 0.0) {
            terms.value += margin;
            terms.grad_expected_rank[lo] += 1.0;
            terms.grad_expected_rank[hi] -= 1.0;
        }
    }
    return terms;
}

// Full loss of one row: head MSE terms plus lambda * penalty. Accumulates
// gradients when grads != nullptr. Returns {data_loss, penalty}.
std::pair<double, double> row_loss(const TwinModel& model, const TwinRow& row,
                                   std::span<const double> u, const TrainConfig& cfg,
                                   const std::vector<int>& t_order, const std::vector<int>& out_rank,
                                   ModelGrads* grads, RowWork& w) {
    eval_blocks(model, row.z, u, w);
    eval_head(model, w, row.x);
    eval_head(model, w, row.x_star);

    std::vector<double> gp_y, gp_ys;
    const double loss_y = head_loss(cfg.loss, w.head_probs[row.x], row.y, grads ? &gp_y : nullptr);
    const double loss_ys =
        head_loss(cfg.loss, w.head_probs[row.x_star], row.y_star, grads ? &gp_ys : nullptr);

    PenaltyTerms pen;
    const bool use_penalty = cfg.penalty == PenaltyKind::PairwiseHinge && cfg.lambda != 0.0;
    if (use_penalty) pen = penalty_for_sample(model, w, t_order, out_rank);

    if (grads) {
        std::vector<double> grad_rep(w.rep.size(), 0.0);
        // Data terms. When x and x_star index the same head twice the
        // contributions just add; the dataset invariant forbids that anyway.
        head_backward(model, w, row.x, softmax_backward(w.head_probs[row.x], gp_y), *grads, grad_rep);
        head_backward(model, w, row.x_star, softmax_backward(w.head_probs[row.x_star], gp_ys), *grads,
                      grad_rep);
        if (use_penalty) {
            for (int t = 0; t < model.config.n_treatments; ++t) {
                if (pen.grad_expected_rank[t] == 0.0) continue;
                std::vector<double> grad_probs(model.config.n_outcomes, 0.0);
                for (int m = 0; m < model.config.n_outcomes; ++m)
                    grad_probs[m] = cfg.lambda * pen.grad_expected_rank[t] * out_rank[m];
                head_backward(model, w, t, softmax_backward(w.head_probs[t], grad_probs), *grads,
                              grad_rep);
            }
        }
        // Split grad_rep back into the two blocks.
        const int zr = static_cast<int>(w.rz.size());
        std::vector<double> grad_rz(grad_rep.begin(), grad_rep.begin() + zr);
        std::vector<double> grad_ru(grad_rep.begin() + zr, grad_rep.end());
        mlp_backward(model.z_block, w.zc, std::move(grad_rz), grads->z_block, nullptr);
        mlp_backward(model.u_block, w.uc, std::move(grad_ru), grads->u_block, nullptr);
    }
    return {loss_y + loss_ys, pen.value};
}

void sgd_step(TwinModel& model, const ModelGrads& grads, double scale) {
    auto apply = [scale](Dense& d, const DenseGrad& g) {
        for (std::size_t i = 0; i < d.w.size(); ++i) d.w[i] -= scale * g.w[i];
        for (std::size_t i = 0; i < d.b.size(); ++i) d.b[i] -= scale * g.b[i];
    };
    for (std::size_t l = 0; l < model.z_block.layers.size(); ++l)
        apply(model.z_block.layers[l], grads.z_block.layers[l]);
    for (std::size_t l = 0; l < model.u_block.layers.size(); ++l)
        apply(model.u_block.layers[l], grads.u_block.layers[l]);
    for (std::size_t t = 0; t < model.heads.size(); ++t) apply(model.heads[t], grads.heads[t]);
}

void zero(ModelGrads& g) {
    auto z = [](DenseGrad& d) {
        std::fill(d.w.begin(), d.w.end(), 0.0);
        std::fill(d.b.begin(), d.b.end(), 0.0);
    };
    for (auto& l : g.z_block.layers) z(l);
    for (auto& l : g.u_block.layers) z(l);
    for (auto& h : g.heads) z(h);
}

}  // namespace

void TwinDataset::check() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const TwinRow& r = rows[i];
        if (r.x == r.x_star)
            throw ParseError("row " + std::to_string(i) + ": x == x_star");
        if (r.x < 0 || r.x >= n_treatments || r.x_star < 0 || r.x_star >= n_treatments ||
            r.y < 0 || r.y >= n_outcomes || r.y_star < 0 || r.y_star >= n_outcomes ||
            static_cast<int>(r.z.size()) != z_dim)
            throw ParseError("row " + std::to_string(i) + ": category or covariate out of range");
    }
}

TwinDataset make_labels(const ObsData& data, const CounterfactualOracle& oracle) {
    TwinDataset out;
    out.n_treatments = data.n_treatments;
    out.n_outcomes = data.n_outcomes;
    out.z_dim = data.z_dim;
    for (std::size_t r = 0; r < data.x.size(); ++r) {
        for (int xs = 0; xs < data.n_treatments; ++xs) {
            if (xs == data.x[r]) continue;
            out.rows.push_back({data.x[r], xs, data.z[r], data.y[r], oracle(r, xs)});
        }
    }
    out.check();
    return out;
}

TwinDataset make_labels_matching(const ObsData& data, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> strata(data.n_treatments);
    for (std::size_t r = 0; r < data.x.size(); ++r) strata[data.x[r]].push_back(r);
    for (int t = 0; t < data.n_treatments; ++t)
        if (strata[t].empty())
            throw NoMatch("no rows with treatment " + std::to_string(t) +
                          "; overlap assumption fails");

    SplitMix64 rng(derive_seed(seed, 0x3a7c));
    TwinDataset out;
    out.n_treatments = data.n_treatments;
    out.n_outcomes = data.n_outcomes;
    out.z_dim = data.z_dim;
    std::vector<std::size_t> ties;
    for (std::size_t r = 0; r < data.x.size(); ++r) {
        for (int xs = 0; xs < data.n_treatments; ++xs) {
            if (xs == data.x[r]) continue;
            double best = std::numeric_limits<double>::infinity();
            ties.clear();
            for (std::size_t cand : strata[xs]) {
                double dist = 0.0;
                for (int d = 0; d < data.z_dim; ++d) {
                    const double diff = data.z[r][d] - data.z[cand][d];
                    dist += diff * diff;
                }
                if (dist < best) {
                    best = dist;
                    ties.clear();
                }
                if (dist == best) ties.push_back(cand);
            }
            const std::size_t pick = ties[rng.next_below(ties.size())];
            out.rows.push_back({data.x[r], xs, data.z[r], data.y[r], data.y[pick]});
        }
    }
    out.check();
    return out;
}

int TwinModel::rep_dim() const {
    const int zr = z_block.layers.empty() ? config.z_dim : z_block.layers.back().out;
    const int ur = u_block.layers.empty() ? config.noise_dim : u_block.layers.back().out;
    return zr + ur;
}

TwinModel TwinModel::init(const ModelConfig& config, std::uint64_t seed) {
    SplitMix64 rng(derive_seed(seed, 0x1217));
    auto init_dense = [&](int in, int out) {
        Dense d{in, out, std::vector<double>(static_cast<std::size_t>(in) * out),
                std::vector<double>(out, 0.0)};
        const double scale = std::sqrt(2.0 / std::max(1, in));
        for (double& v : d.w) v = scale * draw_standard_normal(rng);
        return d;
    };
    auto init_block = [&](int in, const std::vector<int>& widths) {
        Mlp m;
        int cur = in;
        for (int w : widths) {
            m.layers.push_back(init_dense(cur, w));
            cur = w;
        }
        return m;
    };
    TwinModel model;
    model.config = config;
    model.z_block = init_block(config.z_dim, config.z_widths);
    model.u_block = init_block(config.noise_dim, config.u_widths);
    for (int t = 0; t < config.n_treatments; ++t)
        model.heads.push_back(init_dense(model.rep_dim(), config.n_outcomes));
    return model;
}

std::pair<std::vector<double>, std::vector<double>> forward(const TwinModel& model, int x, int x_star,
                                                            std::span<const double> z,
                                                            std::span<const double> u) {
    if (static_cast<int>(z.size()) != model.config.z_dim ||
        static_cast<int>(u.size()) != model.config.noise_dim)
        throw ParseError("forward: input dimension mismatch");
    RowWork w;
    eval_blocks(model, z, u, w);
    eval_head(model, w, x);
    eval_head(model, w, x_star);
    return {w.head_probs[x], w.head_probs[x_star]};
}

std::vector<double> reparam_noise(const TwinModel& model, std::span<const double> sample) {
    std::vector<double> out;
    mlp_forward(model.u_block, sample, out, nullptr);
    return out;
}

std::vector<double> draw_noise(NoiseKind kind, int dim, SplitMix64& rng) {
    std::vector<double> u(dim);
    for (double& v : u)
        v = kind == NoiseKind::StandardNormal ? draw_standard_normal(rng) : rng.next_double();
    return u;
}

TrainResult train(const TwinDataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg) {
    if (data.rows.empty()) throw ParseError("train: empty dataset");
    data.check();

    TwinModel model = TwinModel::init(mcfg, tcfg.seed);
    const std::vector<int> t_order =
        tcfg.treatment_order.empty() ? natural_order(mcfg.n_treatments) : tcfg.treatment_order;
    const std::vector<int> out_rank =
        ranks_of(tcfg.outcome_order.empty() ? natural_order(mcfg.n_outcomes) : tcfg.outcome_order);

    // One fixed noise draw per row: rows keep their latent identity across
    // epochs, so the network can carve the noise space into branch regions.
    std::vector<std::vector<double>> noise(data.rows.size());
    {
        SplitMix64 rng(derive_seed(tcfg.seed, 0x401));
        for (auto& u : noise) u = draw_noise(tcfg.noise, mcfg.noise_dim, rng);
    }

    std::vector<std::uint32_t> order(data.rows.size());
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 shuffle_rng(derive_seed(tcfg.seed, 0x5u));

    ModelGrads grads = make_grads(model);
    RowWork work;
    TrainResult result;
    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        fisher_yates(order, shuffle_rng);
        double epoch_loss = 0.0, epoch_penalty = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += tcfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + tcfg.batch_size);
            zero(grads);
            double batch_loss = 0.0;
            for (std::size_t k = begin; k < end; ++k) {
                const auto [data_loss, pen] = row_loss(model, data.rows[order[k]], noise[order[k]],
                                                       tcfg, t_order, out_rank, &grads, work);
                batch_loss += data_loss + tcfg.lambda * pen;
                epoch_loss += data_loss;
                epoch_penalty += pen;
            }
            if (!std::isfinite(batch_loss))
                throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(begin / tcfg.batch_size));
            sgd_step(model, grads, tcfg.learning_rate / static_cast<double>(end - begin));
        }
        result.curve.push_back({epoch_loss / static_cast<double>(data.rows.size()),
                                epoch_penalty / static_cast<double>(data.rows.size())});
    }
    result.model = std::move(model);
    return result;
}

double penalty(const TwinModel& model, const std::vector<std::vector<double>>& zs,
               const std::vector<std::vector<double>>& us, const std::vector<int>& treatment_order,
               const std::vector<int>& outcome_order) {
    const std::vector<int> t_order =
        treatment_order.empty() ? natural_order(model.config.n_treatments) : treatment_order;
    const std::vector<int> out_rank =
        ranks_of(outcome_order.empty() ? natural_order(model.config.n_outcomes) : outcome_order);
    double total = 0.0;
    RowWork w;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        eval_blocks(model, zs[i], us[i], w);
        total += penalty_for_sample(model, w, t_order, out_rank).value;
    }
    return total;
}

namespace {

double batch_objective(const TwinModel& model, const TwinDataset& batch,
                       const std::vector<std::vector<double>>& noise, const TrainConfig& cfg,
                       const std::vector<int>& t_order, const std::vector<int>& out_rank,
                       ModelGrads* grads) {
    RowWork w;
    double total = 0.0;
    for (std::size_t i = 0; i < batch.rows.size(); ++i) {
        const auto [data_loss, pen] =
            row_loss(model, batch.rows[i], noise[i], cfg, t_order, out_rank, grads, w);
        total += data_loss + cfg.lambda * pen;
    }
    return total / static_cast<double>(batch.rows.size());
}

std::vector<double*> parameters(TwinModel& model) {
    std::vector<double*> out;
    auto add = [&out](Dense& d) {
        for (double& v : d.w) out.push_back(&v);
        for (double& v : d.b) out.push_back(&v);
    };
    for (auto& l : model.z_block.layers) add(l);
    for (auto& l : model.u_block.layers) add(l);
    for (auto& h : model.heads) add(h);
    return out;
}

std::vector<double> flatten(const ModelGrads& g) {
    std::vector<double> out;
    auto add = [&out](const DenseGrad& d) {
        out.insert(out.end(), d.w.begin(), d.w.end());
        out.insert(out.end(), d.b.begin(), d.b.end());
    };
    for (const auto& l : g.z_block.layers) add(l);
    for (const auto& l : g.u_block.layers) add(l);
    for (const auto& h : g.heads) add(h);
    return out;
}

}  // namespace

double grad_check(const TwinModel& model, const TwinDataset& batch,
                  const std::vector<std::vector<double>>& noise, const TrainConfig& cfg, double eps) {
    const std::vector<int> t_order =
        cfg.treatment_order.empty() ? natural_order(model.config.n_treatments) : cfg.treatment_order;
    const std::vector<int> out_rank =
        ranks_of(cfg.outcome_order.empty() ? natural_order(model.config.n_outcomes) : cfg.outcome_order);

    TwinModel probe = model;  // perturbed in place for the finite differences
    ModelGrads grads = make_grads(probe);
    zero(grads);
    const double scale = 1.0 / static_cast<double>(batch.rows.size());
    {
        RowWork w;
        for (std::size_t i = 0; i < batch.rows.size(); ++i)
            row_loss(probe, batch.rows[i], noise[i], cfg, t_order, out_rank, &grads, w);
    }
    const std::vector<double> analytic_raw = flatten(grads);

    std::vector<double*> params = parameters(probe);
    double max_rel = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const double saved = *params[p];
        *params[p] = saved + eps;
        const double up = batch_objective(probe, batch, noise, cfg, t_order, out_rank, nullptr);
        *params[p] = saved - eps;
        const double down = batch_objective(probe, batch, noise, cfg, t_order, out_rank, nullptr);
        *params[p] = saved;
        const double fd = (up - down) / (2.0 * eps);
        const double an = analytic_raw[p] * scale;
        const double mag = std::max(std::abs(fd), std::abs(an));
        if (mag < 1e-7) continue;  // both effectively zero
        max_rel = std::max(max_rel, std::abs(fd - an) / mag);
    }
    return max_rel;
}

int invert_ranked_cdf(const std::vector<double>& probs, const std::vector<int>& outcome_order,
                      double r) {
    const std::vector<int> order =
        outcome_order.empty() ? natural_order(static_cast<int>(probs.size())) : outcome_order;
    double acc = 0.0;
    int last_positive = order[0];
    for (int cat : order) {
        if (probs[cat] > 0.0) last_positive = cat;
        acc += probs[cat];
        if (r < acc) return cat;
    }
    return last_positive;
}

namespace {

// Draws the coupled pair of outcomes for one (z, u) sample.
struct WorldDraw {
    int y_factual;
    int y_cf;
};

WorldDraw draw_worlds(const TwinModel& model, int x_f, int x_cf, std::span<const double> z,
                      std::span<const double> u, const std::vector<int>& outcome_order, double r,
                      RowWork& w) {
    eval_blocks(model, z, u, w);
    eval_head(model, w, x_f);
    eval_head(model, w, x_cf);
    return {invert_ranked_cdf(w.head_probs[x_f], outcome_order, r),
            invert_ranked_cdf(w.head_probs[x_cf], outcome_order, r)};
}

}  // namespace

Estimate model_query(const TwinModel& model, const std::vector<std::vector<double>>& zs,
                     const ModelQuery& q, const std::vector<int>& outcome_order, std::uint64_t n,
                     std::uint64_t seed) {
    if (zs.empty()) throw NoMatch("model_query: no covariate rows supplied");
    OutcomeEvent target{"", q.target_op, q.target_value, outcome_order};

    SplitMix64 rng(derive_seed(seed, 0x71));
    RowWork w;
    std::uint64_t accepted = 0, hits = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto& z = zs[rng.next_below(zs.size())];
        const std::vector<double> u = draw_noise(NoiseKind::StandardNormal, model.config.noise_dim, rng);
        const double r = rng.next_double();
        const WorldDraw d =
            draw_worlds(model, q.factual_treatment, q.cf_treatment, z, u, outcome_order, r, w);
        const bool evidence_ok = !q.evidence_y || d.y_factual == *q.evidence_y;
        if (q.joint) {
            ++accepted;
            if (evidence_ok && target.matches(d.y_cf)) ++hits;
        } else {
            if (!evidence_ok) continue;
            ++accepted;
            if (target.matches(d.y_cf)) ++hits;
        }
    }
    if (accepted == 0)
        throw NoAcceptedSamples("no draws matched the evidence after " + std::to_string(n) + " draws");
    Estimate e;
    e.value = static_cast<double>(hits) / static_cast<double>(accepted);
    e.stderr_value = std::sqrt(e.value * (1.0 - e.value) / static_cast<double>(accepted));
    e.n_effective = accepted;
    return e;
}

int predict_factual(const TwinModel& model, int x, std::span<const double> z, std::uint64_t n,
                    std::uint64_t seed) {
    SplitMix64 rng(derive_seed(seed, 0x90));
    RowWork w;
    std::vector<double> acc(model.config.n_outcomes, 0.0);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::vector<double> u = draw_noise(NoiseKind::StandardNormal, model.config.noise_dim, rng);
        eval_blocks(model, z, u, w);
        eval_head(model, w, x);
        for (int m = 0; m < model.config.n_outcomes; ++m) acc[m] += w.head_probs[x][m];
    }
    return static_cast<int>(std::max_element(acc.begin(), acc.end()) - acc.begin());
}

int predict_counterfactual(const TwinModel& model, int x, int y, int x_star, std::span<const double> z,
                           const std::vector<int>& outcome_order, std::uint64_t n, std::uint64_t seed) {
    SplitMix64 rng(derive_seed(seed, 0x91));
    RowWork w;
    std::vector<double> accepted_acc(model.config.n_outcomes, 0.0);
    std::vector<double> marginal_acc(model.config.n_outcomes, 0.0);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::vector<double> u = draw_noise(NoiseKind::StandardNormal, model.config.noise_dim, rng);
        const double r = rng.next_double();
        const WorldDraw d = draw_worlds(model, x, x_star, z, u, outcome_order, r, w);
        ++marginal_acc[d.y_cf];
        if (d.y_factual == y) ++accepted_acc[d.y_cf];
    }
    const auto& acc = std::accumulate(accepted_acc.begin(), accepted_acc.end(), 0.0) > 0.0
                          ? accepted_acc
                          : marginal_acc;
    return static_cast<int>(std::max_element(acc.begin(), acc.end()) - acc.begin());
}

std::vector<std::vector<double>> induced_latent_frequencies(const TwinModel& model,
                                                            const std::vector<std::vector<double>>& zs,
                                                            std::uint64_t n, std::uint64_t seed) {
    const int m = model.config.n_outcomes;
    std::vector<std::vector<double>> freq(m, std::vector<double>(m, 0.0));
    SplitMix64 rng(derive_seed(seed, 0x92));
    RowWork w;
    const std::vector<double> empty_z;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto& z = zs.empty() ? empty_z : zs[rng.next_below(zs.size())];
        const std::vector<double> u = draw_noise(NoiseKind::StandardNormal, model.config.noise_dim, rng);
        const double r = rng.next_double();
        const WorldDraw d = draw_worlds(model, 0, 1, z, u, {}, r, w);
        freq[d.y_factual][d.y_cf] += 1.0;
    }
    for (auto& row : freq)
        for (double& v : row) v /= static_cast<double>(n);
    return freq;
}

double macro_f1(const std::vector<int>& truth, const std::vector<int>& predicted, int n_categories) {
    if (truth.size() != predicted.size()) throw ParseError("macro_f1: length mismatch");
    double sum = 0.0;
    for (int c = 0; c < n_categories; ++c) {
        double tp = 0.0, fp = 0.0, fn = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool t = truth[i] == c, p = predicted[i] == c;
            tp += t && p;
            fp += !t && p;
            fn += t && !p;
        }
        const double denom = 2.0 * tp + fp + fn;
        sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;
    }
    return sum / n_categories;
}

}  // namespace twincf
