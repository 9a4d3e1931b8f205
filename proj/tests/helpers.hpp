#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "twincf/rng.hpp"
#include "twincf/scm.hpp"

namespace twincf::testing {

// The four-branch binary model: Y = X / 0 / 1 / !X by U_Y branch, X a root
// coin with P(X=1) = px1.
inline ScmSpec eq2_spec(const std::array<double, 4>& q, double px1 = 0.5) {
    ScmSpec s;
    s.variables = {{"X", VarKind::Observed, 2},
                   {"Y", VarKind::Observed, 2},
                   {"U_X", VarKind::Latent, 2},
                   {"U_Y", VarKind::Latent, 4}};
    s.latents = {{"U_X", {1.0 - px1, px1}}, {"U_Y", {q[0], q[1], q[2], q[3]}}};
    // Y parents (X, U_Y), last parent fastest-varying: x=0 -> (0,0,1,1),
    // x=1 -> (1,0,1,0).
    s.mechanisms = {{"X", {"U_X"}, {0, 1}}, {"Y", {"X", "U_Y"}, {0, 0, 1, 1, 1, 0, 1, 0}}};
    return s;
}

inline Scm eq2_model(const std::array<double, 4>& q, double px1 = 0.5) {
    return Scm::validate(eq2_spec(q, px1));
}

inline std::vector<double> random_simplex(SplitMix64& rng, int k) {
    // Symmetric Dirichlet(1) via normalized exponentials.
    std::vector<double> p(k);
    double sum = 0.0;
    for (double& v : p) {
        double u = rng.next_double();
        while (u == 0.0) u = rng.next_double();
        sum += (v = -std::log(u));
    }
    for (double& v : p) v /= sum;
    // Exact renormalization so validation's 1e-12 gate holds.
    double s2 = 0.0;
    for (double v : p) s2 += v;
    p.back() += 1.0 - s2;
    return p;
}

// Random single-edge SCM X -> Y with a uniform-random mechanism table.
// Treatment cardinality 2..4, outcome 2..4, latent 2..6.
inline Scm random_xy_scm(std::uint64_t seed) {
    SplitMix64 rng(seed);
    const int n_treat = 2 + static_cast<int>(rng.next_below(3));
    const int n_out = 2 + static_cast<int>(rng.next_below(3));
    const int n_latent = 2 + static_cast<int>(rng.next_below(5));
    ScmSpec s;
    s.variables = {{"X", VarKind::Observed, n_treat},
                   {"Y", VarKind::Observed, n_out},
                   {"U_X", VarKind::Latent, n_treat},
                   {"U_Y", VarKind::Latent, n_latent}};
    s.latents = {{"U_X", random_simplex(rng, n_treat)}, {"U_Y", random_simplex(rng, n_latent)}};
    std::vector<int> x_table(n_treat);
    for (int i = 0; i < n_treat; ++i) x_table[i] = i;
    std::vector<int> y_table;
    for (int x = 0; x < n_treat; ++x)
        for (int u = 0; u < n_latent; ++u)
            y_table.push_back(static_cast<int>(rng.next_below(n_out)));
    s.mechanisms = {{"X", {"U_X"}, x_table}, {"Y", {"X", "U_Y"}, y_table}};
    return Scm::validate(s);
}

// Random monotone unconfounded binary SCM: every latent branch is one of
// {constant 0, constant 1, Y = X}.
inline Scm random_monotone_binary_scm(std::uint64_t seed) {
    SplitMix64 rng(seed);
    const int n_latent = 2 + static_cast<int>(rng.next_below(5));
    ScmSpec s;
    const double px1 = 0.1 + 0.8 * rng.next_double();
    s.variables = {{"X", VarKind::Observed, 2},
                   {"Y", VarKind::Observed, 2},
                   {"U_X", VarKind::Latent, 2},
                   {"U_Y", VarKind::Latent, n_latent}};
    s.latents = {{"U_X", {1.0 - px1, px1}}, {"U_Y", random_simplex(rng, n_latent)}};
    std::vector<int> lo(n_latent), hi(n_latent);
    for (int u = 0; u < n_latent; ++u) {
        switch (rng.next_below(3)) {
            case 0: lo[u] = 0; hi[u] = 0; break;  // constant 0
            case 1: lo[u] = 1; hi[u] = 1; break;  // constant 1
            default: lo[u] = 0; hi[u] = 1; break;  // Y = X
        }
    }
    std::vector<int> y_table(lo);
    y_table.insert(y_table.end(), hi.begin(), hi.end());
    s.mechanisms = {{"X", {"U_X"}, {0, 1}}, {"Y", {"X", "U_Y"}, y_table}};
    return Scm::validate(s);
}

// Random 4-node SCM: Z1 -> X, Z1 -> Y, X -> Y, W standalone; cardinalities
// 2..3, each observed variable with its own latent.
inline Scm random_4node_scm(std::uint64_t seed) {
    SplitMix64 rng(seed);
    auto card = [&rng]() { return 2 + static_cast<int>(rng.next_below(2)); };
    const int cz = card(), cx = card(), cy = card(), cw = card();
    const int uz = 2 + static_cast<int>(rng.next_below(3));
    const int ux = 2 + static_cast<int>(rng.next_below(3));
    const int uy = 2 + static_cast<int>(rng.next_below(3));
    const int uw = 2;
    ScmSpec s;
    s.variables = {{"Z1", VarKind::Observed, cz}, {"X", VarKind::Observed, cx},
                   {"Y", VarKind::Observed, cy},  {"W", VarKind::Observed, cw},
                   {"U_Z1", VarKind::Latent, uz}, {"U_X", VarKind::Latent, ux},
                   {"U_Y", VarKind::Latent, uy},  {"U_W", VarKind::Latent, uw}};
    s.latents = {{"U_Z1", random_simplex(rng, uz)},
                 {"U_X", random_simplex(rng, ux)},
                 {"U_Y", random_simplex(rng, uy)},
                 {"U_W", random_simplex(rng, uw)}};
    auto random_table = [&rng](std::uint64_t tuples, int out_card) {
        std::vector<int> t(tuples);
        for (auto& v : t) v = static_cast<int>(rng.next_below(out_card));
        return t;
    };
    s.mechanisms = {
        {"Z1", {"U_Z1"}, random_table(uz, cz)},
        {"X", {"Z1", "U_X"}, random_table(static_cast<std::uint64_t>(cz) * ux, cx)},
        {"Y", {"Z1", "X", "U_Y"}, random_table(static_cast<std::uint64_t>(cz) * cx * uy, cy)},
        {"W", {"U_W"}, random_table(uw, cw)},
    };
    return Scm::validate(s);
}

}  // namespace twincf::testing
