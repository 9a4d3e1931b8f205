#include "twincf/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "twincf/error.hpp"
#include "twincf/parallel.hpp"
#include "twincf/rng.hpp"

namespace twincf {

namespace {

// Gaussian draw via Box-Muller on two SplitMix64 uniforms; fully seeded.
double draw_normal(SplitMix64& rng) {
    double u1 = rng.next_double();
    while (u1 == 0.0) u1 = rng.next_double();
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

void check_q(const std::array<double, 3>& q) {
    double sum = 0.0;
    for (double p : q) {
        if (!(p >= 0.0)) throw BadDistribution("negative latent probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw BadDistribution("latent distribution q does not sum to 1");
}

std::optional<double> safe_ratio(double num, double den) {
    if (den <= 0.0) return std::nullopt;
    return num / den;
}

}  // namespace

int Dataset::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    throw ParseError("dataset has no column '" + name + "'");
}

ScmSpec encode_unconfounded(const std::array<double, 3>& q, double px1) {
    ScmSpec s;
    s.variables = {{"X", VarKind::Observed, 2},
                   {"Y", VarKind::Observed, 2},
                   {"U_X", VarKind::Latent, 2},
                   {"U_Y", VarKind::Latent, 3}};
    s.latents = {{"U_X", {1.0 - px1, px1}}, {"U_Y", {q[0], q[1], q[2]}}};
    // Y given (X, U_Y), last parent fastest-varying: branches X, 0, 1.
    s.mechanisms = {{"X", {"U_X"}, {0, 1}}, {"Y", {"X", "U_Y"}, {0, 0, 1, 1, 0, 1}}};
    return s;
}

ScmSpec encode_confounded(const std::array<double, 3>& q, double pz1, double pux1) {
    ScmSpec s;
    s.variables = {{"Z", VarKind::Observed, 2},  {"X", VarKind::Observed, 2},
                   {"Y", VarKind::Observed, 2},  {"U_Z", VarKind::Latent, 2},
                   {"U_X", VarKind::Latent, 2},  {"U_Y", VarKind::Latent, 3}};
    s.latents = {{"U_Z", {1.0 - pz1, pz1}}, {"U_X", {1.0 - pux1, pux1}}, {"U_Y", {q[0], q[1], q[2]}}};
    // X = U_x xor Z with parents (Z, U_X); Y branches X*Z / 0 / 1 with
    // parents (X, Z, U_Y).
    std::vector<int> y_table;
    for (int x = 0; x < 2; ++x)
        for (int z = 0; z < 2; ++z)
            for (int u = 0; u < 3; ++u) y_table.push_back(u == 0 ? x * z : (u == 1 ? 0 : 1));
    s.mechanisms = {{"Z", {"U_Z"}, {0, 1}},
                    {"X", {"Z", "U_X"}, {0, 1, 1, 0}},
                    {"Y", {"X", "Z", "U_Y"}, y_table}};
    return s;
}

int credit7_outcome(int x, int z, int u_y) {
    // step(t) is the Heaviside step with step(0) = 1.
    const auto step = [](int t) { return t >= 0 ? 1 : 0; };
    int y = 0;
    switch (u_y) {
        case 0: y = x + z; break;
        case 1: y = 0; break;
        case 2: y = x * z; break;
        case 3: y = 2; break;
        case 4: y = 1; break;
        case 5: y = step(x - 1); break;
        case 6: y = 2 * step(x - 1); break;
        default: throw ParseError("credit7 latent out of range");
    }
    return std::min(y, 2);
}

ScmSpec encode_credit7() {
    ScmSpec s;
    s.variables = {{"X", VarKind::Observed, 3}, {"Z", VarKind::Observed, 3},
                   {"Y", VarKind::Observed, 3}, {"U_X", VarKind::Latent, 3},
                   {"U_Z", VarKind::Latent, 3}, {"U_Y", VarKind::Latent, 7}};
    const std::vector<double> third(3, 1.0 / 3.0);
    const std::vector<double> seventh(7, 1.0 / 7.0);
    s.latents = {{"U_X", third}, {"U_Z", third}, {"U_Y", seventh}};
    std::vector<int> y_table;
    for (int x = 0; x < 3; ++x)
        for (int z = 0; z < 3; ++z)
            for (int u = 0; u < 7; ++u) y_table.push_back(credit7_outcome(x, z, u));
    s.mechanisms = {{"X", {"U_X"}, {0, 1, 2}},
                    {"Z", {"U_Z"}, {0, 1, 2}},
                    {"Y", {"X", "Z", "U_Y"}, y_table}};
    return s;
}

double ist_sigmoid(int x, int sex, int age, int consc, double u_y) {
    const double g = x + sex + 0.2 * (consc - 1) + 0.5 * x * sex * age + u_y;
    return 1.0 / (1.0 + std::exp(-g));
}

int ist_outcome(int x, int sex, int age, int consc, double u_y) {
    return ist_sigmoid(x, sex, age, consc, u_y) > 0.5 ? 1 : 0;
}

GeneratedData gen_unconfounded(const std::array<double, 3>& q, double px1, std::uint64_t n,
                               std::uint64_t seed) {
    check_q(q);
    GeneratedData out;
    out.dataset.columns = {"X", "Y"};
    out.sidecar.columns = {"U_X", "U_Y"};
    out.dataset.rows.resize(n);
    out.sidecar.rows.resize(n);
    const std::array<double, 2> px{1.0 - px1, px1};
    for_blocks(n, kMcBlockSize, Exec::Parallel, [&](std::uint64_t b, std::uint64_t lo, std::uint64_t hi) {
        SplitMix64 rng(derive_seed(seed, b));
        for (std::uint64_t r = lo; r < hi; ++r) {
            const int x = rng.draw_categorical(px);
            const int u = rng.draw_categorical(q);
            const int y = u == 0 ? x : (u == 1 ? 0 : 1);
            out.dataset.rows[r] = {x, y};
            out.sidecar.rows[r] = {static_cast<double>(x), static_cast<double>(u)};
        }
    });
    out.analytic.pn = safe_ratio(q[0], q[2] + q[0]);
    out.analytic.ps = safe_ratio(q[0], q[1] + q[0]);
    out.analytic.pns = q[0];
    out.scm_encoding = encode_unconfounded(q, px1);
    out.treatment = "X";
    out.outcome = "Y";
    return out;
}

GeneratedData gen_confounded(const std::array<double, 3>& q, double pz1, std::uint64_t n,
                             std::uint64_t seed) {
    check_q(q);
    GeneratedData out;
    out.dataset.columns = {"X", "Z", "Y"};
    out.sidecar.columns = {"U_Z", "U_X", "U_Y"};
    out.dataset.rows.resize(n);
    out.sidecar.rows.resize(n);
    const std::array<double, 2> pz{1.0 - pz1, pz1};
    const std::array<double, 2> pux{0.5, 0.5};
    for_blocks(n, kMcBlockSize, Exec::Parallel, [&](std::uint64_t b, std::uint64_t lo, std::uint64_t hi) {
        SplitMix64 rng(derive_seed(seed, b));
        for (std::uint64_t r = lo; r < hi; ++r) {
            const int z = rng.draw_categorical(pz);
            const int ux = rng.draw_categorical(pux);
            const int x = ux ^ z;
            const int u = rng.draw_categorical(q);
            const int y = u == 0 ? x * z : (u == 1 ? 0 : 1);
            out.dataset.rows[r] = {x, z, y};
            out.sidecar.rows[r] = {static_cast<double>(z), static_cast<double>(ux),
                                   static_cast<double>(u)};
        }
    });
    out.analytic.pn = safe_ratio(q[0] * pz1, q[2] + q[0] * pz1);
    out.analytic.ps = safe_ratio(q[0] * pz1, q[1] + q[0]);
    out.analytic.pns = q[0] * pz1;
    out.scm_encoding = encode_confounded(q, pz1);
    out.treatment = "X";
    out.outcome = "Y";
    out.covariates = {"Z"};
    return out;
}

GeneratedData gen_credit7(std::uint64_t n, std::uint64_t seed) {
    GeneratedData out;
    out.dataset.columns = {"X", "Z", "Y"};
    out.sidecar.columns = {"U_X", "U_Z", "U_Y"};
    out.dataset.rows.resize(n);
    out.sidecar.rows.resize(n);
    const std::vector<double> third(3, 1.0 / 3.0);
    const std::vector<double> seventh(7, 1.0 / 7.0);
    for_blocks(n, kMcBlockSize, Exec::Parallel, [&](std::uint64_t b, std::uint64_t lo, std::uint64_t hi) {
        SplitMix64 rng(derive_seed(seed, b));
        for (std::uint64_t r = lo; r < hi; ++r) {
            const int x = rng.draw_categorical(third);
            const int z = rng.draw_categorical(third);
            const int u = rng.draw_categorical(seventh);
            out.dataset.rows[r] = {x, z, credit7_outcome(x, z, u)};
            out.sidecar.rows[r] = {static_cast<double>(x), static_cast<double>(z),
                                   static_cast<double>(u)};
        }
    });
    out.scm_encoding = encode_credit7();
    out.treatment = "X";
    out.outcome = "Y";
    out.covariates = {"Z"};
    return out;
}

GeneratedData gen_ist_logistic(std::uint64_t n, std::uint64_t seed) {
    GeneratedData out;
    out.dataset.columns = {"X", "SEX", "AGE", "CONSC", "Y"};
    out.dataset.aux_columns = {"SIGMOID"};
    out.sidecar.columns = {"U_Y"};
    out.dataset.rows.resize(n);
    out.dataset.aux_rows.resize(n);
    out.sidecar.rows.resize(n);
    const std::vector<double> third(3, 1.0 / 3.0);
    const std::array<double, 2> half{0.5, 0.5};
    for_blocks(n, kMcBlockSize, Exec::Parallel, [&](std::uint64_t b, std::uint64_t lo, std::uint64_t hi) {
        SplitMix64 rng(derive_seed(seed, b));
        for (std::uint64_t r = lo; r < hi; ++r) {
            const int x = rng.draw_categorical(third);
            const int sex = rng.draw_categorical(half);
            const int age = rng.draw_categorical(half);
            const int consc = rng.draw_categorical(third);
            const double uy = draw_normal(rng);
            out.dataset.rows[r] = {x, sex, age, consc, ist_outcome(x, sex, age, consc, uy)};
            out.dataset.aux_rows[r] = {ist_sigmoid(x, sex, age, consc, uy)};
            out.sidecar.rows[r] = {uy};
        }
    });
    out.treatment = "X";
    out.outcome = "Y";
    out.covariates = {"SEX", "AGE", "CONSC"};
    return out;
}

}  // namespace twincf
