#include "twincf/json_io.hpp"

#include <fstream>

#include "twincf/error.hpp"

namespace twincf {

namespace {

Assignment assignment_from_json(const Json& j) {
    Assignment a;
    for (auto it = j.begin(); it != j.end(); ++it) a[it.key()] = it.value().get<int>();
    return a;
}

Json assignment_to_json(const Assignment& a) {
    Json j = Json::object();
    for (const auto& [k, v] : a) j[k] = v;
    return j;
}

EventOp op_from_string(const std::string& s) {
    if (s == "eq") return EventOp::Eq;
    if (s == "ge") return EventOp::Ge;
    if (s == "le") return EventOp::Le;
    throw ParseError("unknown event op '" + s + "'");
}

std::string op_to_string(EventOp op) {
    switch (op) {
        case EventOp::Eq: return "eq";
        case EventOp::Ge: return "ge";
        case EventOp::Le: return "le";
    }
    return "eq";
}

Json dense_to_json(const Dense& d) {
    return Json{{"in", d.in}, {"out", d.out}, {"w", d.w}, {"b", d.b}};
}

Dense dense_from_json(const Json& j) {
    Dense d;
    d.in = j.at("in").get<int>();
    d.out = j.at("out").get<int>();
    d.w = j.at("w").get<std::vector<double>>();
    d.b = j.at("b").get<std::vector<double>>();
    if (d.w.size() != static_cast<std::size_t>(d.in) * d.out ||
        d.b.size() != static_cast<std::size_t>(d.out))
        throw ParseError("dense layer shape mismatch");
    return d;
}

Json mlp_to_json(const Mlp& m) {
    Json j = Json::array();
    for (const auto& l : m.layers) j.push_back(dense_to_json(l));
    return j;
}

Mlp mlp_from_json(const Json& j) {
    Mlp m;
    for (const auto& l : j) m.layers.push_back(dense_from_json(l));
    return m;
}

}  // namespace

ScmSpec scm_spec_from_json(const Json& j) {
    ScmSpec spec;
    for (const auto& v : j.at("variables")) {
        VariableDecl decl;
        decl.name = v.at("name").get<std::string>();
        const std::string kind = v.at("kind").get<std::string>();
        if (kind == "observed")
            decl.kind = VarKind::Observed;
        else if (kind == "latent")
            decl.kind = VarKind::Latent;
        else
            throw ParseError("unknown variable kind '" + kind + "'");
        decl.cardinality = v.at("cardinality").get<int>();
        spec.variables.push_back(std::move(decl));
    }
    for (const auto& l : j.at("latents"))
        spec.latents.push_back({l.at("variable").get<std::string>(),
                                l.at("probs").get<std::vector<double>>()});
    for (const auto& m : j.at("mechanisms"))
        spec.mechanisms.push_back({m.at("child").get<std::string>(),
                                   m.at("parents").get<std::vector<std::string>>(),
                                   m.at("table").get<std::vector<int>>()});
    return spec;
}

Json scm_spec_to_json(const ScmSpec& spec) {
    Json j;
    j["variables"] = Json::array();
    for (const auto& v : spec.variables)
        j["variables"].push_back({{"name", v.name},
                                  {"kind", v.kind == VarKind::Observed ? "observed" : "latent"},
                                  {"cardinality", v.cardinality}});
    j["latents"] = Json::array();
    for (const auto& l : spec.latents)
        j["latents"].push_back({{"variable", l.variable}, {"probs", l.probs}});
    j["mechanisms"] = Json::array();
    for (const auto& m : spec.mechanisms)
        j["mechanisms"].push_back({{"child", m.child}, {"parents", m.parents}, {"table", m.table}});
    return j;
}

CounterfactualQuery query_from_json(const Json& j) {
    CounterfactualQuery q;
    const Json& t = j.at("target");
    q.target.var = t.at("var").get<std::string>();
    const Json& e = t.at("event");
    q.target.op = op_from_string(e.at("op").get<std::string>());
    q.target.value = e.at("value").get<int>();
    if (e.contains("outcome_order")) q.target.outcome_order = e["outcome_order"].get<std::vector<int>>();
    if (j.contains("evidence")) q.evidence = assignment_from_json(j["evidence"]);
    if (j.contains("factual_do")) q.factual_do = assignment_from_json(j["factual_do"]);
    q.cf_do = assignment_from_json(j.at("cf_do"));
    return q;
}

Json query_to_json(const CounterfactualQuery& q) {
    Json event{{"op", op_to_string(q.target.op)}, {"value", q.target.value}};
    if (!q.target.outcome_order.empty()) event["outcome_order"] = q.target.outcome_order;
    return Json{{"target", Json{{"var", q.target.var}, {"event", event}}},
                {"evidence", assignment_to_json(q.evidence)},
                {"factual_do", assignment_to_json(q.factual_do)},
                {"cf_do", assignment_to_json(q.cf_do)}};
}

NamedOrdering ordering_from_json(const Json& j) {
    NamedOrdering ord;
    ord.treatment = j.at("treatment").get<std::string>();
    ord.outcome = j.at("outcome").get<std::string>();
    ord.spec.treatment_order = j.at("treatment_order").get<std::vector<int>>();
    ord.spec.outcome_order = j.at("outcome_order").get<std::vector<int>>();
    return ord;
}

Json ordering_to_json(const NamedOrdering& ord) {
    return Json{{"treatment", ord.treatment},
                {"outcome", ord.outcome},
                {"treatment_order", ord.spec.treatment_order},
                {"outcome_order", ord.spec.outcome_order}};
}

Json estimate_to_json(const Estimate& e) {
    return Json{{"estimate", e.value}, {"stderr", e.stderr_value}, {"n_effective", e.n_effective}};
}

Json poc_to_json(const PocResult& r) {
    return Json{{"pn", estimate_to_json(r.pn)},
                {"ps", estimate_to_json(r.ps)},
                {"pns", estimate_to_json(r.pns)}};
}

Json bench_row_to_json(const BenchRow& row) {
    return Json{{"query_id", row.query_id},   {"method", row.method},
                {"estimate", row.estimate},   {"stderr", row.stderr_value},
                {"n_accepted", row.n_accepted}, {"wall_ms", row.wall_ms}};
}

Json violation_to_json(const Violation& v) {
    const char* kind = "ordering";
    switch (v.kind) {
        case ViolationKind::Ordering: kind = "ordering"; break;
        case ViolationKind::Monotonicity: kind = "monotonicity"; break;
        case ViolationKind::Stability: kind = "stability"; break;
        case ViolationKind::InterventionalPremise: kind = "interventional-premise"; break;
    }
    Json j{{"kind", kind}, {"magnitude", v.magnitude}, {"detail", v.detail}};
    Json witness{{"i", v.i}, {"j", v.j}, {"h", v.h}, {"l", v.l}};
    if (!v.latent_witness.empty()) witness["u"] = v.latent_witness;
    j["witness"] = witness;
    return j;
}

Json model_to_json(const TwinModel& model) {
    Json config{{"n_treatments", model.config.n_treatments},
                {"n_outcomes", model.config.n_outcomes},
                {"z_dim", model.config.z_dim},
                {"noise_dim", model.config.noise_dim},
                {"z_widths", model.config.z_widths},
                {"u_widths", model.config.u_widths}};
    Json heads = Json::array();
    for (const auto& h : model.heads) heads.push_back(dense_to_json(h));
    return Json{{"config", config},
                {"z_block", mlp_to_json(model.z_block)},
                {"u_block", mlp_to_json(model.u_block)},
                {"heads", heads}};
}

TwinModel model_from_json(const Json& j) {
    TwinModel model;
    const Json& c = j.at("config");
    model.config.n_treatments = c.at("n_treatments").get<int>();
    model.config.n_outcomes = c.at("n_outcomes").get<int>();
    model.config.z_dim = c.at("z_dim").get<int>();
    model.config.noise_dim = c.at("noise_dim").get<int>();
    model.config.z_widths = c.at("z_widths").get<std::vector<int>>();
    model.config.u_widths = c.at("u_widths").get<std::vector<int>>();
    model.z_block = mlp_from_json(j.at("z_block"));
    model.u_block = mlp_from_json(j.at("u_block"));
    for (const auto& h : j.at("heads")) model.heads.push_back(dense_from_json(h));
    return model;
}

Json manifest_to_json(const GeneratedData& g, const std::string& kind, const Json& params) {
    Json j;
    j["kind"] = kind;
    j["params"] = params;
    j["treatment"] = g.treatment;
    j["outcome"] = g.outcome;
    j["covariates"] = g.covariates;
    Json poc;
    poc["pn"] = g.analytic.pn ? Json(*g.analytic.pn) : Json(nullptr);
    poc["ps"] = g.analytic.ps ? Json(*g.analytic.ps) : Json(nullptr);
    poc["pns"] = g.analytic.pns ? Json(*g.analytic.pns) : Json(nullptr);
    j["analytic_poc"] = poc;
    j["scm"] = g.scm_encoding ? scm_spec_to_json(*g.scm_encoding) : Json(nullptr);
    return j;
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError("cannot parse '" + path + "': " + e.what());
    }
    return j;
}

void save_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

Json cf_table_to_json(const CfTable& t) {
    Json cells = Json::array();
    for (const auto& row : t.cells) {
        Json jrow = Json::array();
        for (const auto& e : row) jrow.push_back(estimate_to_json(e));
        cells.push_back(jrow);
    }
    return Json{{"treatments", t.treatments}, {"cells", cells}, {"dominance", t.dominance}};
}

CfTable cf_table_from_json(const Json& j) {
    CfTable t;
    t.treatments = j.at("treatments").get<std::vector<int>>();
    for (const auto& jrow : j.at("cells")) {
        std::vector<Estimate> row;
        for (const auto& e : jrow)
            row.push_back({e.at("estimate").get<double>(), e.at("stderr").get<double>(),
                           e.at("n_effective").get<std::uint64_t>()});
        t.cells.push_back(std::move(row));
    }
    t.dominance = j.at("dominance").get<double>();
    return t;
}

Json residuals_to_json(const std::vector<ResidualMatrix>& residuals, const OrderingSpec& ord) {
    Json out = Json::array();
    for (const auto& rm : residuals) {
        Json cells = Json::array();
        for (const auto& row : rm.cells) {
            Json jrow = Json::array();
            for (const auto& e : row) jrow.push_back(estimate_to_json(e));
            cells.push_back(jrow);
        }
        out.push_back(Json{{"x_lo", rm.x_lo},
                           {"x_hi", rm.x_hi},
                           {"outcome_order", ord.outcome_order},
                           {"cells", cells}});
    }
    return out;
}

}  // namespace twincf
