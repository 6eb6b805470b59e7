#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flowcredit/checks.hpp"
#include "flowcredit/flow.hpp"
#include "flowcredit/graph.hpp"
#include "flowcredit/sample.hpp"

namespace flowcredit {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Graph documents
//
// {"nodes": [{"id", "kind"?, "parents": [...], "function"?, "domain"?,
//             "is_noise"?}], "sink": "f"}
// function: {"type": "expr",     "text": "..."}
//           {"type": "linear",   "weights": [...], "bias"?}
//           {"type": "table",    "entries": [{"key": [...],
//                                 "value": <num|str> | "probs": [...]}],
//                                 "default"?}
//           {"type": "external", "command": "...", "timeout_ms"?}
// plus "noise": "additive" | "inverse_cdf" after noise augmentation.

namespace io_detail {

inline Value value_from_json(const json& j, const std::string& where) {
    if (j.is_number()) return Value(j.get<double>());
    if (j.is_boolean()) return Value(j.get<bool>() ? 1.0 : 0.0);
    if (j.is_string()) return Value::category(j.get<std::string>());
    fail(Errc::SchemaError, where + ": values must be numbers or strings");
}

inline json value_to_json(const Value& v) {
    if (v.is_category()) return json(v.label());
    return json(v.real());
}

inline const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) fail(Errc::SchemaError, where + ": missing '" + key + "'");
    return j.at(key);
}

inline FunctionSpec function_from_json(const json& j, const std::vector<std::string>& parents,
                                       const std::vector<std::string>& domain,
                                       const std::string& where) {
    if (!j.is_object()) fail(Errc::SchemaError, where + ": function must be an object");
    const std::string type = field(j, "type", where).get<std::string>();

    NoiseMode noise = NoiseMode::None;
    if (j.contains("noise")) {
        const std::string n = j.at("noise").get<std::string>();
        if (n == "additive")
            noise = NoiseMode::Additive;
        else if (n == "inverse_cdf")
            noise = NoiseMode::InverseCdf;
        else
            fail(Errc::SchemaError, where + ": unknown noise mode '" + n + "'");
    }
    // the trailing noise parent is not an argument of the base function
    std::vector<std::string> base_parents = parents;
    if (noise != NoiseMode::None) {
        if (base_parents.empty())
            fail(Errc::SchemaError, where + ": noise mode set but there is no noise parent");
        base_parents.pop_back();
    }

    FunctionSpec fn;
    if (type == "expr") {
        fn = parse_expression(field(j, "text", where).get<std::string>(), base_parents);
    } else if (type == "linear") {
        std::vector<double> weights;
        for (const auto& w : field(j, "weights", where)) weights.push_back(w.get<double>());
        fn = FunctionSpec::linear(std::move(weights),
                                  j.contains("bias") ? j.at("bias").get<double>() : 0.0);
    } else if (type == "table") {
        TableSpec table;
        table.key_arity = base_parents.size();
        bool has_distribution = false;
        for (const auto& ej : field(j, "entries", where)) {
            TableEntry entry;
            for (const auto& kj : field(ej, "key", where))
                entry.key.push_back(value_from_json(kj, where));
            if (ej.contains("probs")) {
                for (const auto& pj : ej.at("probs")) entry.probs.push_back(pj.get<double>());
                has_distribution = true;
            } else {
                entry.value = value_from_json(field(ej, "value", where), where);
            }
            table.entries.push_back(std::move(entry));
        }
        if (j.contains("default")) table.fallback = value_from_json(j.at("default"), where);
        if (has_distribution) table.output_labels = domain;
        fn = FunctionSpec::lookup_table(std::move(table));
    } else if (type == "external") {
        fn = FunctionSpec::external_model(
            field(j, "command", where).get<std::string>(),
            j.contains("timeout_ms") ? j.at("timeout_ms").get<int>() : 10000);
    } else {
        fail(Errc::SchemaError, where + ": unknown function type '" + type + "'");
    }
    fn.noise_mode = noise;
    return fn;
}

inline json function_to_json(const FunctionSpec& fn) {
    json j;
    switch (fn.kind) {
        case FunctionKind::Expression:
            j["type"] = "expr";
            j["text"] = expr::to_string(fn.ast);
            break;
        case FunctionKind::Linear:
            j["type"] = "linear";
            j["weights"] = fn.weights;
            j["bias"] = fn.bias;
            break;
        case FunctionKind::Table: {
            j["type"] = "table";
            json entries = json::array();
            for (const TableEntry& e : fn.table.entries) {
                json ej;
                json key = json::array();
                for (const Value& k : e.key) key.push_back(value_to_json(k));
                ej["key"] = std::move(key);
                if (e.is_distribution())
                    ej["probs"] = e.probs;
                else
                    ej["value"] = value_to_json(e.value);
                entries.push_back(std::move(ej));
            }
            j["entries"] = std::move(entries);
            if (fn.table.fallback) j["default"] = value_to_json(*fn.table.fallback);
            break;
        }
        case FunctionKind::External:
            j["type"] = "external";
            j["command"] = fn.external.command;
            j["timeout_ms"] = fn.external.timeout_ms;
            break;
    }
    if (fn.noise_mode == NoiseMode::Additive) j["noise"] = "additive";
    if (fn.noise_mode == NoiseMode::InverseCdf) j["noise"] = "inverse_cdf";
    return j;
}

inline json parse_text(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(Errc::ParseError, where + ": " + e.what(), e.byte);
    }
}

inline json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::ParseError, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
}

}  // namespace io_detail

inline CausalGraph graph_from_json(const json& doc) {
    if (!doc.is_object()) fail(Errc::SchemaError, "graph document must be a JSON object");
    const std::string sink_id = io_detail::field(doc, "sink", "graph").get<std::string>();
    std::vector<NodeSpec> nodes;
    for (const auto& nj : io_detail::field(doc, "nodes", "graph")) {
        NodeSpec n;
        n.id = io_detail::field(nj, "id", "node").get<std::string>();
        const std::string where = "node '" + n.id + "'";
        if (nj.contains("parents"))
            for (const auto& pj : nj.at("parents")) n.parents.push_back(pj.get<std::string>());
        if (nj.contains("domain"))
            for (const auto& dj : nj.at("domain")) n.domain.push_back(dj.get<std::string>());
        if (nj.contains("is_noise")) n.is_noise = nj.at("is_noise").get<bool>();
        if (nj.contains("function"))
            n.function = io_detail::function_from_json(nj.at("function"), n.parents, n.domain, where);
        if (nj.contains("kind")) {
            const std::string k = nj.at("kind").get<std::string>();
            if (k == "source")
                n.kind = NodeKind::Source;
            else if (k == "internal")
                n.kind = NodeKind::Internal;
            else if (k == "sink")
                n.kind = NodeKind::Sink;
            else
                fail(Errc::SchemaError, where + ": unknown kind '" + k + "'");
        } else {
            n.kind = n.parents.empty() && !n.function ? NodeKind::Source
                     : n.id == sink_id               ? NodeKind::Sink
                                                     : NodeKind::Internal;
        }
        nodes.push_back(std::move(n));
    }
    return CausalGraph::build(std::move(nodes), sink_id);
}

inline json graph_to_json(const CausalGraph& g) {
    json nodes = json::array();
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        if (static_cast<int>(v) == g.super_source()) continue;
        const NodeSpec& n = g.node(static_cast<int>(v));
        json nj;
        nj["id"] = n.id;
        nj["kind"] = node_kind_name(n.kind);
        json parents = json::array();
        for (const std::string& p : n.parents)
            if (g.find(p) != g.super_source()) parents.push_back(p);
        nj["parents"] = std::move(parents);
        if (n.function) nj["function"] = io_detail::function_to_json(*n.function);
        if (!n.domain.empty()) nj["domain"] = n.domain;
        if (n.is_noise) nj["is_noise"] = true;
        nodes.push_back(std::move(nj));
    }
    json doc;
    doc["nodes"] = std::move(nodes);
    doc["sink"] = g.node(g.sink()).id;
    return doc;
}

// build_graph: parse a graph description document and validate it.
inline CausalGraph build_graph(const std::string& text) {
    return graph_from_json(io_detail::parse_text(text, "graph"));
}

inline CausalGraph load_graph_file(const std::string& path) {
    return graph_from_json(io_detail::parse_file(path));
}

// Samples: {"values": {"<node>": <number|string>, ...}}
inline Sample sample_from_json(const json& doc) {
    Sample s;
    if (!doc.is_object()) fail(Errc::SchemaError, "sample must be a JSON object");
    for (const auto& [key, vj] : io_detail::field(doc, "values", "sample").items())
        s.set(key, io_detail::value_from_json(vj, "sample value '" + key + "'"));
    return s;
}

inline json sample_to_json(const Sample& s) {
    json values = json::object();
    for (const auto& [key, v] : s.values) values[key] = io_detail::value_to_json(v);
    json doc;
    doc["values"] = std::move(values);
    return doc;
}

inline Sample load_sample_file(const std::string& path) {
    return sample_from_json(io_detail::parse_file(path));
}

// ---------------------------------------------------------------------------
// Cases

struct CaseBundle {
    CausalGraph graph;  // raw, not yet super-source augmented
    Sample foreground;
    std::vector<Sample> backgrounds;
};

namespace io_detail {

// Sources must be covered; values must respect domains; internal values, when
// present, must agree with forward evaluation.
inline void validate_sample(const CausalGraph& g, const Sample& s, const std::string& label) {
    for (const int src : g.source_nodes()) {
        const NodeSpec& n = g.node(src);
        if (!s.has(n.id)) fail(Errc::MissingSource, label + " does not assign source '" + n.id + "'");
        check_value_domain(n, s.at(n.id));
    }
    bool has_internal = false;
    for (const auto& [id, v] : s.values) {
        const int i = g.find(id);
        if (i < 0) fail(Errc::SchemaError, label + " assigns unknown node '" + id + "'");
        if (g.node(i).kind != NodeKind::Source) has_internal = true;
    }
    if (!has_internal) return;
    ExternalRuntime runtime;
    const auto vals = forward_values(g, s, &runtime);
    for (const auto& [id, v] : s.values) {
        const int i = g.find(id);
        if (g.node(i).kind == NodeKind::Source) continue;
        const Value& expect = vals[static_cast<std::size_t>(i)];
        const bool ok = v.is_category() == expect.is_category() &&
                        (v.is_category() ? v.label() == expect.label()
                                         : std::fabs(v.real() - expect.real()) <= 1e-9);
        if (!ok)
            fail(Errc::SchemaError, label + ": value for '" + id +
                                        "' disagrees with forward evaluation (" + v.to_string() +
                                        " vs " + expect.to_string() + ")");
    }
}

}  // namespace io_detail

inline CaseBundle load_case(const std::string& graph_path, const std::string& fg_path,
                            const std::vector<std::string>& bg_paths) {
    if (bg_paths.empty()) fail(Errc::InvalidArgument, "need at least one background sample");
    CaseBundle bundle{load_graph_file(graph_path), load_sample_file(fg_path), {}};
    io_detail::validate_sample(bundle.graph, bundle.foreground, "foreground");
    for (const std::string& p : bg_paths) {
        bundle.backgrounds.push_back(load_sample_file(p));
        io_detail::validate_sample(bundle.graph, bundle.backgrounds.back(),
                                   "background '" + p + "'");
    }
    return bundle;
}

// ---------------------------------------------------------------------------
// Attribution runs and reports

struct RunOptions {
    bool exact = true;
    McParams mc;                 // used when exact is false
    bool check_axioms = false;
    bool dummy_scan = false;
    bool show_super_source = false;  // include synthetic edges in the report
    FlowOptions flow;
    AxiomOptions axioms;
};

struct RunResult {
    CausalGraph graph;  // augmented
    EdgeAttribution attribution;
    std::map<std::string, double> psi;
    std::map<std::string, double> asv;
    std::optional<AxiomReport> axioms;
};

inline RunResult run_attribution(const CaseBundle& bundle, const RunOptions& opts = {}) {
    CausalGraph g = bundle.graph.augmented();
    EdgeAttribution attr;
    if (bundle.backgrounds.size() == 1) {
        attr = opts.exact ? shapley_flow_exact(g, bundle.backgrounds[0], bundle.foreground,
                                               opts.flow)
                          : shapley_flow_mc(g, bundle.backgrounds[0], bundle.foreground,
                                            opts.mc.samples, opts.mc.seed, opts.flow);
    } else {
        attr = multi_background(g, bundle.backgrounds, bundle.foreground,
                                opts.exact ? std::optional<McParams>{} : std::optional(opts.mc),
                                opts.flow);
    }
    RunResult result{std::move(g), std::move(attr), {}, {}, {}};
    result.psi = node_attribution(result.attribution, result.graph);
    result.asv = asv_view(result.attribution, result.graph);
    if (opts.check_axioms || opts.dummy_scan) {
        AxiomOptions ax = opts.axioms;
        ax.flow = opts.flow;
        result.axioms = check_axioms(result.graph, result.attribution, bundle.backgrounds[0],
                                     bundle.foreground, ax, opts.dummy_scan);
    }
    return result;
}

inline json axioms_to_json(const AxiomReport& r) {
    json j;
    j["passed"] = r.passed();
    j["boundaries_checked"] = r.boundaries_checked;
    j["boundaries_truncated"] = r.boundaries_truncated;
    j["efficiency_max_error"] = r.efficiency_max_error;
    j["conservation_max_error"] = r.conservation_max_error;
    if (r.dummy_checked) {
        j["certified_dummy_edges"] = r.certified_dummy_edges;
        j["dummy_max_credit"] = r.dummy_max_credit;
    }
    json failures = json::array();
    for (const AxiomFailure& f : r.failures) {
        json fj;
        fj["check"] = f.check;
        fj["subject"] = f.subject;
        fj["error"] = f.error;
        fj["tolerance"] = f.tolerance;
        failures.push_back(std::move(fj));
    }
    j["failures"] = std::move(failures);
    return j;
}

// Edge order follows the graph's edge list; synthetic super-source edges are
// dropped unless requested (their information lives in the "sources" view).
inline json report_to_json(const RunResult& r, bool show_super_source = false) {
    const CausalGraph& g = r.graph;
    const EdgeAttribution& attr = r.attribution;
    json j;
    json method;
    method["name"] = method_name(attr.method);
    if (attr.method == Method::MonteCarlo) {
        method["samples"] = attr.sample_count;
        method["seed"] = attr.seed;
    } else {
        method["configurations"] = attr.config_count;
    }
    j["method"] = std::move(method);
    j["foreground_output"] = attr.foreground_output;
    j["background_output"] = attr.background_output;
    j["target_delta"] = attr.target_delta;

    json edges = json::array();
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(static_cast<int>(e));
        if (!show_super_source && ed.src == g.super_source()) continue;
        json ej;
        ej["source"] = g.node(ed.src).id;
        ej["target"] = g.node(ed.dst).id;
        ej["credit"] = attr.credit[e];
        if (attr.method == Method::MonteCarlo) ej["stderr"] = attr.std_error[e];
        edges.push_back(std::move(ej));
    }
    j["edges"] = std::move(edges);

    json nodes = json::array();
    for (const auto& [id, credit] : r.psi) {
        json nj;
        nj["id"] = id;
        nj["credit"] = credit;
        nodes.push_back(std::move(nj));
    }
    j["nodes"] = std::move(nodes);

    json sources = json::array();
    for (const auto& [id, credit] : r.asv) {
        json sj;
        sj["id"] = id;
        sj["credit"] = credit;
        sources.push_back(std::move(sj));
    }
    j["sources"] = std::move(sources);

    if (r.axioms) j["axiom_checks"] = axioms_to_json(*r.axioms);
    return j;
}

// Loader for report round-trips and downstream tooling.
struct LoadedReport {
    std::string method;
    double target_delta = 0.0;
    std::map<std::pair<std::string, std::string>, double> edge_credit;
    std::map<std::pair<std::string, std::string>, double> edge_stderr;
    std::map<std::string, double> node_credit;
    std::map<std::string, double> source_credit;
};

inline LoadedReport report_from_json(const json& j) {
    LoadedReport r;
    r.method = io_detail::field(j, "method", "report").at("name").get<std::string>();
    r.target_delta = io_detail::field(j, "target_delta", "report").get<double>();
    for (const auto& ej : io_detail::field(j, "edges", "report")) {
        const auto key = std::make_pair(ej.at("source").get<std::string>(),
                                        ej.at("target").get<std::string>());
        r.edge_credit[key] = ej.at("credit").get<double>();
        if (ej.contains("stderr")) r.edge_stderr[key] = ej.at("stderr").get<double>();
    }
    for (const auto& nj : io_detail::field(j, "nodes", "report"))
        r.node_credit[nj.at("id").get<std::string>()] = nj.at("credit").get<double>();
    for (const auto& sj : io_detail::field(j, "sources", "report"))
        r.source_credit[sj.at("id").get<std::string>()] = sj.at("credit").get<double>();
    return r;
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::ParseError, "cannot write '" + path + "'");
    out << text;
}

}  // namespace flowcredit
