#pragma once

// Shared graph builders and independent reference computations for the test
// suites. Everything here stays deliberately naive: subset scans, plain
// recursion, no reuse of the library's cleverer paths.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <flowcredit/flowcredit.hpp>

namespace testsupport {

using namespace flowcredit;

// X1 -> X2 -> ... -> Xn -> f with no dummy edges: a single path.
inline CaseFixture pure_chain(int n, double delta) {
    std::vector<NodeSpec> nodes;
    auto id = [](int i) { return "X" + std::to_string(i); };
    for (int i = 1; i <= n; ++i) {
        NodeSpec spec;
        spec.id = id(i);
        if (i == 1) {
            spec.kind = NodeKind::Source;
        } else {
            spec.kind = NodeKind::Internal;
            spec.parents = {id(i - 1)};
            spec.function = FunctionSpec::linear({1.0});
        }
        nodes.push_back(std::move(spec));
    }
    NodeSpec sink;
    sink.id = "f";
    sink.kind = NodeKind::Sink;
    sink.parents = {id(n)};
    sink.function = FunctionSpec::linear({1.0});
    nodes.push_back(std::move(sink));
    CaseFixture fx{CausalGraph::build(std::move(nodes), "f"), Sample{}, Sample{}};
    fx.background.set("X1", Value(0.0));
    fx.foreground.set("X1", Value(delta));
    return fx;
}

// sources x1..xd feeding the sink directly
inline CaseFixture flat_linear(const std::vector<double>& weights, const std::vector<double>& bg,
                               const std::vector<double>& fg) {
    std::vector<NodeSpec> nodes;
    std::vector<std::string> parents;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        NodeSpec s;
        s.id = "x" + std::to_string(i + 1);
        s.kind = NodeKind::Source;
        parents.push_back(s.id);
        nodes.push_back(std::move(s));
    }
    NodeSpec sink;
    sink.id = "f";
    sink.kind = NodeKind::Sink;
    sink.parents = parents;
    sink.function = FunctionSpec::linear(weights);
    nodes.push_back(std::move(sink));
    CaseFixture fx{CausalGraph::build(std::move(nodes), "f"), Sample{}, Sample{}};
    for (std::size_t i = 0; i < weights.size(); ++i) {
        fx.background.set(parents[i], Value(bg[i]));
        fx.foreground.set(parents[i], Value(fg[i]));
    }
    return fx;
}

// a -> {b, c} -> d -> {e -> f, f}: node d is reached twice and has two
// children, so orderings at repeat visits matter
inline CaseFixture double_diamond() {
    auto lin1 = [] { return FunctionSpec::linear({1.0}); };
    std::vector<NodeSpec> nodes(6);
    nodes[0].id = "a";
    nodes[0].kind = NodeKind::Source;
    nodes[1].id = "b";
    nodes[1].kind = NodeKind::Internal;
    nodes[1].parents = {"a"};
    nodes[1].function = lin1();
    nodes[2].id = "c";
    nodes[2].kind = NodeKind::Internal;
    nodes[2].parents = {"a"};
    nodes[2].function = lin1();
    nodes[3].id = "d";
    nodes[3].kind = NodeKind::Internal;
    nodes[3].parents = {"b", "c"};
    nodes[3].function = FunctionSpec::linear({1.0, 2.0});
    nodes[4].id = "e";
    nodes[4].kind = NodeKind::Internal;
    nodes[4].parents = {"d"};
    nodes[4].function = lin1();
    nodes[5].id = "f";
    nodes[5].kind = NodeKind::Sink;
    nodes[5].parents = {"d", "e"};
    nodes[5].function = FunctionSpec::linear({1.0, 3.0});
    CaseFixture fx{CausalGraph::build(std::move(nodes), "f"), Sample{}, Sample{}};
    fx.background.set("a", Value(0.25));
    fx.foreground.set("a", Value(-1.5));
    return fx;
}

// Brute-force boundary enumeration straight from the definition: every node
// bipartition with in-degree-0 nodes in D, the sink in F, and no F->D edge.
inline std::set<std::vector<int>> brute_force_data_sides(const CausalGraph& g) {
    const int n = static_cast<int>(g.node_count());
    std::set<std::vector<int>> out;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        bool ok = true;
        for (int v = 0; v < n && ok; ++v) {
            const bool in_d = (mask >> v) & 1u;
            if (g.in_edges(v).empty() && !in_d) ok = false;
            if (v == g.sink() && in_d) ok = false;
        }
        for (std::size_t e = 0; e < g.edge_count() && ok; ++e) {
            const Edge& ed = g.edge(static_cast<int>(e));
            if (!((mask >> ed.src) & 1u) && ((mask >> ed.dst) & 1u)) ok = false;
        }
        if (!ok) continue;
        std::vector<int> data;
        for (int v = 0; v < n; ++v)
            if ((mask >> v) & 1u) data.push_back(v);
        out.insert(std::move(data));
    }
    return out;
}

// Source-to-sink path count through an edge, by dynamic programming; the
// independent check for paths_through.
inline std::uint64_t dp_paths_through(const CausalGraph& g, int edge) {
    const int n = static_cast<int>(g.node_count());
    std::vector<std::uint64_t> from_source(n, 0);
    std::vector<std::uint64_t> to_sink(n, 0);
    for (const int v : g.topo()) {
        if (g.in_edges(v).empty()) from_source[static_cast<std::size_t>(v)] = 1;
        for (const int e : g.in_edges(v))
            from_source[static_cast<std::size_t>(v)] +=
                from_source[static_cast<std::size_t>(g.edge(e).src)];
    }
    const auto& topo = g.topo();
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        if (*it == g.sink()) to_sink[static_cast<std::size_t>(*it)] = 1;
        for (const int e : g.out_edges(*it))
            to_sink[static_cast<std::size_t>(*it)] += to_sink[static_cast<std::size_t>(g.edge(e).dst)];
    }
    const Edge& ed = g.edge(edge);
    return from_source[static_cast<std::size_t>(ed.src)] * to_sink[static_cast<std::size_t>(ed.dst)];
}

// Reorders one node's parents (rebinding its function) so order-invariance
// can be tested. Perm maps new slot -> old slot.
inline CausalGraph permute_parents(const CausalGraph& g, const std::string& node_id,
                                   const std::vector<int>& perm) {
    std::vector<NodeSpec> nodes = g.nodes();
    for (NodeSpec& n : nodes) {
        if (n.id != node_id) continue;
        std::vector<std::string> parents(n.parents.size());
        for (std::size_t k = 0; k < perm.size(); ++k)
            parents[k] = n.parents[static_cast<std::size_t>(perm[k])];
        if (n.function->kind == FunctionKind::Linear) {
            std::vector<double> w(n.function->weights.size());
            for (std::size_t k = 0; k < perm.size(); ++k)
                w[k] = n.function->weights[static_cast<std::size_t>(perm[k])];
            n.function->weights = std::move(w);
        } else if (n.function->kind == FunctionKind::Table) {
            for (TableEntry& entry : n.function->table.entries) {
                std::vector<Value> key(entry.key.size());
                for (std::size_t k = 0; k < perm.size(); ++k)
                    key[k] = entry.key[static_cast<std::size_t>(perm[k])];
                entry.key = std::move(key);
            }
        } else if (n.function->kind == FunctionKind::Expression) {
            // expressions bind by name: reparse with the new order
            n.function = parse_expression(expr::to_string(n.function->ast), parents);
        }
        n.parents = std::move(parents);
    }
    return CausalGraph::build(std::move(nodes), g.node(g.sink()).id);
}

// Random mixed-function DAG for the axiom suite: linear and expression nodes,
// a couple of certified-dummy edges (zero weight / unused trailing parent),
// bounded configuration and boundary counts so exact attribution stays cheap.
struct AxiomCase {
    CausalGraph graph;  // raw
    Sample background;
    Sample foreground;
    std::vector<std::pair<std::string, std::string>> injected_dummies;
};

inline AxiomCase random_axiom_case(std::uint64_t seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(derive_seed(seed, 0xA1A0 + attempt));
        const int n = 4 + static_cast<int>(rng.below(5));  // 4..8 nodes total
        std::vector<NodeSpec> nodes;
        std::vector<std::pair<std::string, std::string>> dummies;
        auto id = [](int i) { return "n" + std::to_string(i); };
        for (int i = 1; i <= n; ++i) {
            NodeSpec spec;
            spec.id = id(i);
            std::vector<std::string> parents;
            for (int j = 1; j < i; ++j)
                if (rng.bernoulli(0.45)) parents.push_back(id(j));
            if (i == n && parents.empty()) parents.push_back(id(1));
            if (parents.empty()) {
                spec.kind = NodeKind::Source;
                nodes.push_back(std::move(spec));
                continue;
            }
            spec.kind = i == n ? NodeKind::Sink : NodeKind::Internal;
            const int style = static_cast<int>(rng.below(3));
            if (style == 0 || parents.size() == 1) {
                std::vector<double> w(parents.size());
                for (double& wi : w) wi = rng.normal();
                // sometimes a genuine zero-weight (dummy) input
                if (parents.size() > 1 && rng.bernoulli(0.35)) {
                    const std::size_t k = parents.size() - 1;
                    w[k] = 0.0;
                    dummies.emplace_back(parents[k], spec.id);
                }
                spec.function = FunctionSpec::linear(std::move(w), rng.normal());
            } else {
                // expression over a prefix of the parents; any trailing
                // parent beyond the expression is a structural dummy
                std::size_t used = parents.size();
                if (parents.size() > 1 && rng.bernoulli(0.35)) {
                    used = parents.size() - 1;
                    dummies.emplace_back(parents[used], spec.id);
                }
                std::string text;
                if (style == 1) {
                    for (std::size_t k = 0; k < used; ++k)
                        text += (k ? " + " : "") + std::to_string(0.5 + k * 0.25) + "*" + parents[k];
                    text = "max(" + text + ", " + parents[0] + " - 1)";
                } else {
                    text = "if(" + parents[0] + " > 0, " + parents[0] + " + 1, ";
                    text += used > 1 ? parents[1] + " - 2)" : "2 - " + parents[0] + ")";
                    for (std::size_t k = 2; k < used; ++k) text += " + 0.3*" + parents[k];
                }
                std::vector<std::string> vars(parents.begin(),
                                              parents.begin() + static_cast<std::ptrdiff_t>(used));
                spec.function = parse_expression(text, vars);
            }
            spec.parents = std::move(parents);
            nodes.push_back(std::move(spec));
        }
        CausalGraph graph = [&]() -> CausalGraph {
            try {
                return CausalGraph::build(std::move(nodes), id(n));
            } catch (const FlowError&) {
                return CausalGraph::build(
                    {NodeSpec{"x", NodeKind::Source, {}, {}, false, {}},
                     NodeSpec{"f", NodeKind::Sink, {"x"}, FunctionSpec::linear({1.0}), false, {}}},
                    "f");
            }
        }();
        if (graph.node_count() == 2 && n > 2) continue;  // placeholder from a failed draw

        Sample bg;
        Sample fg;
        for (const int s : graph.source_nodes()) {
            bg.set(graph.node(s).id, Value(rng.normal()));
            fg.set(graph.node(s).id, Value(rng.normal()));
        }
        const CausalGraph aug = graph.augmented();
        if (count_configurations(aug, bg, fg) > 4000) continue;
        bool truncated = false;
        const auto bounds = detail::enumerate_boundaries_upto(aug, 48, &truncated);
        if (truncated) continue;
        (void)bounds;
        return AxiomCase{std::move(graph), std::move(bg), std::move(fg), std::move(dummies)};
    }
}

}  // namespace testsupport
