#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "flowcredit/flow.hpp"
#include "flowcredit/graph.hpp"

namespace flowcredit {

struct DotOptions {
    int top_k = 10;                  // edges to highlight, by |credit|
    bool hide_noise = false;         // drop noise nodes and their edges
    bool show_super_source = false;  // include the synthetic source
};

// Graphviz rendering of an attribution: pen width scales with |credit|
// relative to the largest shown credit, color encodes sign (red positive,
// blue negative), labels carry the credit to two decimals. Edges outside the
// top-k are dimmed and unlabeled.
inline std::string emit_dot(const CausalGraph& g, const EdgeAttribution& attr,
                            const DotOptions& opts = {}) {
    auto hidden_node = [&](int v) {
        if (v == g.super_source()) return !opts.show_super_source;
        return opts.hide_noise && g.node(v).is_noise;
    };

    std::vector<int> shown;
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(static_cast<int>(e));
        if (hidden_node(ed.src) || hidden_node(ed.dst)) continue;
        shown.push_back(static_cast<int>(e));
    }

    double max_credit = 0.0;
    for (const int e : shown)
        max_credit = std::max(max_credit, std::fabs(attr.credit[static_cast<std::size_t>(e)]));

    std::vector<int> ranked = shown;
    std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
        return std::fabs(attr.credit[static_cast<std::size_t>(a)]) >
               std::fabs(attr.credit[static_cast<std::size_t>(b)]);
    });
    std::vector<char> highlighted(g.edge_count(), 0);
    for (std::size_t i = 0; i < ranked.size() && static_cast<int>(i) < opts.top_k; ++i)
        highlighted[static_cast<std::size_t>(ranked[i])] = 1;

    auto quote = [](const std::string& s) {
        std::string out = "\"";
        for (const char c : s) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        out += '"';
        return out;
    };

    std::string dot = "digraph shapley_flow {\n  rankdir=LR;\n";
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        if (hidden_node(static_cast<int>(v))) continue;
        const NodeSpec& n = g.node(static_cast<int>(v));
        dot += "  " + quote(n.id);
        if (static_cast<int>(v) == g.sink())
            dot += " [shape=box]";
        else if (n.is_noise)
            dot += " [shape=ellipse, style=dashed]";
        dot += ";\n";
    }
    char buf[96];
    for (const int e : shown) {
        const Edge& ed = g.edge(e);
        const double credit = attr.credit[static_cast<std::size_t>(e)];
        dot += "  " + quote(g.node(ed.src).id) + " -> " + quote(g.node(ed.dst).id);
        if (highlighted[static_cast<std::size_t>(e)]) {
            const double scale = max_credit > 0.0 ? std::fabs(credit) / max_credit : 0.0;
            const double width = 0.5 + 4.5 * scale;
            std::snprintf(buf, sizeof(buf), " [label=\"%.2f\", penwidth=%.2f, color=%s];\n",
                          credit, width, credit >= 0.0 ? "red" : "blue");
            dot += buf;
        } else {
            dot += " [penwidth=0.5, color=gray];\n";
        }
    }
    dot += "}\n";
    return dot;
}

}  // namespace flowcredit
