#pragma once

#include <string>
#include <vector>

#include "flowcredit/error.hpp"
#include "flowcredit/graph.hpp"

namespace flowcredit {

// A source-to-sink walk, stored as consecutive edge indices.
struct Path {
    std::vector<int> edges;

    bool contains(int edge) const {
        for (const int e : edges)
            if (e == edge) return true;
        return false;
    }
};

inline std::string path_name(const CausalGraph& g, const Path& p) {
    std::string out = g.node(g.edge(p.edges.front()).src).id;
    for (const int e : p.edges) out += " -> " + g.node(g.edge(e).dst).id;
    return out;
}

// Every source-to-sink path, in depth-first order over edge indices.
inline std::vector<Path> all_paths(const CausalGraph& g, std::size_t cap = 1000000) {
    std::vector<Path> out;
    std::vector<int> stack;
    auto walk = [&](auto&& self, int u) -> void {
        if (u == g.sink()) {
            if (out.size() >= cap)
                fail(Errc::SizeLimitExceeded,
                     "more than " + std::to_string(cap) + " source-to-sink paths");
            out.push_back(Path{stack});
            return;
        }
        for (const int e : g.out_edges(u)) {
            stack.push_back(e);
            self(self, g.edge(e).dst);
            stack.pop_back();
        }
    };
    for (std::size_t v = 0; v < g.node_count(); ++v)
        if (g.in_edges(static_cast<int>(v)).empty()) walk(walk, static_cast<int>(v));
    return out;
}

inline std::vector<Path> paths_through(const CausalGraph& g, int edge, std::size_t cap = 1000000) {
    if (edge < 0 || static_cast<std::size_t>(edge) >= g.edge_count())
        fail(Errc::UnknownEdge, "edge index " + std::to_string(edge) + " out of range");
    std::vector<Path> out;
    for (Path& p : all_paths(g, cap))
        if (p.contains(edge)) out.push_back(std::move(p));
    return out;
}

inline std::vector<Path> paths_through(const CausalGraph& g, const std::string& src,
                                       const std::string& dst, std::size_t cap = 1000000) {
    return paths_through(g, g.edge_index(src, dst), cap);
}

}  // namespace flowcredit
