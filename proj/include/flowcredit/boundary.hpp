#pragma once

#include <string>
#include <vector>

#include "flowcredit/error.hpp"
#include "flowcredit/graph.hpp"

namespace flowcredit {

// An explanation boundary: a cut (D, F) with the super source in D and the
// sink in F, no edge crossing F -> D. F plays the role of a black-box model
// whose direct inputs are the cut edges.
struct Boundary {
    std::vector<int> data_side;   // node indices in D, ascending
    std::vector<int> model_side;  // node indices in F, ascending
    std::vector<int> cut_edges;   // edges from D to F, ascending edge index
};

namespace detail {

inline Boundary boundary_from_mask(const CausalGraph& g, const std::vector<char>& in_data) {
    Boundary b;
    for (std::size_t v = 0; v < g.node_count(); ++v)
        (in_data[v] ? b.data_side : b.model_side).push_back(static_cast<int>(v));
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(static_cast<int>(e));
        const bool su = in_data[static_cast<std::size_t>(ed.src)];
        const bool sv = in_data[static_cast<std::size_t>(ed.dst)];
        if (su && !sv) b.cut_edges.push_back(static_cast<int>(e));
        if (!su && sv)
            fail(Errc::InvalidArgument,
                 "not a valid boundary: edge " + g.edge_name(static_cast<int>(e)) +
                     " crosses from the model side back into the data side");
    }
    return b;
}

}  // namespace detail

// D = everything but the sink; the cut is the sink's direct inputs. Explaining
// at this boundary is ordinary whole-graph attribution.
inline Boundary finest_boundary(const CausalGraph& g) {
    std::vector<char> in_data(g.node_count(), 1);
    in_data[static_cast<std::size_t>(g.sink())] = 0;
    return detail::boundary_from_mask(g, in_data);
}

// Boundary from an explicit data side; validates closure, sources, and sink.
inline Boundary make_boundary(const CausalGraph& g, const std::vector<std::string>& data_ids) {
    std::vector<char> in_data(g.node_count(), 0);
    for (const std::string& id : data_ids) in_data[static_cast<std::size_t>(g.index_of(id))] = 1;
    for (std::size_t v = 0; v < g.node_count(); ++v)
        if (g.in_edges(static_cast<int>(v)).empty() && !in_data[v])
            fail(Errc::InvalidArgument,
                 "source '" + g.node(static_cast<int>(v)).id + "' must be on the data side");
    if (in_data[static_cast<std::size_t>(g.sink())])
        fail(Errc::InvalidArgument, "the sink cannot be on the data side");
    return detail::boundary_from_mask(g, in_data);
}

namespace detail {

inline std::vector<Boundary> enumerate_boundaries_upto(const CausalGraph& g, std::size_t cap,
                                                       bool* truncated) {
    if (!g.is_augmented())
        fail(Errc::InvalidArgument, "enumerate_boundaries expects a super-source-augmented graph");
    const auto& topo = g.topo();
    std::vector<Boundary> out;
    std::vector<char> in_data(g.node_count(), 0);
    in_data[static_cast<std::size_t>(g.super_source())] = 1;
    if (truncated) *truncated = false;

    auto walk = [&](auto&& self, std::size_t pos) -> void {
        if (out.size() >= cap) {
            if (truncated) *truncated = true;
            return;
        }
        if (pos == topo.size()) {
            out.push_back(boundary_from_mask(g, in_data));
            return;
        }
        const int v = topo[pos];
        if (v == g.super_source()) {
            self(self, pos + 1);
            return;
        }
        // leave v on the model side
        self(self, pos + 1);
        // or move it to the data side, if its parents are all there
        if (v == g.sink()) return;
        bool closed = true;
        for (const int e : g.in_edges(v))
            if (!in_data[static_cast<std::size_t>(g.edge(e).src)]) {
                closed = false;
                break;
            }
        if (closed) {
            in_data[static_cast<std::size_t>(v)] = 1;
            self(self, pos + 1);
            in_data[static_cast<std::size_t>(v)] = 0;
        }
    };
    walk(walk, 0);
    return out;
}

}  // namespace detail

// All boundaries of a super-source-augmented graph, each exactly once. A set D
// is a valid data side iff it is closed under parents, so the enumeration
// walks nodes in topological order deciding membership; every result is
// reachable from D = {S*} by adding nodes in some topological order.
inline std::vector<Boundary> enumerate_boundaries(const CausalGraph& g, std::size_t cap = 10000) {
    bool truncated = false;
    std::vector<Boundary> out = detail::enumerate_boundaries_upto(g, cap, &truncated);
    if (truncated)
        fail(Errc::SizeLimitExceeded,
             "more than " + std::to_string(cap) + " boundaries; raise the cap to enumerate");
    return out;
}

}  // namespace flowcredit
