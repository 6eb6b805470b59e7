#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "flowcredit/error.hpp"
#include "flowcredit/function.hpp"
#include "flowcredit/value.hpp"

namespace flowcredit {

enum class NodeKind { Source, Internal, Sink };

inline const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Source: return "source";
        case NodeKind::Internal: return "internal";
        case NodeKind::Sink: return "sink";
    }
    return "?";
}

struct NodeSpec {
    std::string id;
    NodeKind kind = NodeKind::Internal;
    std::vector<std::string> parents;       // ordered; binds function arguments
    std::optional<FunctionSpec> function;   // absent for sources
    bool is_noise = false;                  // noise nodes are sources
    std::vector<std::string> domain;        // categorical labels; empty = real-valued
};

struct Edge {
    int src = -1;
    int dst = -1;
    int dst_slot = -1;  // position in dst's parent list
};

// Immutable DAG with per-node functions and a single sink. Validated on
// construction; safe to share across threads afterwards.
class CausalGraph {
public:
    static CausalGraph build(std::vector<NodeSpec> nodes, const std::string& sink_id) {
        CausalGraph g;
        g.nodes_ = std::move(nodes);
        g.validate_and_index(sink_id);
        return g;
    }

    std::size_t node_count() const { return nodes_.size(); }
    const NodeSpec& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<NodeSpec>& nodes() const { return nodes_; }

    int find(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? -1 : it->second;
    }

    int index_of(const std::string& id) const {
        const int i = find(id);
        if (i < 0) fail(Errc::UnknownNode, "no node named '" + id + "'");
        return i;
    }

    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t edge_count() const { return edges_.size(); }
    const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }

    int find_edge(int src, int dst) const {
        auto it = edge_index_.find(edge_key(src, dst));
        return it == edge_index_.end() ? -1 : it->second;
    }

    int edge_index(const std::string& src, const std::string& dst) const {
        const int s = find(src);
        const int d = find(dst);
        const int e = (s >= 0 && d >= 0) ? find_edge(s, d) : -1;
        if (e < 0) fail(Errc::UnknownEdge, "no edge " + src + " -> " + dst);
        return e;
    }

    std::string edge_name(int e) const {
        const Edge& ed = edge(e);
        return nodes_[static_cast<std::size_t>(ed.src)].id + " -> " +
               nodes_[static_cast<std::size_t>(ed.dst)].id;
    }

    const std::vector<int>& out_edges(int node) const { return out_edges_[static_cast<std::size_t>(node)]; }
    const std::vector<int>& in_edges(int node) const { return in_edges_[static_cast<std::size_t>(node)]; }

    int sink() const { return sink_; }

    // Node indices, every edge forward, ties broken by id.
    const std::vector<int>& topo() const { return topo_; }

    // Original (non-synthetic) sources, in node order.
    std::vector<int> source_nodes() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].kind == NodeKind::Source && static_cast<int>(i) != super_source_)
                out.push_back(static_cast<int>(i));
        return out;
    }

    bool is_augmented() const { return super_source_ >= 0; }
    int super_source() const { return super_source_; }

    // Adds a synthetic source with an identity pass-through edge to every
    // former source. Attribution on those edges reads as per-source credit.
    CausalGraph augmented() const {
        if (is_augmented())
            fail(Errc::AlreadyAugmented, "graph already has a super source");
        std::string super_id = "S*";
        while (find(super_id) >= 0) super_id += "*";

        CausalGraph g;
        NodeSpec super;
        super.id = super_id;
        super.kind = NodeKind::Source;
        g.nodes_.push_back(std::move(super));
        for (const NodeSpec& n : nodes_) {
            NodeSpec copy = n;
            if (n.kind == NodeKind::Source) copy.parents = {super_id};
            g.nodes_.push_back(std::move(copy));
        }
        g.super_source_ = 0;
        g.index_nodes();
        g.build_edges();
        g.compute_topo();  // the pre-augmentation graph was already validated
        g.sink_ = g.index_of(nodes_[static_cast<std::size_t>(sink_)].id);
        g.check_connectivity();
        return g;
    }

private:
    static std::uint64_t edge_key(int src, int dst) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(src)) << 32) |
               static_cast<std::uint32_t>(dst);
    }

    void index_nodes() {
        index_.clear();
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!index_.emplace(nodes_[i].id, static_cast<int>(i)).second)
                fail(Errc::SchemaError, "duplicate node id '" + nodes_[i].id + "'");
        }
    }

    void build_edges() {
        edges_.clear();
        edge_index_.clear();
        out_edges_.assign(nodes_.size(), {});
        in_edges_.assign(nodes_.size(), {});
        for (std::size_t v = 0; v < nodes_.size(); ++v) {
            const NodeSpec& n = nodes_[v];
            for (std::size_t slot = 0; slot < n.parents.size(); ++slot) {
                const int u = find(n.parents[slot]);
                if (u < 0)
                    fail(Errc::UnknownParent,
                         "node '" + n.id + "' lists unknown parent '" + n.parents[slot] + "'");
                const int e = static_cast<int>(edges_.size());
                if (!edge_index_.emplace(edge_key(u, static_cast<int>(v)), e).second)
                    fail(Errc::SchemaError,
                         "duplicate edge " + n.parents[slot] + " -> " + n.id);
                edges_.push_back(Edge{u, static_cast<int>(v), static_cast<int>(slot)});
                out_edges_[static_cast<std::size_t>(u)].push_back(e);
                in_edges_[v].push_back(e);
            }
        }
    }

    void compute_topo() {
        // Kahn's algorithm; the ready set is a min-heap on node id so the
        // order is a deterministic function of the graph alone.
        auto cmp = [this](int a, int b) {
            return nodes_[static_cast<std::size_t>(a)].id > nodes_[static_cast<std::size_t>(b)].id;
        };
        std::priority_queue<int, std::vector<int>, decltype(cmp)> ready(cmp);
        std::vector<int> degree(nodes_.size(), 0);
        for (std::size_t v = 0; v < nodes_.size(); ++v) {
            degree[v] = static_cast<int>(in_edges_[v].size());
            if (degree[v] == 0) ready.push(static_cast<int>(v));
        }
        topo_.clear();
        while (!ready.empty()) {
            const int u = ready.top();
            ready.pop();
            topo_.push_back(u);
            for (const int e : out_edges_[static_cast<std::size_t>(u)]) {
                const int v = edges_[static_cast<std::size_t>(e)].dst;
                if (--degree[static_cast<std::size_t>(v)] == 0) ready.push(v);
            }
        }
        if (topo_.size() != nodes_.size()) {
            std::string stuck;
            for (std::size_t v = 0; v < nodes_.size(); ++v)
                if (degree[v] > 0) stuck += (stuck.empty() ? "" : ", ") + nodes_[v].id;
            fail(Errc::CycleDetected, "cycle through: " + stuck);
        }
    }

    void check_connectivity() {
        // forward from sources
        std::vector<char> from_source(nodes_.size(), 0);
        for (const int u : topo_) {
            const NodeSpec& n = nodes_[static_cast<std::size_t>(u)];
            if (n.kind == NodeKind::Source) from_source[static_cast<std::size_t>(u)] = 1;
            if (!from_source[static_cast<std::size_t>(u)]) continue;
            for (const int e : out_edges_[static_cast<std::size_t>(u)])
                from_source[static_cast<std::size_t>(edges_[static_cast<std::size_t>(e)].dst)] = 1;
        }
        // backward from the sink
        std::vector<char> to_sink(nodes_.size(), 0);
        to_sink[static_cast<std::size_t>(sink_)] = 1;
        for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
            if (!to_sink[static_cast<std::size_t>(*it)]) continue;
            for (const int e : in_edges_[static_cast<std::size_t>(*it)])
                to_sink[static_cast<std::size_t>(edges_[static_cast<std::size_t>(e)].src)] = 1;
        }
        for (std::size_t v = 0; v < nodes_.size(); ++v)
            if (!from_source[v] || !to_sink[v])
                fail(Errc::DeadNode, "node '" + nodes_[v].id + "' lies on no source-to-sink path");
    }

    void validate_nodes() const {
        for (const NodeSpec& n : nodes_) {
            const bool structural_source = n.parents.empty() && !n.function.has_value();
            if (n.kind == NodeKind::Source) {
                if (!n.parents.empty())
                    fail(Errc::SchemaError, "source '" + n.id + "' must not have parents");
                if (n.function.has_value())
                    fail(Errc::SchemaError, "source '" + n.id + "' must not have a function");
            } else {
                if (structural_source)
                    fail(Errc::SchemaError,
                         "node '" + n.id + "' has no parents and no function; declare it a source");
                if (!n.function.has_value())
                    fail(Errc::SchemaError, "non-source '" + n.id + "' needs a function");
                if (n.is_noise)
                    fail(Errc::SchemaError, "noise node '" + n.id + "' must be a source");
            }
            // duplicate-free parent list
            for (std::size_t i = 0; i < n.parents.size(); ++i)
                for (std::size_t j = i + 1; j < n.parents.size(); ++j)
                    if (n.parents[i] == n.parents[j])
                        fail(Errc::SchemaError,
                             "node '" + n.id + "' lists parent '" + n.parents[i] + "' twice");
            if (n.function) validate_function(n);
        }
    }

    void validate_function(const NodeSpec& n) const {
        const FunctionSpec& fn = *n.function;
        const auto arity = fn.arity();
        if (arity && *arity != n.parents.size())
            fail(Errc::ArityMismatch, "node '" + n.id + "': function takes " +
                                          std::to_string(*arity) + " inputs but has " +
                                          std::to_string(n.parents.size()) + " parents");
        if (fn.min_arity() > n.parents.size())
            fail(Errc::ArityMismatch, "node '" + n.id + "': function needs at least " +
                                          std::to_string(fn.min_arity()) + " inputs but has " +
                                          std::to_string(n.parents.size()) + " parents");
        if (fn.kind == FunctionKind::Expression) {
            // expression variables bind by name to a prefix of the parent
            // list; trailing parents may go unused (structural dummies)
            for (std::size_t i = 0; i < fn.vars.size(); ++i)
                if (fn.vars[i] != n.parents[i])
                    fail(Errc::SchemaError, "node '" + n.id + "': expression variable '" +
                                                fn.vars[i] + "' does not match parent '" +
                                                n.parents[i] + "'");
        }
        if (fn.kind == FunctionKind::Table) {
            for (std::size_t slot = 0; slot < fn.table.key_arity; ++slot) {
                const int p = find(n.parents[slot]);
                const NodeSpec& parent = nodes_[static_cast<std::size_t>(p)];
                if (parent.domain.empty())
                    fail(Errc::SchemaError, "node '" + n.id + "': table key position " +
                                                std::to_string(slot) + " needs a categorical parent");
            }
            for (const TableEntry& entry : fn.table.entries) {
                if (entry.key.size() != fn.table.key_arity)
                    fail(Errc::SchemaError, "node '" + n.id + "': table key width mismatch");
                for (std::size_t slot = 0; slot < entry.key.size(); ++slot) {
                    const int p = find(n.parents[slot]);
                    const NodeSpec& parent = nodes_[static_cast<std::size_t>(p)];
                    if (!entry.key[slot].is_category() ||
                        std::find(parent.domain.begin(), parent.domain.end(),
                                  entry.key[slot].label()) == parent.domain.end())
                        fail(Errc::SchemaError, "node '" + n.id + "': table key value '" +
                                                    entry.key[slot].to_string() +
                                                    "' is outside the domain of '" + parent.id + "'");
                }
                if (entry.is_distribution()) {
                    double total = 0.0;
                    for (const double p : entry.probs) {
                        if (p < 0.0) fail(Errc::InvalidDistribution,
                                          "node '" + n.id + "': negative probability");
                        total += p;
                    }
                    if (std::fabs(total - 1.0) > 1e-9)
                        fail(Errc::InvalidDistribution,
                             "node '" + n.id + "': probabilities sum to " + std::to_string(total));
                    if (fn.table.output_labels != n.domain)
                        fail(Errc::SchemaError,
                             "node '" + n.id + "': distribution labels must equal the node domain");
                }
            }
        }
    }

    void validate_and_index(const std::string& sink_id) {
        index_nodes();
        validate_nodes();
        build_edges();
        compute_topo();

        sink_ = find(sink_id);
        if (sink_ < 0) fail(Errc::SchemaError, "declared sink '" + sink_id + "' does not exist");
        if (!out_edges_[static_cast<std::size_t>(sink_)].empty())
            fail(Errc::SchemaError, "declared sink '" + sink_id + "' has outgoing edges");
        if (nodes_[static_cast<std::size_t>(sink_)].kind != NodeKind::Sink)
            fail(Errc::SchemaError, "declared sink '" + sink_id + "' must have kind 'sink'");
        if (nodes_[static_cast<std::size_t>(sink_)].parents.empty())
            fail(Errc::SchemaError, "sink '" + sink_id + "' has no inputs");
        for (std::size_t v = 0; v < nodes_.size(); ++v) {
            if (out_edges_[v].empty() && static_cast<int>(v) != sink_)
                fail(Errc::MultipleSinks,
                     "node '" + nodes_[v].id + "' is a second sink (no outgoing edges)");
            if (nodes_[v].kind == NodeKind::Sink && static_cast<int>(v) != sink_)
                fail(Errc::MultipleSinks, "node '" + nodes_[v].id + "' also declares kind 'sink'");
        }
        check_connectivity();
    }

    std::vector<NodeSpec> nodes_;
    std::unordered_map<std::string, int> index_;
    std::vector<Edge> edges_;
    std::unordered_map<std::uint64_t, int> edge_index_;
    std::vector<std::vector<int>> out_edges_;
    std::vector<std::vector<int>> in_edges_;
    std::vector<int> topo_;
    int sink_ = -1;
    int super_source_ = -1;
};

inline CausalGraph augment_super_source(const CausalGraph& g) { return g.augmented(); }

// Node ids in deterministic topological order.
inline std::vector<std::string> topological_order(const CausalGraph& g) {
    std::vector<std::string> out;
    out.reserve(g.node_count());
    for (const int i : g.topo()) out.push_back(g.node(i).id);
    return out;
}

}  // namespace flowcredit
