#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowcredit/boundary.hpp"
#include "flowcredit/external.hpp"
#include "flowcredit/graph.hpp"
#include "flowcredit/sample.hpp"

namespace flowcredit {

// One message-passing game: the data side of a boundary stays dynamic, the
// model side collapses into a virtual sink that re-evaluates instantly
// whenever a cut edge delivers a message. Explaining the whole graph is the
// special case of the finest boundary (F = {sink}).
//
// State semantics: every node starts at its background-derived value; firing
// an edge makes the source's current value visible to the target, which
// recomputes from, per parent, the last transmitted value (background-derived
// if that parent edge never fired). Edges leaving the super source deliver
// the target's foreground value.
class Game {
public:
    struct GameEdge {
        int src = -1;        // dynamic-node index
        int dst = -1;        // dynamic-node index, or dyn_count() for the sink
        int dst_slot = -1;   // arg slot (dynamic target) or cut slot (sink)
        int graph_edge = -1;
    };

    Game(const CausalGraph& g, const Sample& bg, const Sample& fg,
         ExternalRuntime* init_runtime = nullptr)
        : Game(g, bg, fg, finest_boundary(g), init_runtime) {}

    Game(const CausalGraph& g, const Sample& bg, const Sample& fg, const Boundary& boundary,
         ExternalRuntime* init_runtime = nullptr)
        : graph_(&g) {
        ExternalRuntime local_runtime;
        ExternalRuntime* rt = init_runtime ? init_runtime : &local_runtime;
        const std::vector<Value> bg_values = forward_values(g, bg, rt);
        {
            const Value out = forward_values(g, fg, rt)[static_cast<std::size_t>(g.sink())];
            if (out.is_category())
                fail(Errc::DomainError, "categorical sink outputs are not supported");
            fg_output_ = out.real();
        }

        std::vector<char> in_data(g.node_count(), 0);
        for (const int v : boundary.data_side) in_data[static_cast<std::size_t>(v)] = 1;

        // dynamic nodes in topological order, so ascending index is topo order
        dyn_of_.assign(g.node_count(), -1);
        for (const int v : g.topo())
            if (in_data[static_cast<std::size_t>(v)]) {
                dyn_of_[static_cast<std::size_t>(v)] = static_cast<int>(dyn_nodes_.size());
                dyn_nodes_.push_back(v);
            }

        // edges: D-internal keep their slot; D->F edges feed the virtual sink
        out_edges_.assign(dyn_nodes_.size(), {});
        in_degree_.assign(dyn_nodes_.size(), 0);
        std::vector<int> cut_slot_of_edge(g.edge_count(), -1);
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            const Edge& ed = g.edge(static_cast<int>(e));
            const bool su = in_data[static_cast<std::size_t>(ed.src)];
            const bool sv = in_data[static_cast<std::size_t>(ed.dst)];
            if (!su) continue;  // F-internal edges are implicit in the sink evaluation
            GameEdge ge;
            ge.src = dyn_of_[static_cast<std::size_t>(ed.src)];
            ge.graph_edge = static_cast<int>(e);
            if (sv) {
                ge.dst = dyn_of_[static_cast<std::size_t>(ed.dst)];
                ge.dst_slot = ed.dst_slot;
                ++in_degree_[static_cast<std::size_t>(ge.dst)];
            } else {
                ge.dst = static_cast<int>(dyn_nodes_.size());
                ge.dst_slot = cut_count_;
                cut_slot_of_edge[e] = cut_count_++;
            }
            out_edges_[static_cast<std::size_t>(ge.src)].push_back(static_cast<int>(edges_.size()));
            edges_.push_back(ge);
        }

        // super-source edges deliver the target's foreground value
        transmit_override_.assign(edges_.size(), std::nullopt);
        for (std::size_t ge = 0; ge < edges_.size(); ++ge) {
            const Edge& ed = g.edge(edges_[ge].graph_edge);
            if (ed.src == g.super_source()) {
                const NodeSpec& target = g.node(ed.dst);
                const Value& v = fg.at(target.id);
                check_value_domain(target, v);
                transmit_override_[ge] = v;
            }
        }

        root_ = g.is_augmented() ? dyn_of_[static_cast<std::size_t>(g.super_source())] : -1;

        // background-derived initial state
        init_value_.resize(dyn_nodes_.size());
        init_args_.resize(dyn_nodes_.size());
        for (std::size_t d = 0; d < dyn_nodes_.size(); ++d) {
            const int v = dyn_nodes_[d];
            const NodeSpec& n = g.node(v);
            if (v == g.super_source()) continue;  // carries no value of its own
            if (n.kind == NodeKind::Source && g.in_edges(v).empty()) {
                // raw graphs: exogenous inputs already hold their foreground value
                init_value_[d] = fg.at(n.id);
            } else {
                init_value_[d] = bg_values[static_cast<std::size_t>(v)];
            }
            init_args_[d].reserve(n.parents.size());
            for (const std::string& pid : n.parents) {
                const int p = g.index_of(pid);
                init_args_[d].push_back(p == g.super_source()
                                            ? bg_values[static_cast<std::size_t>(v)]
                                            : bg_values[static_cast<std::size_t>(p)]);
            }
        }
        init_slots_.resize(static_cast<std::size_t>(cut_count_));
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            if (cut_slot_of_edge[e] < 0) continue;
            const Edge& ed = g.edge(static_cast<int>(e));
            init_slots_[static_cast<std::size_t>(cut_slot_of_edge[e])] =
                ed.src == g.super_source() ? bg_values[static_cast<std::size_t>(ed.dst)]
                                           : bg_values[static_cast<std::size_t>(ed.src)];
        }

        // evaluation plan for the model side, topological order
        fplan_index_.assign(g.node_count(), -1);
        for (const int v : g.topo()) {
            if (in_data[static_cast<std::size_t>(v)]) continue;
            FNode fn;
            fn.graph_node = v;
            const NodeSpec& n = g.node(v);
            for (std::size_t slot = 0; slot < n.parents.size(); ++slot) {
                const int p = g.index_of(n.parents[slot]);
                FArg arg;
                if (in_data[static_cast<std::size_t>(p)]) {
                    const int e = g.find_edge(p, v);
                    arg.from_cut = true;
                    arg.index = cut_slot_of_edge[static_cast<std::size_t>(e)];
                } else {
                    arg.from_cut = false;
                    arg.index = fplan_index_[static_cast<std::size_t>(p)];
                }
                fn.args.push_back(arg);
            }
            if (v == g.sink()) sink_plan_pos_ = static_cast<int>(fplan_.size());
            fplan_index_[static_cast<std::size_t>(v)] = static_cast<int>(fplan_.size());
            fplan_.push_back(std::move(fn));
        }

        init_sink_ = bg_values[static_cast<std::size_t>(g.sink())].real();
    }

    const CausalGraph& graph() const { return *graph_; }
    int dyn_count() const { return static_cast<int>(dyn_nodes_.size()); }
    int sink_index() const { return dyn_count(); }
    int root() const { return root_; }
    int graph_node(int dyn) const { return dyn_nodes_[static_cast<std::size_t>(dyn)]; }
    const std::vector<GameEdge>& edges() const { return edges_; }
    const std::vector<int>& out_edges(int dyn) const { return out_edges_[static_cast<std::size_t>(dyn)]; }
    int in_degree(int dyn) const { return in_degree_[static_cast<std::size_t>(dyn)]; }
    double background_output() const { return init_sink_; }
    double foreground_output() const { return fg_output_; }
    double target_delta() const { return fg_output_ - init_sink_; }

private:
    friend class EvalState;

    struct FArg {
        bool from_cut = false;
        int index = -1;  // cut slot, or position of the parent in the plan
    };
    struct FNode {
        int graph_node = -1;
        std::vector<FArg> args;
    };

    const CausalGraph* graph_;
    std::vector<int> dyn_nodes_;
    std::vector<int> dyn_of_;
    std::vector<GameEdge> edges_;
    std::vector<std::vector<int>> out_edges_;
    std::vector<int> in_degree_;
    std::vector<std::optional<Value>> transmit_override_;
    int cut_count_ = 0;
    int root_ = -1;

    std::vector<FNode> fplan_;
    std::vector<int> fplan_index_;
    int sink_plan_pos_ = -1;

    std::vector<Value> init_value_;
    std::vector<std::vector<Value>> init_args_;
    std::vector<Value> init_slots_;
    double init_sink_ = 0.0;
    double fg_output_ = 0.0;
};

// Worker-private mutable state for one game. Owns its external-model
// processes, so states can run concurrently without sharing anything.
class EvalState {
public:
    explicit EvalState(const Game& game) : game_(&game) { reset(); }

    void reset() {
        value_ = game_->init_value_;
        args_ = game_->init_args_;
        slots_ = game_->init_slots_;
        sink_value_ = game_->init_sink_;
        updated_.assign(value_.size(), 0);
    }

    double sink_value() const { return sink_value_; }
    bool updated(int dyn) const { return updated_[static_cast<std::size_t>(dyn)] != 0; }

    // Fires one edge; returns the sink's change in value (0 unless the edge
    // enters the virtual sink).
    double fire(int game_edge) {
        const Game::GameEdge& ge = game_->edges_[static_cast<std::size_t>(game_edge)];
        const auto& ov = game_->transmit_override_[static_cast<std::size_t>(game_edge)];
        const Value& tv = ov ? *ov : value_[static_cast<std::size_t>(ge.src)];
        if (ge.dst == game_->dyn_count()) {
            slots_[static_cast<std::size_t>(ge.dst_slot)] = tv;
            const double old = sink_value_;
            sink_value_ = eval_model_side();
            return sink_value_ - old;
        }
        args_[static_cast<std::size_t>(ge.dst)][static_cast<std::size_t>(ge.dst_slot)] = tv;
        value_[static_cast<std::size_t>(ge.dst)] = eval_dynamic(ge.dst);
        updated_[static_cast<std::size_t>(ge.dst)] = 1;
        return 0.0;
    }

private:
    Value eval_dynamic(int dyn) {
        const int v = game_->dyn_nodes_[static_cast<std::size_t>(dyn)];
        const NodeSpec& n = game_->graph_->node(v);
        if (n.kind == NodeKind::Source) {
            // original source behind the super source: identity pass-through
            const Value& out = args_[static_cast<std::size_t>(dyn)][0];
            check_value_domain(n, out);
            return out;
        }
        return evaluate_node(*game_->graph_, v, args_[static_cast<std::size_t>(dyn)], &runtime_);
    }

    double eval_model_side() {
        fbuf_.resize(game_->fplan_.size());
        for (std::size_t i = 0; i < game_->fplan_.size(); ++i) {
            const Game::FNode& fn = game_->fplan_[i];
            const NodeSpec& n = game_->graph_->node(fn.graph_node);
            fargs_.clear();
            for (const Game::FArg& a : fn.args)
                fargs_.push_back(a.from_cut ? slots_[static_cast<std::size_t>(a.index)]
                                            : fbuf_[static_cast<std::size_t>(a.index)]);
            if (n.kind == NodeKind::Source) {
                // a source on the model side takes its delivered value as-is
                Value out = fargs_.empty() ? Value() : fargs_[0];
                check_value_domain(n, out);
                fbuf_[i] = std::move(out);
            } else {
                fbuf_[i] = evaluate_node(*game_->graph_, fn.graph_node, fargs_, &runtime_);
            }
        }
        const Value& out = fbuf_[static_cast<std::size_t>(game_->sink_plan_pos_)];
        if (out.is_category())
            fail(Errc::DomainError, "categorical sink outputs are not supported");
        return out.real();
    }

    const Game* game_;
    std::vector<Value> value_;
    std::vector<std::vector<Value>> args_;
    std::vector<Value> slots_;
    std::vector<char> updated_;
    std::vector<Value> fbuf_;
    std::vector<Value> fargs_;
    double sink_value_ = 0.0;
    ExternalRuntime runtime_;
};

// Replays a history of edge transmissions from the background state and
// returns the sink's final value. The empty history yields f(background).
inline double evaluate_history(const CausalGraph& g, const Sample& bg, const Sample& fg,
                               std::span<const int> edge_indices) {
    const Game game(g, bg, fg);
    // the finest boundary keeps every graph edge, in graph order
    EvalState state(game);
    for (const int e : edge_indices) {
        if (e < 0 || static_cast<std::size_t>(e) >= game.edges().size())
            fail(Errc::UnknownEdge, "history names edge index " + std::to_string(e));
        const Game::GameEdge& ge = game.edges()[static_cast<std::size_t>(e)];
        if (game.in_degree(ge.src) > 0 && !state.updated(ge.src))
            fail(Errc::UnrealizableHistory,
                 "edge " + g.edge_name(ge.graph_edge) + " fires before its source ever updated");
        state.fire(e);
    }
    return state.sink_value();
}

inline double evaluate_history(const CausalGraph& g, const Sample& bg, const Sample& fg,
                               const std::vector<std::pair<std::string, std::string>>& history) {
    std::vector<int> ids;
    ids.reserve(history.size());
    for (const auto& [src, dst] : history) ids.push_back(g.edge_index(src, dst));
    return evaluate_history(g, bg, fg, std::span<const int>(ids));
}

}  // namespace flowcredit
