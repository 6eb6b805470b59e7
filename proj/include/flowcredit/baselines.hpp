#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "flowcredit/flow.hpp"
#include "flowcredit/sample.hpp"

namespace flowcredit {

// Classic cooperative game over a set of players: the payoff fixes members of
// the coalition to foreground values and everyone else to background.
struct SetGame {
    int players = 0;
    std::function<double(std::uint32_t mask)> payoff;
};

// Exact Shapley values by subset enumeration, feasible up to 12 players.
inline std::vector<double> brute_force_shapley(const SetGame& game) {
    const int d = game.players;
    if (d < 1 || d > 12)
        fail(Errc::TooManyPlayers, "brute force handles 1..12 players, got " + std::to_string(d));
    const std::uint32_t full = (1u << d) - 1u;
    std::vector<double> payoff(full + 1u);
    for (std::uint32_t mask = 0; mask <= full; ++mask) payoff[mask] = game.payoff(mask);

    std::vector<double> fact(static_cast<std::size_t>(d) + 1, 1.0);
    for (int i = 1; i <= d; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * i;
    std::vector<double> weight(static_cast<std::size_t>(d), 0.0);
    for (int s = 0; s < d; ++s)
        weight[static_cast<std::size_t>(s)] =
            fact[static_cast<std::size_t>(s)] * fact[static_cast<std::size_t>(d - 1 - s)] /
            fact[static_cast<std::size_t>(d)];

    std::vector<double> shapley(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) {
        const std::uint32_t bit = 1u << i;
        double total = 0.0;
        for (std::uint32_t mask = 0; mask <= full; ++mask) {
            if (mask & bit) continue;
            const int s = __builtin_popcount(mask);
            total += weight[static_cast<std::size_t>(s)] * (payoff[mask | bit] - payoff[mask]);
        }
        shapley[static_cast<std::size_t>(i)] = total;
    }
    return shapley;
}

// Independent-perturbation SHAP of a bare model: the flat game that toggles
// each input between its background and foreground value.
inline std::map<std::string, double> independent_shap(const FunctionSpec& model,
                                                      const std::vector<std::string>& names,
                                                      const std::vector<Value>& bg,
                                                      const std::vector<Value>& fg,
                                                      ExternalRuntime* runtime = nullptr) {
    if (names.size() != bg.size() || names.size() != fg.size())
        fail(Errc::InvalidArgument, "names, background, and foreground must align");
    const int d = static_cast<int>(names.size());
    SetGame game;
    game.players = d;
    game.payoff = [&](std::uint32_t mask) {
        std::vector<Value> args(names.size());
        for (int i = 0; i < d; ++i) args[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? fg[static_cast<std::size_t>(i)] : bg[static_cast<std::size_t>(i)];
        Value out;
        if (model.kind == FunctionKind::External) {
            if (!runtime) fail(Errc::InvalidArgument, "external model needs a runtime");
            std::vector<std::pair<std::string, Value>> named;
            for (int i = 0; i < d; ++i) named.emplace_back(names[static_cast<std::size_t>(i)], args[static_cast<std::size_t>(i)]);
            out = runtime->call("independent_shap", model.external, named);
        } else {
            out = evaluate_function(model, args);
        }
        return out.real();
    };
    const std::vector<double> values = brute_force_shapley(game);
    std::map<std::string, double> out;
    for (int i = 0; i < d; ++i) out[names[static_cast<std::size_t>(i)]] = values[static_cast<std::size_t>(i)];
    return out;
}

// Flattens a causal system: the sink's function over its direct inputs, with
// input values induced by forward evaluation of each sample.
inline std::map<std::string, double> independent_shap(const CausalGraph& g, const Sample& bg,
                                                      const Sample& fg) {
    ExternalRuntime runtime;
    const auto bgv = forward_values(g, bg, &runtime);
    const auto fgv = forward_values(g, fg, &runtime);
    const NodeSpec& sink = g.node(g.sink());
    std::vector<Value> bg_args;
    std::vector<Value> fg_args;
    for (const std::string& pid : sink.parents) {
        const int p = g.index_of(pid);
        bg_args.push_back(bgv[static_cast<std::size_t>(p)]);
        fg_args.push_back(fgv[static_cast<std::size_t>(p)]);
    }
    return independent_shap(*sink.function, sink.parents, bg_args, fg_args, &runtime);
}

// Owen values for a depth-2 tree over the sink's inputs: sources are blocks,
// each feature hangs off one block and feeds the sink. Restricting play to
// permutations where blocks stay contiguous yields the Owen value of each
// feature, reported per leaf edge (feature -> sink).
inline std::map<std::string, double> owen_oracle(const CausalGraph& g, const Sample& bg,
                                                 const Sample& fg) {
    const NodeSpec& sink_node = g.node(g.sink());
    std::vector<int> features;
    std::vector<int> blocks;
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        const int vi = static_cast<int>(v);
        if (vi == g.super_source() || vi == g.sink()) continue;
        const NodeSpec& n = g.node(vi);
        if (n.kind == NodeKind::Source)
            blocks.push_back(vi);
        else
            features.push_back(vi);
    }
    // shape checks: block -> feature -> sink, nothing else
    for (const int b : blocks) {
        for (const int e : g.out_edges(b)) {
            const int c = g.edge(e).dst;
            if (c == g.sink() || g.node(c).kind != NodeKind::Internal)
                fail(Errc::NotATree, "block '" + g.node(b).id + "' must point only at features");
        }
        if (g.out_edges(b).empty())
            fail(Errc::NotATree, "block '" + g.node(b).id + "' has no features");
    }
    for (const int f : features) {
        const auto& in = g.in_edges(f);
        const auto& out = g.out_edges(f);
        const bool one_block_parent =
            in.size() == 1 && g.node(g.edge(in[0]).src).kind == NodeKind::Source;
        const bool only_sink_child = out.size() == 1 && g.edge(out[0]).dst == g.sink();
        if (!one_block_parent || !only_sink_child)
            fail(Errc::NotATree,
                 "feature '" + g.node(f).id + "' must have one block parent and feed only the sink");
    }
    if (sink_node.parents.size() != features.size())
        fail(Errc::NotATree, "every sink input must be a feature");
    const int d = static_cast<int>(features.size());
    if (d < 1 || d > 10)
        fail(Errc::TooManyPlayers, "Owen oracle handles 1..10 features, got " + std::to_string(d));

    ExternalRuntime runtime;
    const auto bgv = forward_values(g, bg, &runtime);
    const auto fgv = forward_values(g, fg, &runtime);

    // player index = sink parent slot
    std::map<std::string, int> slot_of;
    for (std::size_t s = 0; s < sink_node.parents.size(); ++s)
        slot_of[sink_node.parents[s]] = static_cast<int>(s);

    std::vector<double> payoff(1u << d);
    for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
        std::vector<Value> args(sink_node.parents.size());
        for (std::size_t s = 0; s < sink_node.parents.size(); ++s) {
            const int p = g.index_of(sink_node.parents[s]);
            args[s] = (mask >> s) & 1u ? fgv[static_cast<std::size_t>(p)] : bgv[static_cast<std::size_t>(p)];
        }
        payoff[mask] = evaluate_node(g, g.sink(), args, &runtime).real();
    }

    // members of each block, as sink slots
    std::vector<std::vector<int>> block_slots;
    for (const int b : blocks) {
        std::vector<int> slots;
        for (const int e : g.out_edges(b)) slots.push_back(slot_of.at(g.node(g.edge(e).dst).id));
        std::sort(slots.begin(), slots.end());
        block_slots.push_back(std::move(slots));
    }

    // every block-contiguous permutation: blocks in any order, features in
    // any order inside their block; accumulate marginals per full sequence
    std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
    std::uint64_t denom = 0;
    std::vector<int> sequence;
    sequence.reserve(static_cast<std::size_t>(d));
    std::vector<int> block_order(block_slots.size());
    for (std::size_t i = 0; i < block_order.size(); ++i) block_order[i] = static_cast<int>(i);

    auto emit_sequence = [&] {
        std::uint32_t mask = 0;
        for (const int s : sequence) {
            const std::uint32_t bit = 1u << s;
            acc[static_cast<std::size_t>(s)] += payoff[mask | bit] - payoff[mask];
            mask |= bit;
        }
        ++denom;
    };
    auto per_block = [&](auto&& self, std::size_t bi) -> void {
        if (bi == block_order.size()) {
            emit_sequence();
            return;
        }
        std::vector<int> slots = block_slots[static_cast<std::size_t>(block_order[bi])];
        do {
            sequence.insert(sequence.end(), slots.begin(), slots.end());
            self(self, bi + 1);
            sequence.resize(sequence.size() - slots.size());
        } while (std::next_permutation(slots.begin(), slots.end()));
    };
    do {
        per_block(per_block, 0);
    } while (std::next_permutation(block_order.begin(), block_order.end()));

    std::map<std::string, double> out;
    for (const auto& [name, slot] : slot_of)
        out[name] = acc[static_cast<std::size_t>(slot)] / static_cast<double>(denom);
    return out;
}

// Direct and intervention (indirect) effects, defined for all-linear systems:
// direct(i) is the sink's own weight on i times i's value change; indirect(i)
// re-evaluates the system with i forced to its foreground value while every
// other source stays at background.
struct GroundTruthEffects {
    std::map<std::string, double> direct;
    std::map<std::string, double> indirect;
};

inline GroundTruthEffects linear_ground_truth(const CausalGraph& g, const Sample& bg,
                                              const Sample& fg) {
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        const NodeSpec& n = g.node(static_cast<int>(v));
        if (!n.function) continue;
        if (n.function->kind != FunctionKind::Linear || n.function->noise_mode == NoiseMode::InverseCdf)
            fail(Errc::NotLinear, "node '" + n.id + "' is not a linear form");
    }
    const auto bgv = forward_values(g, bg);
    const auto fgv = forward_values(g, fg);
    const NodeSpec& sink = g.node(g.sink());
    const double base = bgv[static_cast<std::size_t>(g.sink())].real();

    // sink weight per direct parent; an additive noise input has weight 1
    std::map<int, double> sink_weight;
    for (std::size_t s = 0; s < sink.parents.size(); ++s) {
        const double w = s < sink.function->weights.size() ? sink.function->weights[s] : 1.0;
        sink_weight[g.index_of(sink.parents[s])] = w;
    }

    GroundTruthEffects out;
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        const int vi = static_cast<int>(v);
        if (vi == g.sink() || vi == g.super_source()) continue;
        const NodeSpec& n = g.node(vi);
        const double dx = fgv[v].real() - bgv[v].real();
        const auto it = sink_weight.find(vi);
        out.direct[n.id] = it == sink_weight.end() ? 0.0 : it->second * dx;
        const auto intervened = forward_values(g, bg, nullptr, vi, fgv[v]);
        out.indirect[n.id] = intervened[static_cast<std::size_t>(g.sink())].real() - base;
    }
    return out;
}

}  // namespace flowcredit
