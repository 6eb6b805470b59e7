#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flowcredit/graph.hpp"
#include "flowcredit/rng.hpp"
#include "flowcredit/sample.hpp"

namespace flowcredit {

struct RandomGraphConfig {
    int node_count = 10;
    double edge_probability = 0.5;
    std::uint64_t seed = 0;
};

// Draws standard-normal values for every source of a graph. Deterministic per
// seed and independent of the topology/weight streams.
class SampleGenerator {
public:
    SampleGenerator(const CausalGraph& g, std::uint64_t seed) : rng_(seed) {
        for (const int s : g.source_nodes()) ids_.push_back(g.node(s).id);
    }

    Sample next() {
        Sample s;
        for (const std::string& id : ids_) s.set(id, Value(rng_.normal()));
        return s;
    }

private:
    std::vector<std::string> ids_;
    Rng rng_;
};

struct GeneratedSystem {
    CausalGraph graph;
    SampleGenerator sampler;
};

// Random linear DAG over indexed nodes: edge j -> i drawn with probability p
// for j < i, linear node functions with standard-normal weights, node n as
// the sink. Draws that violate the single-sink/connectivity contract are
// regenerated, up to a retry cap.
inline GeneratedSystem gen_random_linear_graph(const RandomGraphConfig& cfg) {
    if (cfg.node_count < 2) fail(Errc::InvalidArgument, "need at least two nodes");
    if (cfg.edge_probability < 0.0 || cfg.edge_probability > 1.0)
        fail(Errc::InvalidArgument, "edge probability must lie in [0, 1]");

    Rng topology(derive_seed(cfg.seed, 1));
    Rng weights(derive_seed(cfg.seed, 2));
    const int n = cfg.node_count;

    auto node_id = [&](int i) {
        if (i == n) return std::string("f");
        std::string num = std::to_string(i);
        while (num.size() < std::to_string(n).size()) num.insert(num.begin(), '0');
        return "x" + num;
    };

    constexpr int kRetryCap = 64;
    for (int attempt = 0; attempt < kRetryCap; ++attempt) {
        std::vector<NodeSpec> nodes;
        for (int i = 1; i <= n; ++i) {
            NodeSpec spec;
            spec.id = node_id(i);
            for (int j = 1; j < i; ++j)
                if (topology.bernoulli(cfg.edge_probability)) spec.parents.push_back(node_id(j));
            if (spec.parents.empty()) {
                spec.kind = NodeKind::Source;
            } else {
                spec.kind = i == n ? NodeKind::Sink : NodeKind::Internal;
                std::vector<double> w(spec.parents.size());
                for (double& wi : w) wi = weights.normal();
                spec.function = FunctionSpec::linear(std::move(w), 0.0);
            }
            nodes.push_back(std::move(spec));
        }
        try {
            CausalGraph graph = CausalGraph::build(std::move(nodes), node_id(n));
            SampleGenerator sampler(graph, derive_seed(cfg.seed, 3));
            return GeneratedSystem{std::move(graph), std::move(sampler)};
        } catch (const FlowError&) {
            // degenerate draw (second sink, unreachable sink, ...); redraw
        }
    }
    fail(Errc::DegenerateGraph,
         "no valid draw in " + std::to_string(kRetryCap) + " attempts (p too small?)");
}

struct ChainFixture {
    CausalGraph graph;
    Sample background;
    Sample foreground;
    double delta = 0.0;
};

// X1 -> X2 -> ... -> Xn as identity copies, sink f = Xn, plus functionally
// ignored edges Xi -> f for i < n.
inline ChainFixture make_chain(int length, double delta) {
    if (length < 2) fail(Errc::InvalidArgument, "chain needs at least two nodes");
    std::vector<NodeSpec> nodes;
    auto id = [](int i) { return "X" + std::to_string(i); };
    for (int i = 1; i <= length; ++i) {
        NodeSpec spec;
        spec.id = id(i);
        if (i == 1) {
            spec.kind = NodeKind::Source;
        } else {
            spec.kind = NodeKind::Internal;
            spec.parents = {id(i - 1)};
            spec.function = FunctionSpec::linear({1.0}, 0.0);
        }
        nodes.push_back(std::move(spec));
    }
    NodeSpec sink;
    sink.id = "f";
    sink.kind = NodeKind::Sink;
    std::vector<double> w(static_cast<std::size_t>(length), 0.0);
    w.back() = 1.0;
    for (int i = 1; i <= length; ++i) sink.parents.push_back(id(i));
    sink.function = FunctionSpec::linear(std::move(w), 0.0);
    nodes.push_back(std::move(sink));

    ChainFixture fx{CausalGraph::build(std::move(nodes), "f"), Sample{}, Sample{}, delta};
    fx.background.set("X1", Value(0.0));
    fx.foreground.set("X1", Value(delta));
    return fx;
}

// Per-node value changes; identity copies force them all equal.
inline ChainFixture make_chain(std::span<const double> deltas) {
    if (deltas.size() < 2) fail(Errc::InvalidArgument, "chain needs at least two nodes");
    for (const double d : deltas)
        if (d != deltas[0])
            fail(Errc::InvalidArgument,
                 "chain nodes are exact copies, so all per-node deltas must be equal");
    return make_chain(static_cast<int>(deltas.size()), deltas[0]);
}

struct CaseFixture {
    CausalGraph graph;
    Sample background;
    Sample foreground;
};

// f = x1 or x2 with x = (1,1), x' = (0,0).
inline CaseFixture make_or_game() {
    std::vector<NodeSpec> nodes(3);
    nodes[0].id = "x1";
    nodes[0].kind = NodeKind::Source;
    nodes[1].id = "x2";
    nodes[1].kind = NodeKind::Source;
    nodes[2].id = "f";
    nodes[2].kind = NodeKind::Sink;
    nodes[2].parents = {"x1", "x2"};
    nodes[2].function = parse_expression("x1 or x2", {"x1", "x2"});
    CaseFixture fx{CausalGraph::build(std::move(nodes), "f"), Sample{}, Sample{}};
    fx.background.set("x1", Value(0.0)).set("x2", Value(0.0));
    fx.foreground.set("x1", Value(1.0)).set("x2", Value(1.0));
    return fx;
}

// a -> {b, c} -> f with identity branches and f = b + c.
inline CaseFixture make_diamond() {
    std::vector<NodeSpec> nodes(4);
    nodes[0].id = "a";
    nodes[0].kind = NodeKind::Source;
    nodes[1].id = "b";
    nodes[1].kind = NodeKind::Internal;
    nodes[1].parents = {"a"};
    nodes[1].function = FunctionSpec::linear({1.0});
    nodes[2].id = "c";
    nodes[2].kind = NodeKind::Internal;
    nodes[2].parents = {"a"};
    nodes[2].function = FunctionSpec::linear({1.0});
    nodes[3].id = "f";
    nodes[3].kind = NodeKind::Sink;
    nodes[3].parents = {"b", "c"};
    nodes[3].function = FunctionSpec::linear({1.0, 1.0});
    CaseFixture fx{CausalGraph::build(std::move(nodes), "f"), Sample{}, Sample{}};
    fx.background.set("a", Value(0.0));
    fx.foreground.set("a", Value(1.0));
    return fx;
}

// Noise interval of an observed category: the slice of the uniform [0,1)
// driver that inverse-CDF sampling maps onto that category.
inline NoiseInterval infer_noise_interval(std::span<const double> probs, int observed) {
    double total = 0.0;
    for (const double p : probs) {
        if (p < 0.0) fail(Errc::InvalidDistribution, "negative probability");
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        fail(Errc::InvalidDistribution, "probabilities sum to " + std::to_string(total));
    if (observed < 0 || static_cast<std::size_t>(observed) >= probs.size())
        fail(Errc::InvalidDistribution, "observed category index out of range");
    double lower = 0.0;
    for (int c = 0; c < observed; ++c) lower += probs[static_cast<std::size_t>(c)];
    const double upper = lower + probs[static_cast<std::size_t>(observed)];
    if (!(lower < upper))
        fail(Errc::InvalidDistribution, "observed category has zero probability");
    return NoiseInterval{lower, std::min(upper, 1.0)};
}

enum class ResidualMode { Continuous, Categorical };

// Gives every internal (non-sink, non-source) node an exogenous noise parent.
// Continuous nodes become prediction + residual; categorical nodes sample
// their table distribution by inverse CDF of the noise. Already-noisy nodes
// are left alone.
inline CausalGraph augment_noise_nodes(const CausalGraph& g,
                                       const std::map<std::string, ResidualMode>& modes = {}) {
    if (g.is_augmented())
        fail(Errc::InvalidArgument, "augment noise nodes before the super source");
    std::vector<NodeSpec> nodes = g.nodes();
    std::vector<NodeSpec> noise_nodes;
    for (NodeSpec& n : nodes) {
        if (n.kind != NodeKind::Internal) continue;
        if (n.function->noise_mode != NoiseMode::None) continue;  // idempotent
        bool noisy_parent = false;
        for (const std::string& pid : n.parents)
            if (g.node(g.index_of(pid)).is_noise) noisy_parent = true;
        if (noisy_parent) continue;

        const auto mode_it = modes.find(n.id);
        const ResidualMode mode = mode_it == modes.end() ? ResidualMode::Continuous : mode_it->second;
        if (mode == ResidualMode::Categorical) {
            if (n.function->kind != FunctionKind::Table)
                fail(Errc::InvalidArgument,
                     "categorical residuals need a table function on node '" + n.id + "'");
            for (const TableEntry& entry : n.function->table.entries)
                if (!entry.is_distribution())
                    fail(Errc::InvalidArgument,
                         "categorical residuals need distribution-valued entries on '" + n.id + "'");
            n.function->noise_mode = NoiseMode::InverseCdf;
        } else {
            if (n.function->kind == FunctionKind::External)
                fail(Errc::InvalidArgument,
                     "additive residuals on external models are not supported ('" + n.id + "')");
            n.function->noise_mode = NoiseMode::Additive;
        }

        std::string noise_id = n.id + ".noise";
        while (g.find(noise_id) >= 0) noise_id += "'";
        n.parents.push_back(noise_id);
        NodeSpec noise;
        noise.id = noise_id;
        noise.kind = NodeKind::Source;
        noise.is_noise = true;
        noise_nodes.push_back(std::move(noise));
    }
    for (NodeSpec& n : noise_nodes) nodes.push_back(std::move(n));
    return CausalGraph::build(std::move(nodes), g.node(g.sink()).id);
}

}  // namespace flowcredit
