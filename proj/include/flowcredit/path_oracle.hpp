#pragma once

#include <map>
#include <vector>

#include "flowcredit/flow.hpp"
#include "flowcredit/paths.hpp"

namespace flowcredit {

// Shapley Flow through the path formulation: each configuration induces an
// ordering over source-to-sink paths; a path's credit is the mean, over
// configurations, of the change in payoff when it is appended to the paths
// before it, where the payoff of a path list replays their edges in sequence
// from the background state. Edge credit sums the credits of the paths
// through it.
//
// This route shares no state with the depth-first engine beyond the graph
// itself, which makes it the cross-check oracle for small graphs.
struct PathAttribution {
    std::vector<Path> paths;
    std::vector<double> path_credit;
    EdgeAttribution edges;
};

inline PathAttribution shapley_flow_paths(const CausalGraph& g, const Sample& bg, const Sample& fg,
                                          const FlowOptions& opts = {}) {
    flow_detail::require_augmented(g);
    PathAttribution out;
    out.paths = all_paths(g, opts.config_cap);

    std::map<std::vector<int>, int> path_id;
    for (std::size_t i = 0; i < out.paths.size(); ++i)
        path_id[out.paths[i].edges] = static_cast<int>(i);

    const Game game(g, bg, fg);  // finest boundary: game edges == graph edges
    const auto plan = flow_detail::make_visit_plan(game);
    if (plan.config_count == flow_detail::kSaturated || plan.config_count > opts.config_cap)
        fail(Errc::SizeLimitExceeded,
             "path oracle is limited to " + std::to_string(opts.config_cap) + " configurations");

    // the induced path ordering depends on the configuration alone
    std::vector<std::uint32_t> digits(plan.slot_count);
    std::vector<std::uint32_t> visit_counter(static_cast<std::size_t>(game.dyn_count()));
    std::vector<std::vector<int>> level_order(static_cast<std::size_t>(game.dyn_count()) + 1);
    std::vector<int> stack;
    std::vector<int> arrivals;

    auto walk = [&](auto&& self, int u, int depth) -> void {
        auto& order = level_order[static_cast<std::size_t>(depth)];
        const auto& base = game.out_edges(u);
        order.assign(base.begin(), base.end());
        const std::uint32_t visit = visit_counter[static_cast<std::size_t>(u)]++;
        if (order.size() > 1)
            flow_detail::ExactOrderer{&plan, digits.data()}(u, visit, std::span<int>(order));
        for (const int e : order) {
            stack.push_back(e);
            const int dst = game.edges()[static_cast<std::size_t>(e)].dst;
            if (dst == game.dyn_count()) {
                const auto it = path_id.find(stack);
                if (it == path_id.end())
                    fail(Errc::InvalidArgument, "search reached the sink along an unknown path");
                arrivals.push_back(it->second);
            } else {
                self(self, dst, depth + 1);
            }
            stack.pop_back();
        }
    };

    out.path_credit.assign(out.paths.size(), 0.0);
    EvalState state(game);
    const double scale = 1.0 / static_cast<double>(plan.config_count);
    for (std::uint64_t idx = 0; idx < plan.config_count; ++idx) {
        flow_detail::decode_digits(plan, idx, digits.data());
        std::fill(visit_counter.begin(), visit_counter.end(), 0u);
        arrivals.clear();
        stack.clear();
        walk(walk, game.root(), 0);
        if (arrivals.size() != out.paths.size())
            fail(Errc::InvalidArgument, "a configuration did not complete every path exactly once");

        // payoff of each prefix of the induced path list, replayed in one pass
        state.reset();
        double prev = state.sink_value();
        for (const int pid : arrivals) {
            for (const int e : out.paths[static_cast<std::size_t>(pid)].edges) state.fire(e);
            const double now = state.sink_value();
            out.path_credit[static_cast<std::size_t>(pid)] += (now - prev) * scale;
            prev = now;
        }
    }

    out.edges.method = Method::PathOracle;
    out.edges.config_count = plan.config_count;
    out.edges.credit.assign(g.edge_count(), 0.0);
    for (std::size_t p = 0; p < out.paths.size(); ++p)
        for (const int e : out.paths[p].edges)
            out.edges.credit[static_cast<std::size_t>(e)] += out.path_credit[p];
    out.edges.foreground_output = game.foreground_output();
    out.edges.background_output = game.background_output();
    out.edges.target_delta = game.target_delta();
    return out;
}

}  // namespace flowcredit
