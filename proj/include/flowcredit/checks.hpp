#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "flowcredit/flow.hpp"
#include "flowcredit/path_oracle.hpp"

namespace flowcredit {

struct AxiomOptions {
    double tolerance = 1e-9;        // efficiency / conservation / consistency
    double dummy_tolerance = 1e-12; // certified dummy edges must sit inside this
    std::size_t boundary_cap = 10000;
    std::uint64_t dummy_config_cap = 20000;
    FlowOptions flow;
};

// |sum of cut credit - target delta| for one boundary.
inline double efficiency_error(const CausalGraph& g, const Boundary& boundary,
                               const EdgeAttribution& attr) {
    (void)g;
    double total = 0.0;
    for (const int e : boundary.cut_edges) total += attr.credit[static_cast<std::size_t>(e)];
    return std::fabs(total - attr.target_delta);
}

// |credit in - credit out| at one node (meaningful for nodes with both).
inline double conservation_error(const CausalGraph& g, const EdgeAttribution& attr, int node) {
    double in = 0.0;
    double out = 0.0;
    for (const int e : g.in_edges(node)) in += attr.credit[static_cast<std::size_t>(e)];
    for (const int e : g.out_edges(node)) out += attr.credit[static_cast<std::size_t>(e)];
    return std::fabs(in - out);
}

// Brute-force dummy certification: an edge is dummy when dropping its
// transmissions from any realizable history never changes any intermediate
// evaluation. Walks every configuration's firing sequence (which depends on
// the configuration alone) and replays it with and without the candidate.
inline std::vector<int> certify_dummy_edges(const CausalGraph& g, const Sample& bg,
                                            const Sample& fg,
                                            std::uint64_t config_cap = 20000) {
    flow_detail::require_augmented(g);
    const Game game(g, bg, fg);
    const auto plan = flow_detail::make_visit_plan(game);
    if (plan.config_count == flow_detail::kSaturated || plan.config_count > config_cap)
        fail(Errc::SizeLimitExceeded,
             "dummy certification is limited to " + std::to_string(config_cap) + " configurations");

    // firing sequences per configuration (structural)
    std::vector<std::uint32_t> digits(plan.slot_count);
    std::vector<std::uint32_t> visit_counter(static_cast<std::size_t>(game.dyn_count()));
    std::vector<std::vector<int>> level_order(static_cast<std::size_t>(game.dyn_count()) + 1);
    std::vector<int> history;
    auto walk = [&](auto&& self, int u, int depth) -> void {
        auto& order = level_order[static_cast<std::size_t>(depth)];
        const auto& base = game.out_edges(u);
        order.assign(base.begin(), base.end());
        const std::uint32_t visit = visit_counter[static_cast<std::size_t>(u)]++;
        if (order.size() > 1)
            flow_detail::ExactOrderer{&plan, digits.data()}(u, visit, std::span<int>(order));
        for (const int e : order) {
            history.push_back(e);
            const int dst = game.edges()[static_cast<std::size_t>(e)].dst;
            if (dst != game.dyn_count()) self(self, dst, depth + 1);
        }
    };

    std::vector<char> still_dummy(game.edges().size(), 1);
    EvalState with(game);
    EvalState without(game);
    for (std::uint64_t idx = 0; idx < plan.config_count; ++idx) {
        flow_detail::decode_digits(plan, idx, digits.data());
        std::fill(visit_counter.begin(), visit_counter.end(), 0u);
        history.clear();
        walk(walk, game.root(), 0);
        for (std::size_t cand = 0; cand < game.edges().size(); ++cand) {
            if (!still_dummy[cand]) continue;
            with.reset();
            without.reset();
            for (const int e : history) {
                with.fire(e);
                if (e != static_cast<int>(cand)) without.fire(e);
                if (std::fabs(with.sink_value() - without.sink_value()) > 1e-12) {
                    still_dummy[cand] = 0;
                    break;
                }
            }
        }
    }

    std::vector<int> out;
    for (std::size_t e = 0; e < game.edges().size(); ++e)
        if (still_dummy[e]) out.push_back(game.edges()[e].graph_edge);
    return out;
}

struct BoundaryConsistencyResult {
    int boundaries_checked = 0;
    bool truncated = false;
    double max_error = 0.0;
    std::string worst_edge;
};

// Re-derives credit at every boundary with the model side collapsed into a
// black box, and compares the shared cut edges against the full attribution.
inline BoundaryConsistencyResult boundary_consistency_check(const CausalGraph& g, const Sample& bg,
                                                            const Sample& fg,
                                                            const EdgeAttribution& full,
                                                            const AxiomOptions& opts = {}) {
    BoundaryConsistencyResult res;
    const auto boundaries =
        detail::enumerate_boundaries_upto(g, opts.boundary_cap, &res.truncated);
    for (const Boundary& b : boundaries) {
        const BoundaryAttribution at = shapley_flow_at_boundary(g, b, bg, fg, opts.flow);
        std::vector<char> is_cut(g.edge_count(), 0);
        for (const int e : b.cut_edges) is_cut[static_cast<std::size_t>(e)] = 1;
        for (std::size_t ge = 0; ge < at.credit.size(); ++ge) {
            const int graph_edge = at.graph_edge[ge];
            if (!is_cut[static_cast<std::size_t>(graph_edge)]) continue;
            const double err =
                std::fabs(at.credit[ge] - full.credit[static_cast<std::size_t>(graph_edge)]);
            if (err > res.max_error) {
                res.max_error = err;
                res.worst_edge = g.edge_name(graph_edge);
            }
        }
        ++res.boundaries_checked;
    }
    return res;
}

struct AxiomFailure {
    std::string check;
    std::string subject;
    double error = 0.0;
    double tolerance = 0.0;
};

struct AxiomReport {
    int boundaries_checked = 0;
    bool boundaries_truncated = false;
    double efficiency_max_error = 0.0;
    double conservation_max_error = 0.0;
    bool dummy_checked = false;
    std::vector<std::string> certified_dummy_edges;
    double dummy_max_credit = 0.0;
    std::vector<AxiomFailure> failures;

    bool passed() const { return failures.empty(); }
};

// Efficiency across every enumerated boundary, flow conservation at every
// interior node, and optionally a brute-force dummy scan.
inline AxiomReport check_axioms(const CausalGraph& g, const EdgeAttribution& attr,
                                const Sample& bg, const Sample& fg, const AxiomOptions& opts = {},
                                bool dummy_scan = false) {
    flow_detail::require_augmented(g);
    AxiomReport report;

    const auto boundaries =
        detail::enumerate_boundaries_upto(g, opts.boundary_cap, &report.boundaries_truncated);
    for (const Boundary& b : boundaries) {
        const double err = efficiency_error(g, b, attr);
        if (err > report.efficiency_max_error) report.efficiency_max_error = err;
        ++report.boundaries_checked;
    }
    if (report.efficiency_max_error > opts.tolerance)
        report.failures.push_back(
            {"efficiency", "worst boundary", report.efficiency_max_error, opts.tolerance});

    for (std::size_t v = 0; v < g.node_count(); ++v) {
        const int vi = static_cast<int>(v);
        if (g.in_edges(vi).empty() || g.out_edges(vi).empty()) continue;
        const double err = conservation_error(g, attr, vi);
        if (err > report.conservation_max_error) report.conservation_max_error = err;
        if (err > opts.tolerance)
            report.failures.push_back({"conservation", g.node(vi).id, err, opts.tolerance});
    }

    if (dummy_scan) {
        report.dummy_checked = true;
        const auto dummies = certify_dummy_edges(g, bg, fg, opts.dummy_config_cap);
        for (const int e : dummies) {
            const double credit = std::fabs(attr.credit[static_cast<std::size_t>(e)]);
            report.certified_dummy_edges.push_back(g.edge_name(e));
            if (credit > report.dummy_max_credit) report.dummy_max_credit = credit;
            if (credit > opts.dummy_tolerance)
                report.failures.push_back({"dummy", g.edge_name(e), credit, opts.dummy_tolerance});
        }
    }
    return report;
}

}  // namespace flowcredit
