#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "flowcredit/game.hpp"
#include "flowcredit/rng.hpp"

namespace flowcredit {

enum class Method { Exact, MonteCarlo, PathOracle };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::Exact: return "exact";
        case Method::MonteCarlo: return "monte-carlo";
        case Method::PathOracle: return "path-oracle";
    }
    return "?";
}

// Credit per edge of the explained graph, plus how it was computed.
struct EdgeAttribution {
    Method method = Method::Exact;
    std::vector<double> credit;       // indexed by graph edge
    std::vector<double> std_error;    // per edge; Monte Carlo only
    std::uint64_t sample_count = 0;   // Monte Carlo
    std::uint64_t seed = 0;           // Monte Carlo
    std::uint64_t config_count = 0;   // exact
    double target_delta = 0.0;        // f(x) - f(x') (mean over backgrounds)
    double foreground_output = 0.0;
    double background_output = 0.0;
};

struct FlowOptions {
    std::uint64_t config_cap = 1000000;  // exact mode refuses beyond this
    int threads = 0;                     // 0 = hardware concurrency
};

struct McParams {
    std::uint64_t samples = 10000;
    std::uint64_t seed = 0;
};

namespace flow_detail {

constexpr std::uint64_t kSaturated = ~std::uint64_t{0};

inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return 0;
    if (a == kSaturated || b == kSaturated || a > kSaturated / b) return kSaturated;
    return a * b;
}

inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
    if (a == kSaturated || b == kSaturated || a > kSaturated - b) return kSaturated;
    return a + b;
}

inline std::uint64_t factorial(std::uint64_t n) {
    std::uint64_t f = 1;
    for (std::uint64_t i = 2; i <= n; ++i) f = sat_mul(f, i);
    return f;
}

// Reorders `items` into its rank-th lexicographic permutation.
inline void unrank_permutation(std::uint64_t rank, std::span<int> items) {
    const std::size_t m = items.size();
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const std::uint64_t f = factorial(static_cast<std::uint64_t>(m - 1 - i));
        const std::size_t j = static_cast<std::size_t>(rank / f);
        rank %= f;
        std::rotate(items.begin() + static_cast<std::ptrdiff_t>(i),
                    items.begin() + static_cast<std::ptrdiff_t>(i + j),
                    items.begin() + static_cast<std::ptrdiff_t>(i + j + 1));
    }
}

// How often each node is visited by a depth-first run, and the resulting
// configuration count: every visit independently orders the node's children,
// so a node visited v times with out-degree k contributes (k!)^v.
struct VisitPlan {
    std::vector<std::uint64_t> visits;   // per dynamic node
    std::uint64_t config_count = 1;
    // mixed-radix layout for exact enumeration (nodes with out-degree >= 2)
    std::vector<int> slot_base;          // per dynamic node, -1 if no choice
    std::vector<std::uint64_t> slot_radix;  // per slot
    std::size_t slot_count = 0;
};

inline VisitPlan make_visit_plan(const Game& game) {
    VisitPlan plan;
    const int n = game.dyn_count();
    plan.visits.assign(static_cast<std::size_t>(n), 0);
    if (game.root() >= 0) plan.visits[static_cast<std::size_t>(game.root())] = 1;
    // dynamic indices ascend in topological order
    for (int u = 0; u < n; ++u) {
        const std::uint64_t vu = plan.visits[static_cast<std::size_t>(u)];
        if (vu == 0) continue;
        for (const int e : game.out_edges(u)) {
            const int dst = game.edges()[static_cast<std::size_t>(e)].dst;
            if (dst < n)
                plan.visits[static_cast<std::size_t>(dst)] =
                    sat_add(plan.visits[static_cast<std::size_t>(dst)], vu);
        }
    }
    plan.slot_base.assign(static_cast<std::size_t>(n), -1);
    for (int u = 0; u < n; ++u) {
        const std::uint64_t k = game.out_edges(u).size();
        if (k < 2) continue;
        const std::uint64_t perms = factorial(k);
        const std::uint64_t vu = plan.visits[static_cast<std::size_t>(u)];
        for (std::uint64_t i = 0; i < vu && plan.config_count != kSaturated; ++i)
            plan.config_count = sat_mul(plan.config_count, perms);
    }
    // the mixed-radix layout is only needed when enumeration is feasible
    if (plan.config_count == kSaturated) return plan;
    for (int u = 0; u < n; ++u) {
        const std::uint64_t k = game.out_edges(u).size();
        const std::uint64_t vu = plan.visits[static_cast<std::size_t>(u)];
        if (k < 2 || vu == 0) continue;
        const std::uint64_t perms = factorial(k);
        plan.slot_base[static_cast<std::size_t>(u)] = static_cast<int>(plan.slot_count);
        plan.slot_count += static_cast<std::size_t>(vu);
        for (std::uint64_t i = 0; i < vu; ++i) plan.slot_radix.push_back(perms);
    }
    return plan;
}

// One depth-first run: fires every edge per the supplied orderings, crediting
// each sink delta to all edges on the search path that produced it.
class Runner {
public:
    explicit Runner(const Game& game) : game_(&game), state_(game) {
        visit_counter_.resize(static_cast<std::size_t>(game.dyn_count()));
        level_order_.resize(static_cast<std::size_t>(game.dyn_count()) + 1);
    }

    // orderer(node, visit_ordinal, order) permutes `order` in place
    template <class Orderer>
    void run(Orderer&& orderer, std::span<double> credit) {
        if (game_->root() < 0)
            fail(Errc::InvalidArgument, "attribution needs a super-source-augmented graph");
        state_.reset();
        std::fill(visit_counter_.begin(), visit_counter_.end(), 0u);
        path_.clear();
        dfs(game_->root(), 0, orderer, credit);
    }

    EvalState& state() { return state_; }

private:
    template <class Orderer>
    void dfs(int u, int depth, Orderer&& orderer, std::span<double> credit) {
        auto& order = level_order_[static_cast<std::size_t>(depth)];
        const auto& base = game_->out_edges(u);
        order.assign(base.begin(), base.end());
        const std::uint32_t visit = visit_counter_[static_cast<std::size_t>(u)]++;
        if (order.size() > 1) orderer(u, visit, std::span<int>(order));
        for (const int e : order) {
            const double delta = state_.fire(e);
            path_.push_back(e);
            const int dst = game_->edges()[static_cast<std::size_t>(e)].dst;
            if (dst == game_->dyn_count()) {
                if (delta != 0.0)
                    for (const int pe : path_) credit[static_cast<std::size_t>(pe)] += delta;
            } else {
                dfs(dst, depth + 1, orderer, credit);
            }
            path_.pop_back();
        }
    }

    const Game* game_;
    EvalState state_;
    std::vector<std::uint32_t> visit_counter_;
    std::vector<int> path_;
    std::vector<std::vector<int>> level_order_;
};

struct ExactOrderer {
    const VisitPlan* plan;
    const std::uint32_t* digits;
    void operator()(int node, std::uint32_t visit, std::span<int> order) const {
        const int base = plan->slot_base[static_cast<std::size_t>(node)];
        if (base < 0) return;
        unrank_permutation(digits[static_cast<std::size_t>(base) + visit], order);
    }
};

struct McOrderer {
    Rng* rng;
    void operator()(int, std::uint32_t, std::span<int> order) const { rng->shuffle(order); }
};

inline void decode_digits(const VisitPlan& plan, std::uint64_t index, std::uint32_t* digits) {
    for (std::size_t s = 0; s < plan.slot_count; ++s) {
        const std::uint64_t radix = plan.slot_radix[s];
        digits[s] = static_cast<std::uint32_t>(index % radix);
        index /= radix;
    }
}

// Fixed-size blocks processed by a small pool. Each worker owns one Runner
// (and with it, private evaluation state and external-model processes);
// per-block results are merged in block order, so the outcome is identical
// for any thread count.
inline void run_blocks(const Game& game, std::size_t block_count, int threads,
                       const std::function<void(Runner&, std::size_t)>& work) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(block_count)));
    if (threads == 1) {
        Runner runner(game);
        for (std::size_t b = 0; b < block_count; ++b) work(runner, b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::size_t err_block = ~std::size_t{0};
    std::exception_ptr error;
    auto body = [&] {
        Runner runner(game);
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= block_count) return;
            try {
                work(runner, b);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (b < err_block) {
                    err_block = b;
                    error = std::current_exception();
                }
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// Mean credit per game edge over all configurations, uniformly weighted.
inline std::vector<double> exact_credits(const Game& game, const VisitPlan& plan,
                                         const FlowOptions& opts) {
    const std::uint64_t total = plan.config_count;
    constexpr std::uint64_t kBlock = 1024;
    const std::size_t nblocks = static_cast<std::size_t>((total + kBlock - 1) / kBlock);
    const std::size_t n_edges = game.edges().size();
    std::vector<std::vector<double>> block_sums(nblocks);

    run_blocks(game, nblocks, opts.threads, [&](Runner& runner, std::size_t b) {
        std::vector<std::uint32_t> digits(plan.slot_count);
        auto& sums = block_sums[b];
        sums.assign(n_edges, 0.0);
        const std::uint64_t lo = static_cast<std::uint64_t>(b) * kBlock;
        const std::uint64_t hi = std::min<std::uint64_t>(total, lo + kBlock);
        for (std::uint64_t idx = lo; idx < hi; ++idx) {
            decode_digits(plan, idx, digits.data());
            runner.run(ExactOrderer{&plan, digits.data()}, sums);
        }
    });

    std::vector<double> credit(n_edges, 0.0);
    for (const auto& sums : block_sums)
        for (std::size_t e = 0; e < n_edges; ++e) credit[e] += sums[e];
    const double scale = 1.0 / static_cast<double>(total);
    for (double& c : credit) c *= scale;
    return credit;
}

struct McCredits {
    std::vector<double> mean;
    std::vector<double> std_error;
};

inline McCredits mc_credits(const Game& game, std::uint64_t samples, std::uint64_t seed,
                            const FlowOptions& opts) {
    constexpr std::uint64_t kBlock = 256;
    const std::size_t nblocks = static_cast<std::size_t>((samples + kBlock - 1) / kBlock);
    const std::size_t n_edges = game.edges().size();
    std::vector<std::vector<double>> block_sums(nblocks);
    std::vector<std::vector<double>> block_sumsq(nblocks);

    run_blocks(game, nblocks, opts.threads, [&](Runner& runner, std::size_t b) {
        auto& sums = block_sums[b];
        auto& sumsq = block_sumsq[b];
        sums.assign(n_edges, 0.0);
        sumsq.assign(n_edges, 0.0);
        std::vector<double> one(n_edges);
        const std::uint64_t lo = static_cast<std::uint64_t>(b) * kBlock;
        const std::uint64_t hi = std::min<std::uint64_t>(samples, lo + kBlock);
        for (std::uint64_t idx = lo; idx < hi; ++idx) {
            Rng rng(derive_seed(seed, idx));
            std::fill(one.begin(), one.end(), 0.0);
            runner.run(McOrderer{&rng}, one);
            for (std::size_t e = 0; e < n_edges; ++e) {
                sums[e] += one[e];
                sumsq[e] += one[e] * one[e];
            }
        }
    });

    McCredits out;
    out.mean.assign(n_edges, 0.0);
    out.std_error.assign(n_edges, 0.0);
    std::vector<double> sumsq(n_edges, 0.0);
    for (std::size_t b = 0; b < nblocks; ++b)
        for (std::size_t e = 0; e < n_edges; ++e) {
            out.mean[e] += block_sums[b][e];
            sumsq[e] += block_sumsq[b][e];
        }
    const double n = static_cast<double>(samples);
    for (std::size_t e = 0; e < n_edges; ++e) {
        out.mean[e] /= n;
        if (samples > 1) {
            const double var = std::max(0.0, (sumsq[e] - n * out.mean[e] * out.mean[e]) / (n - 1.0));
            out.std_error[e] = std::sqrt(var / n);
        }
    }
    return out;
}

inline void require_augmented(const CausalGraph& g) {
    if (!g.is_augmented())
        fail(Errc::InvalidArgument,
             "attribution runs on a super-source-augmented graph; call augment_super_source first");
}

}  // namespace flow_detail

// Number of depth-first configurations of the whole-graph game.
inline std::uint64_t count_configurations(const CausalGraph& g, const Sample& bg,
                                          const Sample& fg) {
    flow_detail::require_augmented(g);
    const Game game(g, bg, fg);
    return flow_detail::make_visit_plan(game).config_count;
}

// Exact Shapley Flow: averages edge credit over every configuration.
inline EdgeAttribution shapley_flow_exact(const CausalGraph& g, const Sample& bg, const Sample& fg,
                                          const FlowOptions& opts = {}) {
    flow_detail::require_augmented(g);
    const Game game(g, bg, fg);
    const auto plan = flow_detail::make_visit_plan(game);
    if (plan.config_count == flow_detail::kSaturated || plan.config_count > opts.config_cap)
        fail(Errc::ConfigurationCapExceeded,
             (plan.config_count == flow_detail::kSaturated
                  ? std::string("more than 2^64")
                  : std::to_string(plan.config_count)) +
                 " configurations exceed the cap of " + std::to_string(opts.config_cap) +
                 "; use Monte Carlo instead");
    const auto credits = flow_detail::exact_credits(game, plan, opts);

    EdgeAttribution attr;
    attr.method = Method::Exact;
    attr.config_count = plan.config_count;
    attr.credit.assign(g.edge_count(), 0.0);
    for (std::size_t ge = 0; ge < game.edges().size(); ++ge)
        attr.credit[static_cast<std::size_t>(game.edges()[ge].graph_edge)] = credits[ge];
    attr.foreground_output = game.foreground_output();
    attr.background_output = game.background_output();
    attr.target_delta = game.target_delta();
    return attr;
}

// Monte Carlo Shapley Flow: samples configurations by drawing an independent
// uniform child permutation at every node visit. Deterministic per seed.
inline EdgeAttribution shapley_flow_mc(const CausalGraph& g, const Sample& bg, const Sample& fg,
                                       std::uint64_t samples, std::uint64_t seed,
                                       const FlowOptions& opts = {}) {
    flow_detail::require_augmented(g);
    if (samples < 1) fail(Errc::InvalidArgument, "Monte Carlo needs at least one sample");
    const Game game(g, bg, fg);
    const auto mc = flow_detail::mc_credits(game, samples, seed, opts);

    EdgeAttribution attr;
    attr.method = Method::MonteCarlo;
    attr.sample_count = samples;
    attr.seed = seed;
    attr.credit.assign(g.edge_count(), 0.0);
    attr.std_error.assign(g.edge_count(), 0.0);
    for (std::size_t ge = 0; ge < game.edges().size(); ++ge) {
        attr.credit[static_cast<std::size_t>(game.edges()[ge].graph_edge)] = mc.mean[ge];
        attr.std_error[static_cast<std::size_t>(game.edges()[ge].graph_edge)] = mc.std_error[ge];
    }
    attr.foreground_output = game.foreground_output();
    attr.background_output = game.background_output();
    attr.target_delta = game.target_delta();
    return attr;
}

// Exact attribution of the game induced by one explanation boundary: the
// model side is collapsed into a black-box sink. Credits are reported per
// boundary-game edge with their originating graph edge alongside.
struct BoundaryAttribution {
    std::vector<double> credit;
    std::vector<int> graph_edge;
    std::uint64_t config_count = 0;
    double target_delta = 0.0;
};

inline BoundaryAttribution shapley_flow_at_boundary(const CausalGraph& g, const Boundary& boundary,
                                                    const Sample& bg, const Sample& fg,
                                                    const FlowOptions& opts = {}) {
    flow_detail::require_augmented(g);
    const Game game(g, bg, fg, boundary);
    const auto plan = flow_detail::make_visit_plan(game);
    if (plan.config_count == flow_detail::kSaturated || plan.config_count > opts.config_cap)
        fail(Errc::ConfigurationCapExceeded,
             "boundary game exceeds the configuration cap of " + std::to_string(opts.config_cap));
    BoundaryAttribution out;
    out.credit = flow_detail::exact_credits(game, plan, opts);
    out.graph_edge.reserve(game.edges().size());
    for (const auto& ge : game.edges()) out.graph_edge.push_back(ge.graph_edge);
    out.config_count = plan.config_count;
    out.target_delta = game.target_delta();
    return out;
}

// psi(i): total credit on i's outgoing edges. The super source is omitted.
inline std::map<std::string, double> node_attribution(const EdgeAttribution& attr,
                                                      const CausalGraph& g) {
    std::map<std::string, double> psi;
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        if (static_cast<int>(v) == g.super_source()) continue;
        double total = 0.0;
        for (const int e : g.out_edges(static_cast<int>(v)))
            total += attr.credit[static_cast<std::size_t>(e)];
        psi[g.node(static_cast<int>(v)).id] = total;
    }
    return psi;
}

// Per original-source credit; equals ASV when the graph captures all
// dependencies among the features.
inline std::map<std::string, double> asv_view(const EdgeAttribution& attr, const CausalGraph& g) {
    flow_detail::require_augmented(g);
    std::map<std::string, double> out;
    for (const int s : g.source_nodes()) {
        double total = 0.0;
        for (const int e : g.out_edges(s)) total += attr.credit[static_cast<std::size_t>(e)];
        out[g.node(s).id] = total;
    }
    return out;
}

namespace flow_detail {

inline EdgeAttribution average_attributions(std::vector<EdgeAttribution> parts) {
    EdgeAttribution out = parts.front();
    const double b = static_cast<double>(parts.size());
    if (parts.size() > 1) {
        std::vector<double> credit(out.credit.size(), 0.0);
        std::vector<double> sq(out.std_error.size(), 0.0);
        double fg_sum = 0.0;
        double bg_sum = 0.0;
        for (const EdgeAttribution& p : parts) {
            for (std::size_t e = 0; e < credit.size(); ++e) credit[e] += p.credit[e];
            for (std::size_t e = 0; e < sq.size(); ++e) sq[e] += p.std_error[e] * p.std_error[e];
            fg_sum += p.foreground_output;
            bg_sum += p.background_output;
        }
        for (std::size_t e = 0; e < credit.size(); ++e) credit[e] /= b;
        for (std::size_t e = 0; e < sq.size(); ++e) sq[e] = std::sqrt(sq[e]) / b;
        out.credit = std::move(credit);
        out.std_error = std::move(sq);
        out.foreground_output = fg_sum / b;
        out.background_output = bg_sum / b;
        out.target_delta = out.foreground_output - out.background_output;
    }
    return out;
}

}  // namespace flow_detail

// Attribution against several backgrounds: the mean of the per-background
// attributions, explaining f(x) - mean f(x'). Linearity makes this exact.
inline EdgeAttribution multi_background(const CausalGraph& g, const std::vector<Sample>& bgs,
                                        const Sample& fg, const std::optional<McParams>& mc = {},
                                        const FlowOptions& opts = {}) {
    if (bgs.empty()) fail(Errc::InvalidArgument, "need at least one background sample");
    std::vector<EdgeAttribution> parts;
    parts.reserve(bgs.size());
    for (std::size_t i = 0; i < bgs.size(); ++i) {
        parts.push_back(mc ? shapley_flow_mc(g, bgs[i], fg, mc->samples,
                                             derive_seed(mc->seed, i), opts)
                           : shapley_flow_exact(g, bgs[i], fg, opts));
    }
    EdgeAttribution out = flow_detail::average_attributions(std::move(parts));
    if (mc) {
        out.sample_count = mc->samples;
        out.seed = mc->seed;
    }
    return out;
}

// Noise nodes whose foreground is only known as an interval of their uniform
// driver: draw m foregrounds, attribute each, and average.
inline EdgeAttribution attribute_noise_intervals(
    const CausalGraph& g, const Sample& bg, const Sample& fg,
    const std::map<std::string, NoiseInterval>& fg_intervals, int m = 16, std::uint64_t seed = 0,
    const std::optional<McParams>& mc = {}, const FlowOptions& opts = {}) {
    if (m < 1) fail(Errc::InvalidArgument, "need at least one interval draw");
    if (fg_intervals.empty()) fail(Errc::InvalidArgument, "no noise intervals given");
    for (const auto& [id, iv] : fg_intervals) {
        make_noise_interval(iv.lower, iv.upper);
        const NodeSpec& n = g.node(g.index_of(id));
        if (n.kind != NodeKind::Source)
            fail(Errc::InvalidArgument, "'" + id + "' is not a source; intervals apply to noise nodes");
    }
    std::vector<EdgeAttribution> parts;
    parts.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        Rng rng(derive_seed(seed, 0x6e6f6973ULL + static_cast<std::uint64_t>(k)));
        Sample fg_k = fg;
        for (const auto& [id, iv] : fg_intervals)
            fg_k.set(id, Value(iv.lower + rng.uniform() * (iv.upper - iv.lower)));
        parts.push_back(mc ? shapley_flow_mc(g, bg, fg_k, mc->samples,
                                             derive_seed(mc->seed, static_cast<std::uint64_t>(k)),
                                             opts)
                           : shapley_flow_exact(g, bg, fg_k, opts));
    }
    EdgeAttribution out = flow_detail::average_attributions(std::move(parts));
    if (mc) {
        out.sample_count = mc->samples;
        out.seed = mc->seed;
    }
    return out;
}

}  // namespace flowcredit
