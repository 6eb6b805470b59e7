// Walks through the two-input OR game: exact edge credits, the Monte Carlo
// estimate, and the node/source views derived from them.

#include <cstdio>

#include <flowcredit/flowcredit.hpp>

int main() {
    using namespace flowcredit;

    const CaseFixture fx = make_or_game();
    const CausalGraph g = fx.graph.augmented();

    const EdgeAttribution exact = shapley_flow_exact(g, fx.background, fx.foreground);
    std::printf("f(x) - f(x') = %.3f over %llu configurations\n", exact.target_delta,
                static_cast<unsigned long long>(exact.config_count));
    for (std::size_t e = 0; e < g.edge_count(); ++e)
        std::printf("  %-10s %+.4f\n", g.edge_name(static_cast<int>(e)).c_str(), exact.credit[e]);

    const EdgeAttribution mc = shapley_flow_mc(g, fx.background, fx.foreground, 10000, 7);
    std::printf("Monte Carlo (n=%llu):\n", static_cast<unsigned long long>(mc.sample_count));
    for (std::size_t e = 0; e < g.edge_count(); ++e)
        std::printf("  %-10s %+.4f +- %.4f\n", g.edge_name(static_cast<int>(e)).c_str(),
                    mc.credit[e], mc.std_error[e]);

    std::printf("per-source credit (ASV view):\n");
    for (const auto& [id, credit] : asv_view(exact, g)) std::printf("  %-4s %+.4f\n", id.c_str(), credit);
    return 0;
}
