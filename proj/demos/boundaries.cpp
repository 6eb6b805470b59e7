// Enumerates the explanation boundaries of the chain fixture and shows that
// the credit crossing every one of them sums to the same output difference.

#include <cstdio>

#include <flowcredit/flowcredit.hpp>

int main() {
    using namespace flowcredit;

    const ChainFixture fx = make_chain(4, -1.82);
    const CausalGraph g = fx.graph.augmented();
    const EdgeAttribution attr = shapley_flow_exact(g, fx.background, fx.foreground);

    std::printf("target delta: %.4f\n", attr.target_delta);
    for (const Boundary& b : enumerate_boundaries(g)) {
        double total = 0.0;
        std::string cut;
        for (const int e : b.cut_edges) {
            total += attr.credit[static_cast<std::size_t>(e)];
            cut += (cut.empty() ? "" : ", ") + g.edge_name(e);
        }
        std::printf("  cut {%s} carries %+.4f\n", cut.c_str(), total);
    }
    return 0;
}
