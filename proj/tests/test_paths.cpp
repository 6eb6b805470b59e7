#include <catch2/catch_amalgamated.hpp>

#include "support/fixtures.hpp"

using namespace flowcredit;

TEST_CASE("a chain has a single path through every edge") {
    const CausalGraph g = testsupport::pure_chain(4, 1.0).graph.augmented();
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        const auto paths = paths_through(g, static_cast<int>(e));
        REQUIRE(paths.size() == 1);
        CHECK(paths[0].edges.size() == 5);
        CHECK(paths[0].contains(static_cast<int>(e)));
    }
}

TEST_CASE("diamond edge lies on exactly one path") {
    const CausalGraph g = make_diamond().graph.augmented();
    const auto paths = paths_through(g, "a", "b");
    REQUIRE(paths.size() == 1);
    CHECK(path_name(g, paths[0]) == "S* -> a -> b -> f");
}

TEST_CASE("path structure invariants") {
    const std::vector<CausalGraph> graphs = {
        make_chain(4, -1.0).graph.augmented(),
        testsupport::double_diamond().graph.augmented(),
        gen_random_linear_graph({8, 0.5, 3}).graph.augmented(),
    };
    for (const CausalGraph& g : graphs) {
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            const auto paths = paths_through(g, static_cast<int>(e));
            CHECK(paths.size() == testsupport::dp_paths_through(g, static_cast<int>(e)));
            CHECK(!paths.empty());  // every edge lies on at least one path
            for (const Path& p : paths) {
                CHECK(p.contains(static_cast<int>(e)));
                CHECK(g.in_edges(g.edge(p.edges.front()).src).empty());
                CHECK(g.edge(p.edges.back()).dst == g.sink());
                for (std::size_t k = 0; k + 1 < p.edges.size(); ++k)
                    CHECK(g.edge(p.edges[k]).dst == g.edge(p.edges[k + 1]).src);
            }
        }
    }
}

TEST_CASE("unknown edges are reported") {
    const CausalGraph g = make_diamond().graph.augmented();
    CHECK_THROWS_AS(paths_through(g, 999), FlowError);
    CHECK_THROWS_AS(paths_through(g, "b", "a"), FlowError);
}
