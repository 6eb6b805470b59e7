#include <catch2/catch_amalgamated.hpp>

#include "support/fixtures.hpp"

using namespace flowcredit;

namespace {

double credit_of(const CausalGraph& g, const EdgeAttribution& attr, const std::string& src,
                 const std::string& dst) {
    return attr.credit[static_cast<std::size_t>(g.edge_index(src, dst))];
}

}  // namespace

TEST_CASE("or game splits the credit evenly") {
    const CaseFixture fx = make_or_game();
    const CausalGraph g = fx.graph.augmented();
    const EdgeAttribution attr = shapley_flow_exact(g, fx.background, fx.foreground);
    CHECK(attr.config_count == 2);
    CHECK(attr.target_delta == 1.0);
    for (const char* edge : {"x1", "x2"}) {
        CHECK(credit_of(g, attr, edge, "f") == Catch::Approx(0.5).margin(1e-12));
        CHECK(credit_of(g, attr, "S*", edge) == Catch::Approx(0.5).margin(1e-12));
    }
    const auto asv = asv_view(attr, g);
    CHECK(asv.at("x1") == Catch::Approx(0.5).margin(1e-12));
    CHECK(asv.at("x2") == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("chain carries the whole delta and dummies carry none") {
    const ChainFixture fx = make_chain(4, -1.82);
    const CausalGraph g = fx.graph.augmented();
    const EdgeAttribution attr = shapley_flow_exact(g, fx.background, fx.foreground);

    for (const auto& [src, dst] : std::vector<std::pair<std::string, std::string>>{
             {"S*", "X1"}, {"X1", "X2"}, {"X2", "X3"}, {"X3", "X4"}, {"X4", "f"}})
        CHECK(credit_of(g, attr, src, dst) == Catch::Approx(-1.82).margin(1e-12));
    for (const char* dummy : {"X1", "X2", "X3"})
        CHECK(credit_of(g, attr, dummy, "f") == Catch::Approx(0.0).margin(1e-12));

    const auto psi = node_attribution(attr, g);
    for (const char* node : {"X1", "X2", "X3", "X4"})
        CHECK(psi.at(node) == Catch::Approx(-1.82).margin(1e-12));
    CHECK(psi.at("f") == 0.0);  // the sink has no outgoing edges

    const auto asv = asv_view(attr, g);
    CHECK(asv.size() == 1);
    CHECK(asv.at("X1") == Catch::Approx(-1.82).margin(1e-12));
}

TEST_CASE("flat linear graph recovers per-feature effects") {
    const CaseFixture fx = testsupport::flat_linear({2.0, -1.0}, {0, 0}, {1, 1});
    const CausalGraph g = fx.graph.augmented();
    const EdgeAttribution attr = shapley_flow_exact(g, fx.background, fx.foreground);
    CHECK(credit_of(g, attr, "x1", "f") == Catch::Approx(2.0).margin(1e-12));
    CHECK(credit_of(g, attr, "x2", "f") == Catch::Approx(-1.0).margin(1e-12));

    // node view equals the classic game values
    const SetGame game{2, [&](std::uint32_t mask) {
                           return 2.0 * ((mask >> 0) & 1u) - 1.0 * ((mask >> 1) & 1u);
                       }};
    const auto shapley = brute_force_shapley(game);
    const auto psi = node_attribution(attr, g);
    CHECK(psi.at("x1") == Catch::Approx(shapley[0]).margin(1e-9));
    CHECK(psi.at("x2") == Catch::Approx(shapley[1]).margin(1e-9));
}

TEST_CASE("diamond splits the delta across both branches") {
    const CaseFixture fx = make_diamond();
    const CausalGraph g = fx.graph.augmented();
    const EdgeAttribution attr = shapley_flow_exact(g, fx.background, fx.foreground);
    CHECK(attr.target_delta == Catch::Approx(2.0));
    CHECK(credit_of(g, attr, "S*", "a") == Catch::Approx(2.0).margin(1e-12));
    for (const auto& [src, dst] :
         std::vector<std::pair<std::string, std::string>>{{"a", "b"}, {"a", "c"}, {"b", "f"}, {"c", "f"}})
        CHECK(credit_of(g, attr, src, dst) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("monte carlo agrees with exact on the or game") {
    const CaseFixture fx = make_or_game();
    const CausalGraph g = fx.graph.augmented();
    const EdgeAttribution mc = shapley_flow_mc(g, fx.background, fx.foreground, 10000, 20240817);
    for (const char* edge : {"x1", "x2"}) {
        const std::size_t e = static_cast<std::size_t>(g.edge_index(edge, "f"));
        CHECK(std::fabs(mc.credit[e] - 0.5) <= 3.0 * mc.std_error[e]);
        CHECK(mc.std_error[e] > 0.0);
        CHECK(mc.std_error[e] < 0.01);
    }
}

TEST_CASE("monte carlo is deterministic per seed") {
    const CaseFixture fx = testsupport::double_diamond();
    const CausalGraph g = fx.graph.augmented();
    const EdgeAttribution a = shapley_flow_mc(g, fx.background, fx.foreground, 500, 11);
    const EdgeAttribution b = shapley_flow_mc(g, fx.background, fx.foreground, 500, 11);
    CHECK(a.credit == b.credit);
    CHECK(a.std_error == b.std_error);

    // a nonlinear game, so different orderings really differ per sample
    const CaseFixture org = make_or_game();
    const CausalGraph og = org.graph.augmented();
    const EdgeAttribution c = shapley_flow_mc(og, org.background, org.foreground, 501, 11);
    const EdgeAttribution d = shapley_flow_mc(og, org.background, org.foreground, 501, 12);
    CHECK(c.credit != d.credit);
}

TEST_CASE("thread count never changes the numbers") {
    const CaseFixture fx = testsupport::double_diamond();
    const CausalGraph g = fx.graph.augmented();
    FlowOptions one;
    one.threads = 1;
    FlowOptions three;
    three.threads = 3;
    const EdgeAttribution e1 = shapley_flow_exact(g, fx.background, fx.foreground, one);
    const EdgeAttribution e3 = shapley_flow_exact(g, fx.background, fx.foreground, three);
    CHECK(e1.credit == e3.credit);
    const EdgeAttribution m1 = shapley_flow_mc(g, fx.background, fx.foreground, 3000, 5, one);
    const EdgeAttribution m3 = shapley_flow_mc(g, fx.background, fx.foreground, 3000, 5, three);
    CHECK(m1.credit == m3.credit);
    CHECK(m1.std_error == m3.std_error);
}

TEST_CASE("single-path chain needs only one sample") {
    const CaseFixture fx = testsupport::pure_chain(4, 2.5);
    const CausalGraph g = fx.graph.augmented();
    const EdgeAttribution exact = shapley_flow_exact(g, fx.background, fx.foreground);
    CHECK(exact.config_count == 1);
    const EdgeAttribution mc = shapley_flow_mc(g, fx.background, fx.foreground, 1, 99);
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        CHECK(mc.credit[e] == Catch::Approx(exact.credit[e]).margin(1e-15));
        CHECK(mc.std_error[e] == 0.0);
    }
}

TEST_CASE("configuration cap refuses oversized exact runs") {
    const CaseFixture fx = testsupport::double_diamond();
    const CausalGraph g = fx.graph.augmented();
    FlowOptions opts;
    opts.config_cap = 3;
    try {
        shapley_flow_exact(g, fx.background, fx.foreground, opts);
        FAIL("expected ConfigurationCapExceeded");
    } catch (const FlowError& e) {
        CHECK(e.code() == Errc::ConfigurationCapExceeded);
    }
}

TEST_CASE("multiple backgrounds average the attributions") {
    const CaseFixture fx = make_or_game();
    const CausalGraph g = fx.graph.augmented();

    // one background: same as the single call
    const EdgeAttribution single = shapley_flow_exact(g, fx.background, fx.foreground);
    const EdgeAttribution multi1 = multi_background(g, {fx.background}, fx.foreground);
    CHECK(single.credit == multi1.credit);

    // two identical backgrounds: still the same
    const EdgeAttribution multi2 =
        multi_background(g, {fx.background, fx.background}, fx.foreground);
    for (std::size_t e = 0; e < g.edge_count(); ++e)
        CHECK(multi2.credit[e] == Catch::Approx(single.credit[e]).margin(1e-15));

    // a mixed pair averages per-background results and stays efficient
    Sample bg2;
    bg2.set("x1", Value(1.0)).set("x2", Value(1.0));
    const EdgeAttribution mixed = multi_background(g, {fx.background, bg2}, fx.foreground);
    const EdgeAttribution part2 = shapley_flow_exact(g, bg2, fx.foreground);
    for (std::size_t e = 0; e < g.edge_count(); ++e)
        CHECK(mixed.credit[e] ==
              Catch::Approx(0.5 * (single.credit[e] + part2.credit[e])).margin(1e-15));
    CHECK(mixed.target_delta == Catch::Approx(0.5).margin(1e-15));  // 1 - mean(0, 1)
    double cut = 0.0;
    for (const int e : g.in_edges(g.sink())) cut += mixed.credit[static_cast<std::size_t>(e)];
    CHECK(cut == Catch::Approx(mixed.target_delta).margin(1e-12));
}

TEST_CASE("boundary games reproduce the asv cut") {
    const CaseFixture fx = make_or_game();
    const CausalGraph g = fx.graph.augmented();
    const Boundary asv_boundary = make_boundary(g, {"S*"});
    const BoundaryAttribution at =
        shapley_flow_at_boundary(g, asv_boundary, fx.background, fx.foreground);
    REQUIRE(at.credit.size() == 2);  // just the two cut edges
    CHECK(at.credit[0] == Catch::Approx(0.5).margin(1e-12));
    CHECK(at.credit[1] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("noise-interval foregrounds average over draws") {
    // f = x + u with a noise source u whose foreground is only an interval
    std::vector<NodeSpec> nodes(3);
    nodes[0].id = "x";
    nodes[0].kind = NodeKind::Source;
    nodes[1].id = "u";
    nodes[1].kind = NodeKind::Source;
    nodes[1].is_noise = true;
    nodes[2].id = "f";
    nodes[2].kind = NodeKind::Sink;
    nodes[2].parents = {"x", "u"};
    nodes[2].function = FunctionSpec::linear({1.0, 1.0});
    const CausalGraph g = CausalGraph::build(std::move(nodes), "f").augmented();

    Sample bg;
    bg.set("x", Value(0.0)).set("u", Value(0.0));
    Sample fg;
    fg.set("x", Value(1.0)).set("u", Value(0.0));  // placeholder, interval below

    const std::map<std::string, NoiseInterval> intervals{{"u", NoiseInterval{0.2, 0.4}}};
    const EdgeAttribution attr = attribute_noise_intervals(g, bg, fg, intervals, 64, 7);
    // linear system: u's edge credit is the mean drawn value, near 0.3
    const double u_credit = attr.credit[static_cast<std::size_t>(g.edge_index("u", "f"))];
    CHECK(u_credit > 0.2);
    CHECK(u_credit < 0.4);
    CHECK(std::fabs(u_credit - 0.3) < 0.05);
    // x keeps its own unit credit under every draw
    CHECK(attr.credit[static_cast<std::size_t>(g.edge_index("x", "f"))] ==
          Catch::Approx(1.0).margin(1e-12));
    // deterministic per seed
    const EdgeAttribution again = attribute_noise_intervals(g, bg, fg, intervals, 64, 7);
    CHECK(attr.credit == again.credit);
}
