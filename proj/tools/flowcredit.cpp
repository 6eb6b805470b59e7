// flowcredit: Shapley Flow edge attribution on causal graphs.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <flowcredit/flowcredit.hpp>

namespace {

using flowcredit::json;

std::uint64_t config_cap_from_env(std::uint64_t fallback) {
    const char* raw = std::getenv("FLOWCREDIT_CONFIG_CAP");
    if (!raw || !*raw) return fallback;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(raw, &end, 10);
    if (end == raw || *end != '\0' || v == 0) {
        std::cerr << "warning: ignoring malformed FLOWCREDIT_CONFIG_CAP='" << raw << "'\n";
        return fallback;
    }
    return v;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text << "\n";
    else
        flowcredit::write_file(out_path, text + "\n");
}

struct AttributeArgs {
    std::string graph;
    std::string fg;
    std::vector<std::string> bgs;
    bool exact = false;
    std::uint64_t mc_samples = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string dot;
    int top_k = 10;
    bool check_axioms = false;
    bool dummy_scan = false;
    bool show_super_source = false;
    bool hide_noise = false;
    int threads = 0;
};

int cmd_attribute(const AttributeArgs& args) {
    const flowcredit::CaseBundle bundle = flowcredit::load_case(args.graph, args.fg, args.bgs);

    flowcredit::RunOptions opts;
    opts.exact = args.exact;
    opts.mc = flowcredit::McParams{args.mc_samples, args.seed};
    opts.check_axioms = args.check_axioms;
    opts.dummy_scan = args.dummy_scan;
    opts.show_super_source = args.show_super_source;
    opts.flow.config_cap = config_cap_from_env(opts.flow.config_cap);
    opts.flow.threads = args.threads;

    const flowcredit::RunResult result = flowcredit::run_attribution(bundle, opts);
    const json report = flowcredit::report_to_json(result, args.show_super_source);
    emit(args.out, report.dump(2));

    if (!args.dot.empty()) {
        flowcredit::DotOptions dot_opts;
        dot_opts.top_k = args.top_k;
        dot_opts.hide_noise = args.hide_noise;
        dot_opts.show_super_source = args.show_super_source;
        flowcredit::write_file(args.dot,
                               flowcredit::emit_dot(result.graph, result.attribution, dot_opts));
    }

    if (result.axioms && !result.axioms->passed()) {
        std::cerr << "axiom checks FAILED:\n"
                  << flowcredit::axioms_to_json(*result.axioms)["failures"].dump(2) << "\n";
        return 1;
    }
    return 0;
}

int cmd_validate(const std::string& graph_path) {
    const flowcredit::CausalGraph g = flowcredit::load_graph_file(graph_path);
    std::size_t sources = 0;
    std::size_t noise = 0;
    for (const auto& n : g.nodes()) {
        sources += n.kind == flowcredit::NodeKind::Source;
        noise += n.is_noise;
    }
    std::cout << "OK: " << g.node_count() << " nodes (" << sources << " sources, " << noise
              << " noise), " << g.edge_count() << " edges, sink '" << g.node(g.sink()).id << "'\n";
    return 0;
}

void write_fixture(const std::string& dir, const flowcredit::CausalGraph& g,
                   const flowcredit::Sample& fg, const flowcredit::Sample& bg) {
    std::filesystem::create_directories(dir);
    flowcredit::write_file(dir + "/graph.json", flowcredit::graph_to_json(g).dump(2) + "\n");
    flowcredit::write_file(dir + "/fg.json", flowcredit::sample_to_json(fg).dump(2) + "\n");
    flowcredit::write_file(dir + "/bg.json", flowcredit::sample_to_json(bg).dump(2) + "\n");
    std::cout << "wrote " << dir << "/{graph,fg,bg}.json\n";
}

int cmd_oracle(const std::string& which, const std::string& graph_path, const std::string& fg_path,
               const std::string& bg_path) {
    const flowcredit::CausalGraph g = flowcredit::load_graph_file(graph_path);
    const flowcredit::Sample fg = flowcredit::load_sample_file(fg_path);
    const flowcredit::Sample bg = flowcredit::load_sample_file(bg_path);
    json out;
    if (which == "shapley") {
        out["method"] = "independent-shap";
        out["values"] = flowcredit::independent_shap(g, bg, fg);
    } else if (which == "owen") {
        out["method"] = "owen";
        out["values"] = flowcredit::owen_oracle(g, bg, fg);
    } else {
        out["method"] = "linear-ground-truth";
        const auto effects = flowcredit::linear_ground_truth(g, bg, fg);
        out["direct"] = effects.direct;
        out["indirect"] = effects.indirect;
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shapley Flow edge attribution on causal graphs"};
    app.require_subcommand(1);

    // attribute
    AttributeArgs at;
    CLI::App* attribute = app.add_subcommand("attribute", "compute edge attributions for a case");
    attribute->add_option("--graph", at.graph, "graph document")->required();
    attribute->add_option("--fg", at.fg, "foreground sample")->required();
    attribute->add_option("--bg", at.bgs, "background sample (repeatable)")->required();
    CLI::Option* exact_opt = attribute->add_flag("--exact", at.exact, "enumerate all configurations");
    CLI::Option* mc_opt =
        attribute->add_option("--mc", at.mc_samples, "Monte Carlo with this many samples");
    exact_opt->excludes(mc_opt);
    attribute->add_option("--seed", at.seed, "Monte Carlo seed")->needs(mc_opt);
    attribute->add_option("--out", at.out, "write the report here (default: stdout)");
    attribute->add_option("--dot", at.dot, "write a Graphviz rendering here");
    attribute->add_option("--top-k", at.top_k, "edges to highlight in the rendering")
        ->default_val(10);
    attribute->add_flag("--check-axioms", at.check_axioms,
                        "verify efficiency and flow conservation");
    attribute->add_flag("--dummy-scan", at.dummy_scan,
                        "brute-force certify dummy edges (small graphs)");
    attribute->add_flag("--show-super-source", at.show_super_source,
                        "include synthetic super-source edges in outputs");
    attribute->add_flag("--hide-noise", at.hide_noise, "hide noise nodes in the rendering");
    attribute->add_option("--threads", at.threads, "worker threads (0 = auto)");

    // validate
    std::string validate_graph;
    CLI::App* validate = app.add_subcommand("validate", "parse and validate a graph document");
    validate->add_option("--graph", validate_graph, "graph document")->required();

    // gen
    CLI::App* gen = app.add_subcommand("gen", "emit fixture cases");
    gen->require_subcommand(1);
    int rnd_n = 10;
    double rnd_p = 0.5;
    std::uint64_t rnd_seed = 0;
    std::string rnd_out;
    CLI::App* gen_random = gen->add_subcommand("random", "random linear DAG");
    gen_random->add_option("--n", rnd_n, "node count")->default_val(10);
    gen_random->add_option("--p", rnd_p, "edge probability")->default_val(0.5);
    gen_random->add_option("--seed", rnd_seed, "seed")->default_val(0);
    gen_random->add_option("--out", rnd_out, "output directory")->required();

    int chain_n = 4;
    double chain_delta = -1.82;
    std::string chain_out;
    CLI::App* gen_chain = gen->add_subcommand("chain", "identity-copy chain with dummy edges");
    gen_chain->add_option("--n", chain_n, "chain length")->default_val(4);
    gen_chain->add_option("--delta", chain_delta, "foreground minus background")
        ->default_val(-1.82);
    gen_chain->add_option("--out", chain_out, "output directory")->required();

    std::string or_out;
    CLI::App* gen_or = gen->add_subcommand("or", "two-input OR game");
    gen_or->add_option("--out", or_out, "output directory")->required();

    // oracle
    CLI::App* oracle = app.add_subcommand("oracle", "reference computations");
    oracle->require_subcommand(1);
    std::string o_graph;
    std::string o_fg;
    std::string o_bg;
    std::vector<CLI::App*> oracle_subs;
    for (const char* name : {"shapley", "owen", "linear"}) {
        CLI::App* sub = oracle->add_subcommand(name);
        sub->add_option("--graph", o_graph, "graph document")->required();
        sub->add_option("--fg", o_fg, "foreground sample")->required();
        sub->add_option("--bg", o_bg, "background sample")->required();
        oracle_subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (attribute->parsed()) {
            if (!at.exact && at.mc_samples == 0) {
                std::cerr << "error: choose --exact or --mc N\n";
                return 2;
            }
            return cmd_attribute(at);
        }
        if (validate->parsed()) return cmd_validate(validate_graph);
        if (gen->parsed()) {
            if (gen_random->parsed()) {
                flowcredit::RandomGraphConfig cfg{rnd_n, rnd_p, rnd_seed};
                auto system = flowcredit::gen_random_linear_graph(cfg);
                const flowcredit::Sample bg = system.sampler.next();
                const flowcredit::Sample fg = system.sampler.next();
                write_fixture(rnd_out, system.graph, fg, bg);
            } else if (gen_chain->parsed()) {
                const auto fx = flowcredit::make_chain(chain_n, chain_delta);
                write_fixture(chain_out, fx.graph, fx.foreground, fx.background);
            } else {
                const auto fx = flowcredit::make_or_game();
                write_fixture(or_out, fx.graph, fx.foreground, fx.background);
            }
            return 0;
        }
        for (std::size_t i = 0; i < oracle_subs.size(); ++i)
            if (oracle_subs[i]->parsed())
                return cmd_oracle(std::array{"shapley", "owen", "linear"}[i], o_graph, o_fg, o_bg);
    } catch (const flowcredit::FlowError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
