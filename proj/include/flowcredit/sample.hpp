#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flowcredit/external.hpp"
#include "flowcredit/graph.hpp"
#include "flowcredit/value.hpp"

namespace flowcredit {

// Assignment of values to source nodes. May also carry internal-node values,
// which loaders treat as cross-checks against forward evaluation.
struct Sample {
    std::map<std::string, Value> values;

    bool has(const std::string& id) const { return values.count(id) > 0; }

    const Value& at(const std::string& id) const {
        auto it = values.find(id);
        if (it == values.end()) fail(Errc::MissingSource, "sample does not assign '" + id + "'");
        return it->second;
    }

    Sample& set(const std::string& id, Value v) {
        values[id] = std::move(v);
        return *this;
    }
};

// Foreground value of a noise node that is only known up to an interval of
// its uniform-[0,1] driver (the discrete-residual case). Attribution samples
// the interval and averages.
struct NoiseInterval {
    double lower = 0.0;
    double upper = 1.0;
};

inline NoiseInterval make_noise_interval(double lower, double upper) {
    if (!(0.0 <= lower && lower < upper && upper <= 1.0))
        fail(Errc::InvalidDistribution,
             "noise interval [" + std::to_string(lower) + ", " + std::to_string(upper) +
                 ") must satisfy 0 <= lower < upper <= 1");
    return NoiseInterval{lower, upper};
}

inline void check_value_domain(const NodeSpec& n, const Value& v) {
    if (n.domain.empty()) {
        if (v.is_category())
            fail(Errc::DomainError, "node '" + n.id + "' is real-valued but got category '" +
                                        v.label() + "'");
        return;
    }
    if (!v.is_category())
        fail(Errc::DomainError, "node '" + n.id + "' is categorical but got a number");
    if (std::find(n.domain.begin(), n.domain.end(), v.label()) == n.domain.end())
        fail(Errc::DomainError,
             "'" + v.label() + "' is not in the domain of node '" + n.id + "'");
}

// Evaluates one node from already-computed parent values.
inline Value evaluate_node(const CausalGraph& g, int v, std::span<const Value> args,
                           ExternalRuntime* runtime) {
    const NodeSpec& n = g.node(v);
    Value out;
    if (n.function->kind == FunctionKind::External) {
        if (!runtime)
            fail(Errc::InvalidArgument,
                 "node '" + n.id + "' is an external model but no runtime was supplied");
        std::vector<std::pair<std::string, Value>> named;
        named.reserve(args.size());
        for (std::size_t k = 0; k < args.size(); ++k) named.emplace_back(n.parents[k], args[k]);
        out = runtime->call(n.id, n.function->external, named);
    } else {
        out = evaluate_function(*n.function, args);
    }
    check_value_domain(n, out);
    return out;
}

// Per-node values induced by a sample: sources read from the sample, internal
// nodes and the sink apply their functions in topological order. `forced`
// optionally pins one node to a value (an intervention), cutting its own
// computation while everything downstream reacts.
inline std::vector<Value> forward_values(const CausalGraph& g, const Sample& sample,
                                         ExternalRuntime* runtime = nullptr, int forced_node = -1,
                                         const Value& forced_value = Value()) {
    std::vector<Value> vals(g.node_count());
    std::vector<Value> args;
    for (const int v : g.topo()) {
        if (v == g.super_source()) continue;
        const NodeSpec& n = g.node(v);
        if (v == forced_node) {
            check_value_domain(n, forced_value);
            vals[static_cast<std::size_t>(v)] = forced_value;
            continue;
        }
        if (n.kind == NodeKind::Source) {
            const Value& sv = sample.at(n.id);
            check_value_domain(n, sv);
            vals[static_cast<std::size_t>(v)] = sv;
            continue;
        }
        args.clear();
        for (const std::string& pid : n.parents)
            args.push_back(vals[static_cast<std::size_t>(g.index_of(pid))]);
        vals[static_cast<std::size_t>(v)] = evaluate_node(g, v, args, runtime);
    }
    return vals;
}

inline double sink_output(const CausalGraph& g, const Sample& sample,
                          ExternalRuntime* runtime = nullptr) {
    const Value v = forward_values(g, sample, runtime)[static_cast<std::size_t>(g.sink())];
    if (v.is_category())
        fail(Errc::DomainError, "categorical sink outputs are not supported");
    return v.real();
}

}  // namespace flowcredit
