#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowcredit/error.hpp"
#include "flowcredit/expression.hpp"
#include "flowcredit/external.hpp"
#include "flowcredit/value.hpp"

namespace flowcredit {

enum class FunctionKind { Expression, Linear, Table, External };

// After noise augmentation a function gains one trailing noise argument.
// Additive adds it to the base output; InverseCdf selects a category by
// locating the noise in the cumulative distribution of a table entry.
enum class NoiseMode { None, Additive, InverseCdf };

struct TableEntry {
    std::vector<Value> key;
    Value value;                // concrete output
    std::vector<double> probs;  // or a distribution over output_labels
    bool is_distribution() const { return !probs.empty(); }
};

struct TableSpec {
    std::size_t key_arity = 0;
    std::vector<TableEntry> entries;
    std::optional<Value> fallback;            // default when no key matches
    std::vector<std::string> output_labels;   // category per distribution slot
};

// A node's computation. Exactly one payload is populated, per `kind`.
struct FunctionSpec {
    FunctionKind kind = FunctionKind::Linear;

    // Expression
    expr::NodePtr ast;
    std::vector<std::string> vars;  // binding order; must mirror the parent list

    // Linear
    std::vector<double> weights;
    double bias = 0.0;

    // Table
    TableSpec table;

    // External
    ExternalSpec external;

    NoiseMode noise_mode = NoiseMode::None;

    // Declared input count, including the trailing noise argument if any.
    // Expressions may ignore trailing inputs (their free variables are a
    // subset of the parents) and external models take arbitrary named
    // inputs, so both report nullopt; see min_arity.
    std::optional<std::size_t> arity() const {
        const std::size_t extra = noise_mode == NoiseMode::None ? 0 : 1;
        switch (kind) {
            case FunctionKind::Expression: return std::nullopt;
            case FunctionKind::Linear: return weights.size() + extra;
            case FunctionKind::Table: return table.key_arity + extra;
            case FunctionKind::External: return std::nullopt;
        }
        return std::nullopt;
    }

    std::size_t min_arity() const {
        const std::size_t extra = noise_mode == NoiseMode::None ? 0 : 1;
        switch (kind) {
            case FunctionKind::Expression: return vars.size() + extra;
            case FunctionKind::Linear: return weights.size() + extra;
            case FunctionKind::Table: return table.key_arity + extra;
            case FunctionKind::External: return 0;
        }
        return 0;
    }

    static FunctionSpec expression(expr::NodePtr ast, std::vector<std::string> vars) {
        FunctionSpec f;
        f.kind = FunctionKind::Expression;
        f.ast = std::move(ast);
        f.vars = std::move(vars);
        return f;
    }

    static FunctionSpec linear(std::vector<double> weights, double bias = 0.0) {
        FunctionSpec f;
        f.kind = FunctionKind::Linear;
        f.weights = std::move(weights);
        f.bias = bias;
        return f;
    }

    static FunctionSpec lookup_table(TableSpec table) {
        FunctionSpec f;
        f.kind = FunctionKind::Table;
        f.table = std::move(table);
        return f;
    }

    static FunctionSpec external_model(std::string command, int timeout_ms = 10000) {
        FunctionSpec f;
        f.kind = FunctionKind::External;
        f.external = ExternalSpec{std::move(command), timeout_ms};
        return f;
    }
};

inline FunctionSpec parse_expression(const std::string& text, std::vector<std::string> vars) {
    expr::NodePtr ast = expr::parse(text, vars);
    return FunctionSpec::expression(std::move(ast), std::move(vars));
}

namespace detail {

inline Value table_lookup(const TableSpec& table, std::span<const Value> key,
                          const std::optional<double>& noise) {
    const TableEntry* hit = nullptr;
    for (const auto& entry : table.entries) {
        if (entry.key.size() != key.size()) continue;
        bool match = true;
        for (std::size_t i = 0; i < key.size(); ++i) {
            if (!(entry.key[i] == key[i])) {
                match = false;
                break;
            }
        }
        if (match) {
            hit = &entry;
            break;
        }
    }
    if (!hit) {
        if (table.fallback) return *table.fallback;
        std::string k;
        for (const auto& v : key) k += (k.empty() ? "" : ",") + v.to_string();
        fail(Errc::DomainError, "no table entry for key (" + k + ") and no default");
    }
    if (!hit->is_distribution()) return hit->value;
    if (!noise)
        fail(Errc::DomainError, "distribution-valued table entry requires a noise input");
    if (hit->probs.size() != table.output_labels.size())
        fail(Errc::InvalidDistribution, "table distribution width does not match the output domain");
    // category c covers [cdf(c-1), cdf(c))
    double cdf = 0.0;
    for (std::size_t c = 0; c < hit->probs.size(); ++c) {
        cdf += hit->probs[c];
        if (*noise < cdf) return Value::category(table.output_labels[c]);
    }
    return Value::category(table.output_labels.back());
}

}  // namespace detail

// Pure evaluation of expression/linear/table functions. External models need
// a process handle; route those through an ExternalRuntime (see graph code)
// or call_external directly.
inline Value evaluate_function(const FunctionSpec& fn, std::span<const Value> args) {
    const auto declared = fn.arity();
    if (declared && args.size() != *declared)
        fail(Errc::ArityMismatch, "expected " + std::to_string(*declared) + " arguments, got " +
                                      std::to_string(args.size()));
    if (args.size() < fn.min_arity())
        fail(Errc::ArityMismatch, "expected at least " + std::to_string(fn.min_arity()) +
                                      " arguments, got " + std::to_string(args.size()));

    std::optional<double> noise;
    std::span<const Value> base_args = args;
    if (fn.noise_mode != NoiseMode::None) {
        if (args.empty()) fail(Errc::ArityMismatch, "noise-augmented function needs a noise argument");
        noise = args.back().real();
        base_args = args.first(args.size() - 1);
    }

    Value out;
    switch (fn.kind) {
        case FunctionKind::Expression:
            out = expr::evaluate(*fn.ast, base_args);
            break;
        case FunctionKind::Linear: {
            double acc = fn.bias;
            for (std::size_t i = 0; i < fn.weights.size(); ++i)
                acc += fn.weights[i] * base_args[i].real();
            out = Value(expr::finite_or_fail(acc, "linear form"));
            break;
        }
        case FunctionKind::Table:
            out = detail::table_lookup(fn.table, base_args, noise);
            break;
        case FunctionKind::External:
            fail(Errc::InvalidArgument,
                 "external functions are evaluated through a process handle, not evaluate_function");
    }

    if (fn.noise_mode == NoiseMode::Additive)
        out = Value(expr::finite_or_fail(out.real() + *noise, "noise residual"));
    return out;
}

}  // namespace flowcredit
