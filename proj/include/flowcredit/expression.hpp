#pragma once

#include <charconv>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowcredit/error.hpp"
#include "flowcredit/value.hpp"

namespace flowcredit::expr {

// AST for node functions. Arithmetic and comparisons work on reals;
// categorical labels may only meet == / != (either a quoted literal or
// another categorical operand).
enum class Op {
    Number,
    Literal,  // quoted categorical label
    Var,
    Neg,
    Not,
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Min,
    Max,
    Abs,
    Exp,
    Log,
    If,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op;
    double number = 0.0;        // Number
    std::string text;           // Literal label / Var name
    int var = -1;               // Var slot in the binding list
    std::vector<NodePtr> args;  // operands
};

inline NodePtr make(Op op, std::vector<NodePtr> args) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args = std::move(args);
    return n;
}

inline NodePtr number(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Number;
    n->number = v;
    return n;
}

inline NodePtr literal(std::string label) {
    auto n = std::make_shared<Node>();
    n->op = Op::Literal;
    n->text = std::move(label);
    return n;
}

inline NodePtr variable(std::string name, int slot) {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->text = std::move(name);
    n->var = slot;
    return n;
}

// ---------------------------------------------------------------------------
// Evaluation

inline double finite_or_fail(double v, const char* what) {
    if (!std::isfinite(v)) fail(Errc::NumericError, std::string(what) + " produced a non-finite value");
    return v;
}

inline Value evaluate(const Node& n, std::span<const Value> vars) {
    auto num = [&](const NodePtr& k) { return evaluate(*k, vars).real(); };
    switch (n.op) {
        case Op::Number: return Value(n.number);
        case Op::Literal: return Value::category(n.text);
        case Op::Var: return vars[static_cast<std::size_t>(n.var)];
        case Op::Neg: return Value(-num(n.args[0]));
        case Op::Not: return Value(num(n.args[0]) != 0.0 ? 0.0 : 1.0);
        case Op::Add: return Value(finite_or_fail(num(n.args[0]) + num(n.args[1]), "+"));
        case Op::Sub: return Value(finite_or_fail(num(n.args[0]) - num(n.args[1]), "-"));
        case Op::Mul: return Value(finite_or_fail(num(n.args[0]) * num(n.args[1]), "*"));
        case Op::Div: {
            const double d = num(n.args[1]);
            if (d == 0.0) fail(Errc::NumericError, "division by zero");
            return Value(finite_or_fail(num(n.args[0]) / d, "/"));
        }
        case Op::Lt: return Value(num(n.args[0]) < num(n.args[1]) ? 1.0 : 0.0);
        case Op::Le: return Value(num(n.args[0]) <= num(n.args[1]) ? 1.0 : 0.0);
        case Op::Gt: return Value(num(n.args[0]) > num(n.args[1]) ? 1.0 : 0.0);
        case Op::Ge: return Value(num(n.args[0]) >= num(n.args[1]) ? 1.0 : 0.0);
        case Op::Eq:
        case Op::Ne: {
            const Value a = evaluate(*n.args[0], vars);
            const Value b = evaluate(*n.args[1], vars);
            if (a.is_category() != b.is_category())
                fail(Errc::DomainError, "cannot compare a category with a number");
            const bool eq = a == b;
            return Value((n.op == Op::Eq) == eq ? 1.0 : 0.0);
        }
        case Op::And: {
            const bool a = num(n.args[0]) != 0.0;
            const bool b = num(n.args[1]) != 0.0;
            return Value(a && b ? 1.0 : 0.0);
        }
        case Op::Or: {
            const bool a = num(n.args[0]) != 0.0;
            const bool b = num(n.args[1]) != 0.0;
            return Value(a || b ? 1.0 : 0.0);
        }
        case Op::Min: {
            double best = num(n.args[0]);
            for (std::size_t i = 1; i < n.args.size(); ++i) best = std::min(best, num(n.args[i]));
            return Value(best);
        }
        case Op::Max: {
            double best = num(n.args[0]);
            for (std::size_t i = 1; i < n.args.size(); ++i) best = std::max(best, num(n.args[i]));
            return Value(best);
        }
        case Op::Abs: return Value(std::fabs(num(n.args[0])));
        case Op::Exp: return Value(finite_or_fail(std::exp(num(n.args[0])), "exp"));
        case Op::Log: {
            const double a = num(n.args[0]);
            if (a <= 0.0) fail(Errc::NumericError, "log of a non-positive value");
            return Value(std::log(a));
        }
        case Op::If:
            // lazy branch so the untaken side may divide by zero etc.
            return num(n.args[0]) != 0.0 ? evaluate(*n.args[1], vars) : evaluate(*n.args[2], vars);
    }
    fail(Errc::InvalidArgument, "corrupt expression node");
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

enum class Tok { End, Number, String, Ident, Plus, Minus, Star, Slash, LParen, RParen, Comma, Lt, Le, Gt, Ge, Eq, Ne };

struct Token {
    Tok kind = Tok::End;
    std::size_t pos = 0;
    double number = 0.0;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
        tok_ = Token{};
        tok_.pos = i_;
        if (i_ >= src_.size()) {
            tok_.kind = Tok::End;
            return;
        }
        const char c = src_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_ + 1])))) {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i_;
            while (j < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
                ++j;
            tok_.kind = Tok::Ident;
            tok_.text.assign(src_.substr(i_, j - i_));
            i_ = j;
            return;
        }
        if (c == '"') {
            lex_string();
            return;
        }
        auto simple = [&](Tok k, std::size_t len) {
            tok_.kind = k;
            i_ += len;
        };
        switch (c) {
            case '+': simple(Tok::Plus, 1); return;
            case '-': simple(Tok::Minus, 1); return;
            case '*': simple(Tok::Star, 1); return;
            case '/': simple(Tok::Slash, 1); return;
            case '(': simple(Tok::LParen, 1); return;
            case ')': simple(Tok::RParen, 1); return;
            case ',': simple(Tok::Comma, 1); return;
            case '<': simple(at(1) == '=' ? Tok::Le : Tok::Lt, at(1) == '=' ? 2 : 1); return;
            case '>': simple(at(1) == '=' ? Tok::Ge : Tok::Gt, at(1) == '=' ? 2 : 1); return;
            case '=':
                if (at(1) == '=') { simple(Tok::Eq, 2); return; }
                fail(Errc::SyntaxError, "stray '='; did you mean '=='?", i_);
            case '!':
                if (at(1) == '=') { simple(Tok::Ne, 2); return; }
                fail(Errc::SyntaxError, "stray '!'; did you mean '!='?", i_);
            default:
                fail(Errc::SyntaxError, std::string("unexpected character '") + c + "'", i_);
        }
    }

    char at(std::size_t off) const { return i_ + off < src_.size() ? src_[i_ + off] : '\0'; }

    void lex_number() {
        std::size_t j = i_;
        while (j < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[j])) || src_[j] == '.')) ++j;
        if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
            std::size_t k = j + 1;
            if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
            if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
                ++k;
                while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
                j = k;
            }
        }
        double v = 0.0;
        const auto res = std::from_chars(src_.data() + i_, src_.data() + j, v);
        if (res.ec != std::errc() || res.ptr != src_.data() + j)
            fail(Errc::SyntaxError, "malformed number", i_);
        tok_.kind = Tok::Number;
        tok_.number = v;
        i_ = j;
    }

    void lex_string() {
        std::size_t j = i_ + 1;
        std::string out;
        while (j < src_.size() && src_[j] != '"') {
            if (src_[j] == '\\' && j + 1 < src_.size()) {
                out.push_back(src_[j + 1]);
                j += 2;
            } else {
                out.push_back(src_[j]);
                ++j;
            }
        }
        if (j >= src_.size()) fail(Errc::SyntaxError, "unterminated string literal", i_);
        tok_.kind = Tok::String;
        tok_.text = std::move(out);
        i_ = j + 1;
    }

    std::string_view src_;
    std::size_t i_ = 0;
    Token tok_;
};

class Parser {
public:
    Parser(std::string_view src, std::span<const std::string> vars) : lex_(src), vars_(vars) {}

    NodePtr run() {
        NodePtr e = parse_or();
        const Token& t = lex_.peek();
        if (t.kind != Tok::End)
            fail(Errc::SyntaxError, "unexpected trailing input", t.pos);
        return e;
    }

private:
    bool ident_is(const char* kw) const {
        return lex_.peek().kind == Tok::Ident && lex_.peek().text == kw;
    }

    NodePtr parse_or() {
        NodePtr lhs = parse_and();
        while (ident_is("or")) {
            lex_.take();
            lhs = make(Op::Or, {lhs, parse_and()});
        }
        return lhs;
    }

    NodePtr parse_and() {
        NodePtr lhs = parse_not();
        while (ident_is("and")) {
            lex_.take();
            lhs = make(Op::And, {lhs, parse_not()});
        }
        return lhs;
    }

    NodePtr parse_not() {
        if (ident_is("not")) {
            lex_.take();
            return make(Op::Not, {parse_not()});
        }
        return parse_comparison();
    }

    NodePtr parse_comparison() {
        NodePtr lhs = parse_additive();
        for (;;) {
            Op op;
            switch (lex_.peek().kind) {
                case Tok::Lt: op = Op::Lt; break;
                case Tok::Le: op = Op::Le; break;
                case Tok::Gt: op = Op::Gt; break;
                case Tok::Ge: op = Op::Ge; break;
                case Tok::Eq: op = Op::Eq; break;
                case Tok::Ne: op = Op::Ne; break;
                default: return lhs;
            }
            lex_.take();
            lhs = make(op, {lhs, parse_additive()});
        }
    }

    NodePtr parse_additive() {
        NodePtr lhs = parse_multiplicative();
        for (;;) {
            if (lex_.peek().kind == Tok::Plus) {
                lex_.take();
                lhs = make(Op::Add, {lhs, parse_multiplicative()});
            } else if (lex_.peek().kind == Tok::Minus) {
                lex_.take();
                lhs = make(Op::Sub, {lhs, parse_multiplicative()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_multiplicative() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (lex_.peek().kind == Tok::Star) {
                lex_.take();
                lhs = make(Op::Mul, {lhs, parse_unary()});
            } else if (lex_.peek().kind == Tok::Slash) {
                lex_.take();
                lhs = make(Op::Div, {lhs, parse_unary()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary() {
        if (lex_.peek().kind == Tok::Minus) {
            lex_.take();
            return make(Op::Neg, {parse_unary()});
        }
        return parse_primary();
    }

    NodePtr parse_primary() {
        const Token t = lex_.take();
        switch (t.kind) {
            case Tok::Number: return number(t.number);
            case Tok::String: return literal(t.text);
            case Tok::LParen: {
                NodePtr e = parse_or();
                expect(Tok::RParen, "expected ')'");
                return e;
            }
            case Tok::Ident: {
                if (lex_.peek().kind == Tok::LParen) return parse_call(t);
                for (std::size_t i = 0; i < vars_.size(); ++i)
                    if (vars_[i] == t.text) return variable(t.text, static_cast<int>(i));
                fail(Errc::UnboundVariable, "'" + t.text + "' is not a bound variable", t.pos);
            }
            case Tok::End:
                fail(Errc::SyntaxError, "unexpected end of expression", t.pos);
            default:
                fail(Errc::SyntaxError, "expected a value", t.pos);
        }
    }

    NodePtr parse_call(const Token& name) {
        lex_.take();  // '('
        std::vector<NodePtr> args;
        if (lex_.peek().kind != Tok::RParen) {
            args.push_back(parse_or());
            while (lex_.peek().kind == Tok::Comma) {
                lex_.take();
                args.push_back(parse_or());
            }
        }
        expect(Tok::RParen, "expected ')'");
        auto arity = [&](std::size_t lo, std::size_t hi) {
            if (args.size() < lo || args.size() > hi)
                fail(Errc::SyntaxError, "wrong argument count for " + name.text, name.pos);
        };
        if (name.text == "min") { arity(2, 64); return make(Op::Min, std::move(args)); }
        if (name.text == "max") { arity(2, 64); return make(Op::Max, std::move(args)); }
        if (name.text == "abs") { arity(1, 1); return make(Op::Abs, std::move(args)); }
        if (name.text == "exp") { arity(1, 1); return make(Op::Exp, std::move(args)); }
        if (name.text == "log") { arity(1, 1); return make(Op::Log, std::move(args)); }
        if (name.text == "if") { arity(3, 3); return make(Op::If, std::move(args)); }
        fail(Errc::SyntaxError, "unknown function '" + name.text + "'", name.pos);
    }

    void expect(Tok kind, const char* message) {
        const Token t = lex_.take();
        if (t.kind != kind) fail(Errc::SyntaxError, message, t.pos);
    }

    Lexer lex_;
    std::span<const std::string> vars_;
};

}  // namespace detail

inline NodePtr parse(std::string_view text, std::span<const std::string> vars) {
    return detail::Parser(text, vars).run();
}

// ---------------------------------------------------------------------------
// Printing. parse(to_string(parse(s))) always reproduces to_string(parse(s)).

namespace detail {

inline int precedence(Op op) {
    switch (op) {
        case Op::Or: return 1;
        case Op::And: return 2;
        case Op::Not: return 3;
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge:
        case Op::Eq:
        case Op::Ne: return 4;
        case Op::Add:
        case Op::Sub: return 5;
        case Op::Mul:
        case Op::Div: return 6;
        case Op::Neg: return 7;
        default: return 8;
    }
}

inline const char* op_token(Op op) {
    switch (op) {
        case Op::Or: return "or";
        case Op::And: return "and";
        case Op::Lt: return "<";
        case Op::Le: return "<=";
        case Op::Gt: return ">";
        case Op::Ge: return ">=";
        case Op::Eq: return "==";
        case Op::Ne: return "!=";
        case Op::Add: return "+";
        case Op::Sub: return "-";
        case Op::Mul: return "*";
        case Op::Div: return "/";
        default: return "?";
    }
}

inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void print(const Node& n, std::string& out, int parent_prec, bool right_side) {
    const int prec = precedence(n.op);
    const bool parens = prec < parent_prec || (prec == parent_prec && right_side);
    switch (n.op) {
        case Op::Number:
            if (n.number < 0) {
                out += "(" + format_number(n.number) + ")";
            } else {
                out += format_number(n.number);
            }
            return;
        case Op::Literal:
            out += '"';
            for (char c : n.text) {
                if (c == '"' || c == '\\') out += '\\';
                out += c;
            }
            out += '"';
            return;
        case Op::Var: out += n.text; return;
        case Op::Neg:
            if (parens) out += '(';
            out += '-';
            print(*n.args[0], out, prec, false);
            if (parens) out += ')';
            return;
        case Op::Not:
            if (parens) out += '(';
            out += "not ";
            print(*n.args[0], out, prec, false);
            if (parens) out += ')';
            return;
        case Op::Min:
        case Op::Max:
        case Op::Abs:
        case Op::Exp:
        case Op::Log:
        case Op::If: {
            const char* name = n.op == Op::Min   ? "min"
                               : n.op == Op::Max ? "max"
                               : n.op == Op::Abs ? "abs"
                               : n.op == Op::Exp ? "exp"
                               : n.op == Op::Log ? "log"
                                                 : "if";
            out += name;
            out += '(';
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) out += ", ";
                print(*n.args[i], out, 0, false);
            }
            out += ')';
            return;
        }
        default: {
            if (parens) out += '(';
            print(*n.args[0], out, prec, false);
            out += ' ';
            out += op_token(n.op);
            out += ' ';
            print(*n.args[1], out, prec, true);
            if (parens) out += ')';
            return;
        }
    }
}

}  // namespace detail

inline std::string to_string(const Node& n) {
    std::string out;
    detail::print(n, out, 0, false);
    return out;
}

inline std::string to_string(const NodePtr& n) { return to_string(*n); }

}  // namespace flowcredit::expr
