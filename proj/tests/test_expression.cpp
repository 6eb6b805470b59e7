#include <catch2/catch_amalgamated.hpp>

#include <flowcredit/expression.hpp>
#include <flowcredit/rng.hpp>

using namespace flowcredit;

namespace {

double eval_num(const std::string& text, const std::vector<std::string>& vars,
                const std::vector<double>& args) {
    const expr::NodePtr ast = expr::parse(text, vars);
    std::vector<Value> values(args.begin(), args.end());
    return expr::evaluate(*ast, values).real();
}

}  // namespace

TEST_CASE("or expression matches the truth table") {
    const std::vector<std::string> vars{"x1", "x2"};
    CHECK(eval_num("x1 or x2", vars, {1, 1}) == 1.0);
    CHECK(eval_num("x1 or x2", vars, {1, 0}) == 1.0);
    CHECK(eval_num("x1 or x2", vars, {0, 1}) == 1.0);
    CHECK(eval_num("x1 or x2", vars, {0, 0}) == 0.0);
    CHECK(eval_num("x1 and x2", vars, {1, 0}) == 0.0);
    CHECK(eval_num("not x1", vars, {0, 0}) == 1.0);
}

TEST_CASE("arithmetic and precedence") {
    const std::vector<std::string> vars{"x1", "x2", "x3"};
    CHECK(eval_num("2*x1 - x2 + 0.5", vars, {3, 1, 0}) == Catch::Approx(5.5));
    CHECK(eval_num("1 + 2 * 3", vars, {0, 0, 0}) == 7.0);
    CHECK(eval_num("(1 + 2) * 3", vars, {0, 0, 0}) == 9.0);
    CHECK(eval_num("-x1 * x2", vars, {2, 3, 0}) == -6.0);
    CHECK(eval_num("x1 - x2 - x3", vars, {10, 3, 2}) == 5.0);
    CHECK(eval_num("x1 < x2 and x2 < x3", vars, {1, 2, 3}) == 1.0);
    CHECK(eval_num("min(x1, x2, x3)", vars, {4, -2, 9}) == -2.0);
    CHECK(eval_num("max(x1, abs(x2))", vars, {1, -5, 0}) == 5.0);
    CHECK(eval_num("exp(0) + log(1)", vars, {0, 0, 0}) == 1.0);
}

TEST_CASE("conditional evaluates only the taken branch") {
    const std::vector<std::string> vars{"x"};
    CHECK(eval_num("if(x > 0, 1/x, 0)", vars, {0}) == 0.0);
    CHECK(eval_num("if(x > 0, 1/x, 0)", vars, {4}) == 0.25);
}

TEST_CASE("numeric failures") {
    const std::vector<std::string> vars{"x"};
    auto code = [&](const std::string& text, double v) {
        try {
            eval_num(text, vars, {v});
            return Errc::InvalidArgument;
        } catch (const FlowError& e) {
            return e.code();
        }
    };
    CHECK(code("1/x", 0.0) == Errc::NumericError);
    CHECK(code("log(x)", -1.0) == Errc::NumericError);
    CHECK(code("log(x)", 0.0) == Errc::NumericError);
    CHECK(code("exp(x)", 1e9) == Errc::NumericError);  // overflow to non-finite
}

TEST_CASE("syntax errors carry byte offsets") {
    try {
        expr::parse("x3 +", std::vector<std::string>{"x3"});
        FAIL("expected a syntax error");
    } catch (const FlowError& e) {
        CHECK(e.code() == Errc::SyntaxError);
        CHECK(e.position() == 4);
    }
    try {
        expr::parse("min(x3)", std::vector<std::string>{"x3"});
        FAIL("expected a syntax error");
    } catch (const FlowError& e) {
        CHECK(e.code() == Errc::SyntaxError);
        CHECK(e.position() == 0);
    }
    CHECK_THROWS_AS(expr::parse("x3 @ 1", std::vector<std::string>{"x3"}), FlowError);
}

TEST_CASE("unbound variables are rejected at parse time") {
    try {
        expr::parse("x1 or x9", std::vector<std::string>{"x1", "x2"});
        FAIL("expected unbound variable");
    } catch (const FlowError& e) {
        CHECK(e.code() == Errc::UnboundVariable);
        CHECK(std::string(e.what()).find("x9") != std::string::npos);
    }
}

TEST_CASE("categorical equality against quoted literals") {
    const std::vector<std::string> vars{"season"};
    const expr::NodePtr ast = expr::parse("season == \"wet\"", vars);
    std::vector<Value> wet{Value::category("wet")};
    std::vector<Value> dry{Value::category("dry")};
    CHECK(expr::evaluate(*ast, wet).real() == 1.0);
    CHECK(expr::evaluate(*ast, dry).real() == 0.0);

    const expr::NodePtr neq = expr::parse("season != \"wet\"", vars);
    CHECK(expr::evaluate(*neq, dry).real() == 1.0);

    // categories cannot meet numbers or ordering operators
    const expr::NodePtr bad = expr::parse("season == 1", vars);
    CHECK_THROWS_AS(expr::evaluate(*bad, wet), FlowError);
    const expr::NodePtr cmp = expr::parse("season < \"wet\"", vars);
    CHECK_THROWS_AS(expr::evaluate(*cmp, wet), FlowError);
}

namespace {

expr::NodePtr random_ast(Rng& rng, const std::vector<std::string>& vars, int depth) {
    const int pick = depth <= 0 ? static_cast<int>(rng.below(3))
                                : static_cast<int>(rng.below(12));
    using expr::Op;
    auto sub = [&](int d) { return random_ast(rng, vars, d); };
    switch (pick) {
        case 0: return expr::number(static_cast<double>(rng.below(100)) / 4.0);
        case 1:
        case 2: {
            const int slot = static_cast<int>(rng.below(vars.size()));
            return expr::variable(vars[static_cast<std::size_t>(slot)], slot);
        }
        case 3: return expr::make(Op::Add, {sub(depth - 1), sub(depth - 1)});
        case 4: return expr::make(Op::Sub, {sub(depth - 1), sub(depth - 1)});
        case 5: return expr::make(Op::Mul, {sub(depth - 1), sub(depth - 1)});
        case 6: return expr::make(Op::Div, {sub(depth - 1), sub(depth - 1)});
        case 7: return expr::make(Op::Neg, {sub(depth - 1)});
        case 8: return expr::make(Op::Or, {sub(depth - 1), sub(depth - 1)});
        case 9: return expr::make(Op::And, {sub(depth - 1), sub(depth - 1)});
        case 10: return expr::make(Op::Lt, {sub(depth - 1), sub(depth - 1)});
        default: return expr::make(Op::If, {sub(depth - 1), sub(depth - 1), sub(depth - 1)});
    }
}

}  // namespace

TEST_CASE("printing then parsing is a fixed point") {
    const std::vector<std::string> vars{"a", "b", "c"};
    for (const char* text : {"a or b and not c", "a - (b - c)", "a - b - c", "-(a + b) * c",
                             "if(a > 0, min(a, b), max(b, c)) + 1e-3", "a == \"x y\""}) {
        const std::string once = expr::to_string(expr::parse(text, vars));
        const std::string twice = expr::to_string(expr::parse(once, vars));
        CHECK(once == twice);
    }
    // randomized round-trips
    Rng rng(13);
    for (int i = 0; i < 300; ++i) {
        const expr::NodePtr ast = random_ast(rng, vars, 4);
        const std::string once = expr::to_string(ast);
        const std::string twice = expr::to_string(expr::parse(once, vars));
        CHECK(once == twice);
    }
}
