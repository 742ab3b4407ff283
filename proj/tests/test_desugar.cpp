#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>

#include "rel/desugar.hpp"
#include "rel/parser.hpp"

using namespace rel;
using ast::Kind;

static ast::NodePtr d(const std::string& s) { return desugar_expression(parse_expression(s)); }

static bool core_only(const ast::NodePtr& n) {
    if (!n) return true;
    switch (n->kind) {
        case Kind::Where:
        case Kind::And:
        case Kind::Or:
        case Kind::Implies:
        case Kind::Iff:
        case Kind::Xor:
        case Kind::Compare:
        case Kind::Arith:
        case Kind::Neg:
        case Kind::DotJoin:
        case Kind::LeftOverride:
        case Kind::Forall:
            return false;
        default:
            break;
    }
    for (const auto& b : n->bindings)
        if (b.kind == ast::Binding::Kind::ValueIn || b.kind == ast::Binding::Kind::Literal)
            return false;
    for (const auto& a : n->args)
        if (a.expr && !core_only(a.expr)) return false;
    return core_only(n->a) && core_only(n->b) && core_only(n->c);
}

TEST_CASE("infix becomes builtin application") {
    auto n = d("1 + 2 * 3");
    REQUIRE(n->kind == Kind::Apply);
    CHECK(n->a->name == "add");
    REQUIRE(n->args.size() == 2);
    CHECK(n->args[0].kind == ast::Arg::Kind::First);
    CHECK(n->args[1].expr->a->name == "multiply");

    auto c = d("x < 3");
    REQUIRE(c->kind == Kind::FullApply);
    CHECK(c->a->name == "lt");
}

TEST_CASE("connectives collapse to product and union") {
    CHECK(d("P(x) and Q(x)")->kind == Kind::Product);
    CHECK(d("P(x) or Q(x)")->kind == Kind::Union);
    CHECK(d("x where P(x)")->kind == Kind::Product);
    auto imp = d("P(x) implies Q(x)");
    REQUIRE(imp->kind == Kind::Union);
    CHECK(imp->a->kind == Kind::Not);
}

TEST_CASE("forall becomes negated exists") {
    auto n = d("forall((x) | P(x))");
    REQUIRE(n->kind == Kind::Not);
    REQUIRE(n->a->kind == Kind::Exists);
    CHECK(n->a->a->kind == Kind::Not);
}

TEST_CASE("range guards move into the body") {
    auto n = d("(x in V) : P(x)");
    REQUIRE(n->kind == Kind::Abstract);
    REQUIRE(n->bindings.size() == 1);
    CHECK(n->bindings[0].kind == ast::Binding::Kind::Value);
    REQUIRE(n->a->kind == Kind::Product);
    CHECK(n->a->a->kind == Kind::FullApply);
    CHECK(n->a->a->a->name == "V");
}

TEST_CASE("dot join and override call library relations") {
    auto n = d("A . B");
    REQUIRE(n->kind == Kind::Apply);
    CHECK(n->a->name == "dot_join");
    CHECK(n->args[0].kind == ast::Arg::Kind::Second);
    auto o = d("sum[X] <++ 0");
    CHECK(o->a->name == "left_override");
}

TEST_CASE("clauses with one head fold into a union") {
    auto p = desugar(parse_program(
        "def fact(0, 1) : {()}\n"
        "def fact(n, m) : m = n * fact[n - 1] where n > 0\n"
        "def other : {1}\n"));
    REQUIRE(p.defs.size() == 2);
    CHECK(p.defs[0].name == "fact");
    REQUIRE(p.defs[0].body->kind == Kind::Union);
    auto first = p.defs[0].body->a;
    REQUIRE(first->kind == Kind::Abstract);
    // literal head params become fresh vars guarded by equalities
    CHECK(first->bindings.size() == 2);
    CHECK(first->bindings[0].kind == ast::Binding::Kind::Value);
    REQUIRE(first->a->kind == Kind::Product);
    CHECK(first->a->a->a->name == "eq");
    CHECK(core_only(p.defs[0].body));
}

TEST_CASE("constraint params quantify universally") {
    auto p = desugar(parse_program("ic InRange(x in Amounts) requires x > 0"));
    REQUIRE(p.ics.size() == 1);
    const auto& ic = p.ics[0];
    REQUIRE(ic.params.size() == 1);
    CHECK(ic.params[0].kind == ast::Binding::Kind::Value);
    // guard weakens:  not Amounts(x) or body
    REQUIRE(ic.body->kind == Kind::Union);
    CHECK(ic.body->a->kind == Kind::Not);
}

TEST_CASE("desugared output stays in the core subset") {
    for (const char* s : {
             "x + 1 = y",
             "forall((x in V) | exists((y) | E(x, y) iff E(y, x)))",
             "[p] : PaymentAmount[p] where PaymentOrder(p, :O1)",
             "A . B . C <++ {(:x, 0)}",
             "-x % 3 != 0 xor P(x)",
             "reduce[&{(+)}, &{[p] : Pay[p]}]",
         }) {
        CAPTURE(s);
        CHECK(core_only(d(s)));
    }
}
