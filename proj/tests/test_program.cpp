#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>
#include <vector>

#include "rel/desugar.hpp"
#include "rel/env.hpp"
#include "rel/errors.hpp"
#include "rel/eval.hpp"
#include "rel/parser.hpp"
#include "rel/program.hpp"

using namespace rel;

namespace {

Value I(int64_t v) { return Value(v); }
Value S(const char* v) { return Value(std::string(v)); }

Tuple T(std::vector<Value> vs) { return Tuple::of_values(std::move(vs)); }

RelationPtr rel_of(std::vector<Tuple> ts) {
    TupleSet s(ts.begin(), ts.end());
    return Relation::from_tuples(std::move(s));
}

EnvPtr graph_env() {
    auto e = Env::root();
    e->bind("E", rel_of({T({I(1), I(2)}), T({I(2), I(3)})}));
    e->bind("R", rel_of({T({I(1), I(2)}), T({I(3), I(4)})}));
    e->bind("S", rel_of({T({I(5), I(6)})}));
    e->bind("V", rel_of({T({S("a")}), T({S("b")})}));
    e->bind("EV", rel_of({T({S("a"), S("b")})}));
    return e;
}

EnvPtr run(const std::string& src, const EnvPtr& base, const ProgramOptions& opts = {},
           Stratification* report = nullptr) {
    return eval_program(desugar(parse_program(src)), base, opts, report);
}

TupleSet query(const std::string& q, const EnvPtr& env) {
    return force_extensional(eval_expr(desugar_expression(parse_expression(q)), env))->tuples();
}

const char* kTC =
    "def TC_E(x, y) : E(x, y)\n"
    "def TC_E(x, y) : exists((z) | E(x, z) and TC_E(z, y))\n";

}  // namespace

TEST_CASE("transitive closure reaches its least fixpoint") {
    auto env = run(kTC, graph_env());
    CHECK(query("TC_E", env) ==
          TupleSet{T({I(1), I(2)}), T({I(2), I(3)}), T({I(1), I(3)})});
}

TEST_CASE("empty base relation gives an empty closure") {
    auto base = Env::root();
    base->bind("E", Relation::empty());
    auto env = run(kTC, base);
    CHECK(query("TC_E", env) == TupleSet{});
}

TEST_CASE("rule order does not affect the result") {
    const char* swapped =
        "def TC_E(x, y) : exists((z) | E(x, z) and TC_E(z, y))\n"
        "def TC_E(x, y) : E(x, y)\n";
    CHECK(query("TC_E", run(kTC, graph_env())) == query("TC_E", run(swapped, graph_env())));
}

TEST_CASE("permutations via recursive transpositions") {
    auto base = Env::root();
    base->bind("R", rel_of({T({I(1), I(2), I(3)})}));
    auto env = run(
        "def Perm(x...) : R(x...)\n"
        "def Perm(x..., a, y..., b, z...) : Perm(x..., b, y..., a, z...)\n",
        base);
    CHECK(query("Perm", env) ==
          TupleSet{T({I(1), I(2), I(3)}), T({I(1), I(3), I(2)}), T({I(2), I(1), I(3)}),
                   T({I(2), I(3), I(1)}), T({I(3), I(1), I(2)}), T({I(3), I(2), I(1)})});
}

TEST_CASE("dependency graph polarities") {
    auto prog = desugar(parse_program(
        "def A(x) : E(x, _)\n"
        "def B(x) : A(x) and not C(x)\n"
        "def C(x) : E(_, x)\n"
        "def TC_E(x, y) : E(x, y)\n"
        "def TC_E(x, y) : exists((z) | E(x, z) and TC_E(z, y))\n"));
    auto g = build_dependency_graph(prog);
    bool tc_self = false, b_neg = false, b_pos = false;
    for (const DepEdge& e : g.edges) {
        if (e.from == "TC_E" && e.to == "TC_E" && e.polarity == DepEdge::Polarity::Positive)
            tc_self = true;
        if (e.from == "C" && e.to == "B" && e.polarity == DepEdge::Polarity::Negative)
            b_neg = true;
        if (e.from == "A" && e.to == "B" && e.polarity == DepEdge::Polarity::Positive)
            b_pos = true;
    }
    CHECK(tc_self);
    CHECK(b_neg);
    CHECK(b_pos);

    auto strat = stratify(prog, g);
    // Dependencies come before dependents; TC_E's component is recursive
    // but monotone, B's is neither.
    size_t pos_a = 0, pos_b = 0;
    for (size_t i = 0; i < strat.strata.size(); ++i) {
        const Stratum& st = strat.strata[i];
        if (st.names == std::vector<std::string>{"A"}) pos_a = i;
        if (st.names == std::vector<std::string>{"B"}) {
            pos_b = i;
            CHECK_FALSE(st.recursive);
            CHECK_FALSE(st.staged);
        }
        if (st.names == std::vector<std::string>{"TC_E"}) {
            CHECK(st.recursive);
            CHECK_FALSE(st.staged);
        }
    }
    CHECK(pos_a < pos_b);
}

TEST_CASE("all-pairs shortest path by stage semantics") {
    auto env = run(
        "def APSP({V}, {E}, x, y, 0) : V(x) and V(y) and x = y\n"
        "def APSP({V}, {E}, x, y, i) : "
        "exists((z in V) | E(x, z) and APSP[V, E](z, y, i - 1)) and "
        "not exists((j in Int) | j < i and APSP[V, E](x, y, j))\n",
        graph_env());
    CHECK(query("APSP[V, EV]", env) ==
          TupleSet{T({S("a"), S("a"), I(0)}), T({S("b"), S("b"), I(0)}),
                   T({S("a"), S("b"), I(1)})});
}

TEST_CASE("recursive relation-parameterized definitions are flagged staged") {
    auto prog = desugar(parse_program(
        "def APSP({V}, {E}, x, y, 0) : V(x) and V(y) and x = y\n"
        "def APSP({V}, {E}, x, y, i) : "
        "exists((z in V) | E(x, z) and APSP[V, E](z, y, i - 1)) and "
        "not exists((j in Int) | j < i and APSP[V, E](x, y, j))\n"));
    auto strat = stratify(prog, build_dependency_graph(prog));
    REQUIRE(strat.strata.size() == 1);
    CHECK(strat.strata[0].recursive);
    CHECK(strat.strata[0].staged);
    CHECK(strat.strata[0].parametric);
}

TEST_CASE("stage semantics subsumes the least fixpoint on monotone programs") {
    ProgramOptions opts;
    opts.force_staged = true;
    CHECK(query("TC_E", run(kTC, graph_env(), opts)) == query("TC_E", run(kTC, graph_env())));
}

TEST_CASE("a non-recursive definition converges in two stages under stage semantics") {
    ProgramOptions opts;
    opts.force_staged = true;
    Stratification report;
    auto env = run("def Flat(x) : E(x, _)\n", graph_env(), opts, &report);
    CHECK(query("Flat", env) == TupleSet{T({I(1)}), T({I(2)})});
    REQUIRE(report.strata.size() == 1);
    CHECK(report.strata[0].stages == 2);
}

TEST_CASE("divergent recursion reports a missing fixpoint") {
    ProgramOptions opts;
    opts.max_stages = 50;
    CHECK_THROWS_AS(run("def N(x) : x = 0\n"
                        "def N(x) : exists((y) | N(y) and x = y + 1)\n",
                        graph_env(), opts),
                    NoFixpoint);
}

TEST_CASE("instantiations of relation-parameterized definitions are cached") {
    reset_instantiation_state();
    auto env = run("def P[{X}, {Y}] : X, Y\n", graph_env());
    TupleSet expect{T({I(1), I(2), I(5), I(6)}), T({I(3), I(4), I(5), I(6)})};
    size_t hits0 = instantiation_cache_hits();
    CHECK(query("P[R, S]", env) == expect);
    size_t misses1 = instantiation_cache_misses();
    CHECK(query("P[R, S]", env) == expect);
    CHECK(instantiation_cache_hits() > hits0);
    CHECK(instantiation_cache_misses() == misses1);
}

TEST_CASE("bounded stage count for parametric instantiation") {
    ProgramOptions opts;
    opts.max_stages = 3;
    auto env = run(
        "def Count({B}, x) : B(x)\n"
        "def Count({B}, x) : exists((y) | Count[B](y) and x = y + 1)\n",
        graph_env(), opts);
    CHECK_THROWS_AS(query("Count[{1}]", env), NoFixpoint);
}
