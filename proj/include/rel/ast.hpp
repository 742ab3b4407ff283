#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rel/errors.hpp"
#include "rel/value.hpp"

namespace rel::ast {

struct Node;
using NodePtr = std::shared_ptr<const Node>;

enum class Kind {
    // expressions
    Const,        // lit
    Ident,        // name
    TupleRef,     // name (x... used as an expression)
    WildcardVal,  // _
    WildcardTup,  // _...
    Union,        // a ; b
    Product,      // a , b
    Where,        // a where b            (surface; lowered to Product)
    Abstract,     // bindings : a; square=[..] vs round=(..) recorded in `name` ("[]" / "()")
    Apply,        // a[args]  partial application
    Reduce,       // reduce[&{a},&{b}]
    Arith,        // name in {add, subtract, multiply, divide, modulo}; a, b
    Neg,          // surface unary minus
    DotJoin,      // surface a . b
    LeftOverride, // surface a <++ b
    // formulas
    True_,        // {()}
    False_,       // {}
    FullApply,    // a(args)
    ReduceCheck,  // reduce(&{a},&{b},c)
    And, Or, Not,
    Implies, Iff, Xor,  // surface; lowered to and/or/not
    Compare,      // name in {eq, neq, lt, lte, gt, gte}; a, b
    Exists, Forall,  // bindings | a
};

struct Binding {
    enum class Kind { Value, ValueIn, TupleVar, RelVar, Literal };
    Kind kind = Kind::Value;
    std::string name;
    Value lit;       // Literal
    NodePtr range;   // ValueIn guard
    Span span;
};

struct Arg {
    enum class Kind { First, Second, Unannotated, TupleVar, Wildcard, WildcardTuple };
    Kind kind = Kind::Unannotated;
    NodePtr expr;       // First / Second / Unannotated
    std::string name;   // TupleVar
    Span span;
};

struct Node {
    Kind kind;
    Span span;
    Value lit;
    std::string name;
    NodePtr a, b, c;
    std::vector<Binding> bindings;
    std::vector<Arg> args;
};

NodePtr make(Kind kind, Span span = {});
NodePtr make_const(Value v, Span span = {});
NodePtr make_ident(std::string name, Span span = {});

struct RelDef {
    std::string name;
    std::vector<Binding> params;
    NodePtr body;
    bool square = false;  // def f[...] vs def f(...)
    Span span;
};

struct Constraint {
    std::string name;
    std::vector<Binding> params;
    NodePtr body;
    Span span;
};

struct Program {
    std::vector<RelDef> defs;
    std::vector<Constraint> ics;
};

bool equal(const NodePtr& a, const NodePtr& b);
bool equal(const Program& a, const Program& b);

// Source text that reparses to the same AST.
std::string to_source(const NodePtr& node);
std::string to_source(const Program& program);

}  // namespace rel::ast
