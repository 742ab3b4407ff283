#pragma once

#include "rel/ast.hpp"

namespace rel {

// A desugared top-level definition: all the surface 'def' clauses for one
// name, folded into a single core expression (a union of abstractions
// and/or plain expressions).
struct CoreDef {
    std::string name;
    ast::NodePtr body;
    Span span;
};

struct CoreProgram {
    std::vector<CoreDef> defs;
    std::vector<ast::Constraint> ics;  // bodies desugared; params kept
};

// Rewrites the surface AST into the core subset the evaluator handles:
//   Const, Ident, TupleRef, WildcardVal, WildcardTup, Union, Product,
//   Abstract, Apply, FullApply, Reduce, ReduceCheck, True_, False_,
//   Not, Exists.
// Infix arithmetic and comparisons become builtin applications, the
// remaining connectives become Product/Union/Not, 'forall' becomes a
// negated 'exists', '.'/'<++' become dot_join/left_override calls, 'in'
// guards and literal head parameters become explicit conjuncts, and
// clauses sharing a head name are folded into one union.
CoreProgram desugar(const ast::Program& program);

// Same rewrite for a stand-alone expression (REPL queries).
ast::NodePtr desugar_expression(const ast::NodePtr& expr);

}  // namespace rel
