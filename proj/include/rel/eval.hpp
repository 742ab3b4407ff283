#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "rel/ast.hpp"
#include "rel/env.hpp"
#include "rel/relation.hpp"

namespace rel {

// Core-expression evaluation. May return a symbolic relation (closure,
// builtin, universe) without forcing enumeration; enumeration happens
// only at boundaries that demand it (output, reduce, membership scans).
RelationPtr eval_expr(const ast::NodePtr& n, const EnvPtr& env);

// Membership test that also works on symbolic relations.
bool relation_contains(const RelationPtr& r, const Tuple& t);

// Forces a finite extensional view of `r`; throws InfiniteResult when
// the relation cannot be finitely enumerated, UnsafePlan when no
// conjunct ordering can bind an abstraction variable.
RelationPtr force_extensional(const RelationPtr& r, Span span = {});

// Installed by the program evaluator: given a closure application, may
// resolve it by instantiating a registered relation-parameterized
// definition (computing its fixpoint with the relation arguments bound,
// with caching). Returns nullptr when the closure is not registered or
// the application does not bind all relation parameters to finite
// relations; apply_relation then falls back to symbolic application.
using ParametricInstantiator = std::function<RelationPtr(
    const RelationPtr& closure, const std::vector<ast::Arg>& args, const EnvPtr& env, bool full,
    Span span)>;
void set_parametric_instantiator(ParametricInstantiator fn);

// Application with an explicit argument list evaluated under `env`
// (argument expressions must have no unbound variables). With
// full=true the result is {<>} or {} per the membership reading.
RelationPtr apply_relation(const RelationPtr& callee, const std::vector<ast::Arg>& args,
                           const EnvPtr& env, bool full, Span span);

// reduce[op, src]: folds the last column of src's tuples, in canonical
// order, through the binary-operation relation op. Empty src gives {}.
RelationPtr eval_reduce(const RelationPtr& op, const RelationPtr& src, Span span);

// --- shared analysis helpers (also used by the safety module) ---

// Free value / tuple variables of a node, restricted to `candidates`
// (variable names of the enclosing scope); bindings introduced inside
// shadow as usual.
struct VarSet {
    std::set<std::string> values;
    std::set<std::string> tuples;
    bool empty() const { return values.empty() && tuples.empty(); }
};
VarSet free_vars(const ast::NodePtr& n, const VarSet& candidates);

// Splits a Product chain into its conjuncts, in syntactic order.
std::vector<ast::NodePtr> flatten_product(const ast::NodePtr& n);

}  // namespace rel
