#pragma once

#include <set>
#include <string>
#include <vector>

#include "rel/desugar.hpp"

namespace rel {

// One planning step chosen by the static analysis, for --explain-safety.
struct PlanStep {
    std::string description;
    Span span;
};

// Result of analyzing one definition.
struct DefPlan {
    std::string name;
    bool parametric = false;  // has a relation-variable parameter; checked at instantiation
    bool ok = true;
    std::vector<PlanStep> steps;
    std::string unbound_variable;  // set when !ok
    std::string atom;              // source of the atom that got stuck
    Span error_span;
};

struct SafetyReport {
    std::vector<DefPlan> defs;
    bool ok() const;
    // First failure formatted as an UnsafePlan-style message.
    std::string first_error() const;
    // Full plan dump for --explain-safety.
    std::string explain() const;
};

// Static finiteness analysis: for every definition (and every abstraction
// or quantifier nested in one) finds a conjunct order in which each atom
// either has all variables bound, is a scan of an enumerable relation
// that binds its variables, or is a builtin invoked under a supported
// binding pattern; a guarded-range fallback mirrors the evaluator.
// `enumerable_names` are identifiers assumed to denote finite relations
// (stored relations and other definitions).
SafetyReport check_program(const CoreProgram& program,
                           const std::set<std::string>& enumerable_names);

// Same analysis for one stand-alone core expression (REPL / constraint
// bodies); name is used in diagnostics.
DefPlan check_expression(const ast::NodePtr& body, const std::string& name,
                         const std::set<std::string>& enumerable_names);

// Throws UnsafePlan with the first diagnostic if the report has failures.
void enforce(const SafetyReport& report);

}  // namespace rel
