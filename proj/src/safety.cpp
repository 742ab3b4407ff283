#include "rel/safety.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <sstream>

#include "rel/builtins.hpp"
#include "rel/errors.hpp"
#include "rel/eval.hpp"

namespace rel {

namespace {

using ast::Arg;
using ast::Binding;
using ast::Kind;
using ast::Node;
using ast::NodePtr;

// Thrown internally when a sub-analysis gets stuck; carries the diagnostic.
struct Stuck {
    std::string variable;
    std::string atom;
    Span span;
};

class Checker {
public:
    Checker(const std::set<std::string>& names, DefPlan& plan) : names_(names), plan_(plan) {}

    // Variables the current plan must bind; everything else mentioned is
    // assumed bound by an enclosing scope.
    struct Scope {
        std::set<std::string> values;  // unbound value variables
        std::set<std::string> tuples;  // unbound tuple variables
        bool empty() const { return values.empty() && tuples.empty(); }
    };

    // Enumerability of an expression with no variables of its own to bind.
    void check_enumerable(const NodePtr& n) {
        switch (n->kind) {
            case Kind::Const:
            case Kind::True_:
            case Kind::False_:
                return;
            case Kind::Ident: {
                if (names_.count(n->name)) return;
                if (resolve_builtin(n->name))
                    throw Stuck{"", ast::to_source(n),
                                n->span};  // builtins are infinite sets
                return;  // unknown names surface as UnboundIdentifier later
            }
            case Kind::TupleRef:
                return;
            case Kind::WildcardVal:
            case Kind::WildcardTup:
                throw Stuck{"", ast::to_source(n), n->span};
            case Kind::Union:
                check_enumerable(n->a);
                check_enumerable(n->b);
                return;
            case Kind::Product: {
                Scope none;
                plan_conjuncts(none, flatten_product(n));
                return;
            }
            case Kind::Abstract: {
                Scope sc;
                for (const Binding& b : n->bindings) {
                    if (b.kind == Binding::Kind::RelVar)
                        return;  // symbolic; re-checked when instantiated
                    if (b.kind == Binding::Kind::TupleVar)
                        sc.tuples.insert(b.name);
                    else
                        sc.values.insert(b.name);
                }
                plan_conjuncts(sc, flatten_product(n->a));
                return;
            }
            case Kind::Apply:
            case Kind::FullApply: {
                if (const BuiltinDef* def = callee_builtin(n)) {
                    check_builtin_call(*def, n, {});
                    return;
                }
                check_applicable(n->a);
                for (const Arg& a : n->args)
                    if (a.expr) check_enumerable_args_only(a.expr);
                return;
            }
            case Kind::Not:
                check_enumerable_args_only(n->a);
                return;
            case Kind::Exists: {
                Scope sc;
                collect_quantifier_vars(n, sc);
                plan_conjuncts(sc, flatten_product(n->a));
                return;
            }
            case Kind::Reduce:
                check_applicable(n->a);
                check_enumerable(n->b);
                return;
            case Kind::ReduceCheck:
                check_applicable(n->a);
                check_enumerable(n->b);
                check_enumerable(n->c);
                return;
            default:
                return;
        }
    }

    // Orders `conjuncts` so each is executable when reached, binding the
    // scope's variables along the way. Throws Stuck when no order works.
    void plan_conjuncts(Scope sc, std::vector<NodePtr> conjuncts) {
        std::vector<bool> done(conjuncts.size(), false);
        size_t remaining = conjuncts.size();
        while (remaining > 0) {
            bool progressed = false;
            // Pass 1: conjuncts whose variables are all bound.
            for (size_t i = 0; i < conjuncts.size() && !progressed; ++i) {
                if (done[i]) continue;
                if (!unbound(sc, conjuncts[i]).empty()) continue;
                check_enumerable(conjuncts[i]);
                step("evaluate " + ast::to_source(conjuncts[i]), conjuncts[i]->span);
                done[i] = true;
                --remaining;
                progressed = true;
            }
            if (progressed) continue;
            // Pass 2: atoms that bind variables by matching.
            for (size_t i = 0; i < conjuncts.size() && !progressed; ++i) {
                if (done[i]) continue;
                if (try_binding_atom(sc, conjuncts[i])) {
                    done[i] = true;
                    --remaining;
                    progressed = true;
                }
            }
            if (progressed) continue;
            // Pass 3: derive a finite range for one variable from guards.
            std::set<std::string> candidates;
            for (size_t i = 0; i < conjuncts.size(); ++i) {
                if (done[i]) continue;
                Scope u = unbound(sc, conjuncts[i]);
                candidates.insert(u.values.begin(), u.values.end());
            }
            for (const std::string& v : candidates) {
                bool found = false;
                for (size_t i = 0; i < conjuncts.size() && !found; ++i)
                    if (!done[i]) found = range_guarded(v, conjuncts[i]);
                if (found) {
                    step("range of " + v + " inferred from guards", Span{});
                    sc.values.erase(v);
                    progressed = true;
                    break;
                }
            }
            if (progressed) continue;
            // Stuck: report the first atom with an unbound variable.
            for (size_t i = 0; i < conjuncts.size(); ++i) {
                if (done[i]) continue;
                Scope u = unbound(sc, conjuncts[i]);
                std::string var = !u.values.empty() ? *u.values.begin()
                                                    : *u.tuples.begin() + "...";
                throw Stuck{var, ast::to_source(conjuncts[i]), conjuncts[i]->span};
            }
            throw Stuck{"", "", {}};
        }
    }

private:
    void step(std::string desc, Span sp) { plan_.steps.push_back({std::move(desc), sp}); }

    const BuiltinDef* resolve_builtin(const std::string& name) const {
        static const std::map<std::string, std::string> aliases = {
            {"(+)", "add"}, {"(-)", "subtract"}, {"(*)", "multiply"},
            {"(/)", "divide"}, {"(%)", "modulo"},
        };
        std::string n = name;
        if (auto it = aliases.find(n); it != aliases.end()) n = it->second;
        if (names_.count(name)) return nullptr;  // user definition shadows
        return find_builtin(n);
    }

    const BuiltinDef* callee_builtin(const NodePtr& apply) const {
        if (apply->a->kind != Kind::Ident) return nullptr;
        return resolve_builtin(apply->a->name);
    }

    // Anything can be applied; only reject shapes that are plainly not
    // relations. Nested abstractions still get their own body check when
    // their parameters are first-order.
    void check_applicable(const NodePtr& n) {
        if (n->kind == Kind::Abstract) {
            bool parametric = false;
            for (const Binding& b : n->bindings)
                if (b.kind == Binding::Kind::RelVar) parametric = true;
            if (!parametric) check_enumerable(n);
            return;
        }
        if (n->kind == Kind::Ident || n->kind == Kind::TupleRef) return;
        check_enumerable_args_only(n);
    }

    // Recursive well-formedness of nested closed subterms without
    // demanding enumerability of the node itself.
    void check_enumerable_args_only(const NodePtr& n) {
        if (!n) return;
        if (n->kind == Kind::Abstract || n->kind == Kind::Exists) {
            check_enumerable(n);
            return;
        }
        check_enumerable_args_only(n->a);
        check_enumerable_args_only(n->b);
        check_enumerable_args_only(n->c);
        for (const Arg& a : n->args) check_enumerable_args_only(a.expr);
    }

    Scope unbound(const Scope& sc, const NodePtr& n) const {
        VarSet cand;
        cand.values = sc.values;
        cand.tuples = sc.tuples;
        VarSet fv = free_vars(n, cand);
        return Scope{fv.values, fv.tuples};
    }

    void collect_quantifier_vars(const NodePtr& n, Scope& sc) {
        for (const Binding& b : n->bindings) {
            if (b.kind == Binding::Kind::TupleVar)
                sc.tuples.insert(b.name);
            else if (b.kind == Binding::Kind::RelVar)
                throw Stuck{b.name, "quantification over all relations", n->span};
            else
                sc.values.insert(b.name);
        }
    }

    // Atoms able to bind variables: applications of enumerable relations
    // with variables only as whole arguments, builtins under a supported
    // pattern, unions binding on both sides, and quantified subformulas.
    bool try_binding_atom(Scope& sc, const NodePtr& n) {
        switch (n->kind) {
            case Kind::Apply:
            case Kind::FullApply: {
                if (!unbound(sc, n->a).empty()) return false;
                if (const BuiltinDef* def = callee_builtin(n))
                    return check_builtin_call(*def, n, &sc);
                // Enumerable (or assumed-enumerable) callee: a scan binds
                // every whole-argument variable.
                std::vector<std::string> vals, tups;
                for (const Arg& a : n->args) {
                    switch (a.kind) {
                        case Arg::Kind::Wildcard:
                        case Arg::Kind::WildcardTuple:
                            break;
                        case Arg::Kind::TupleVar:
                            if (sc.tuples.count(a.name)) tups.push_back(a.name);
                            break;
                        case Arg::Kind::First:
                        case Arg::Kind::Unannotated:
                            if (a.expr->kind == Kind::Ident && sc.values.count(a.expr->name)) {
                                vals.push_back(a.expr->name);
                                break;
                            }
                            if (!unbound(sc, a.expr).empty()) return false;
                            break;
                        case Arg::Kind::Second:
                            if (!unbound(sc, a.expr).empty()) return false;
                            break;
                    }
                }
                check_applicable(n->a);
                for (const std::string& v : vals) sc.values.erase(v);
                for (const std::string& t : tups) sc.tuples.erase(t);
                step("scan " + ast::to_source(n), n->span);
                return true;
            }
            case Kind::Union: {
                // Both alternatives must be plannable; only variables
                // bound by both sides become bound.
                Scope left = sc, right = sc;
                try {
                    plan_side(left, n->a);
                    plan_side(right, n->b);
                } catch (const Stuck&) {
                    return false;
                }
                Scope joined;
                for (const auto& v : sc.values)
                    if (left.values.count(v) || right.values.count(v))
                        joined.values.insert(v);
                joined.tuples = sc.tuples;
                sc = joined;
                step("alternatives " + ast::to_source(n), n->span);
                return true;
            }
            case Kind::Exists: {
                Scope inner = sc;
                try {
                    collect_quantifier_vars(n, inner);
                    plan_conjuncts(inner, flatten_product(n->a));
                } catch (const Stuck&) {
                    return false;
                }
                Scope u = unbound(sc, n);
                for (const auto& v : u.values) sc.values.erase(v);
                for (const auto& t : u.tuples) sc.tuples.erase(t);
                step("witness " + ast::to_source(n), n->span);
                return true;
            }
            default:
                return false;
        }
    }

    // Plans one union side in place; `sc` keeps the variables that side
    // leaves unbound (none on success).
    void plan_side(Scope& sc, const NodePtr& side) {
        Scope local;
        Scope u = unbound(sc, side);
        plan_conjuncts(u, flatten_product(side));
        for (const auto& v : u.values) sc.values.erase(v);
        for (const auto& t : u.tuples) sc.tuples.erase(t);
    }

    // Builtin application under the static binding pattern. With sc ==
    // nullptr the call must be fully ground.
    bool check_builtin_call(const BuiltinDef& def, const NodePtr& n, Scope* sc_in) {
        static Scope no_scope;
        Scope& sc = sc_in ? *sc_in : no_scope;
        std::string mask;
        std::vector<std::string> to_bind;
        for (const Arg& a : n->args) {
            switch (a.kind) {
                case Arg::Kind::Wildcard:
                    mask += 'f';
                    break;
                case Arg::Kind::First:
                case Arg::Kind::Unannotated:
                    if (a.expr->kind == Kind::Ident && sc.values.count(a.expr->name)) {
                        mask += 'f';
                        to_bind.push_back(a.expr->name);
                        break;
                    }
                    if (!unbound(sc, a.expr).empty()) return false;
                    mask += 'b';
                    break;
                default:
                    return false;  // tuple/relation arguments never fit builtins
            }
        }
        if (mask.size() > def.arity)
            throw Stuck{"", ast::to_source(n), n->span};
        while (mask.size() < def.arity) mask += 'f';
        const std::string* chosen = nullptr;
        for (const auto& p : def.patterns) {
            bool fits = true;
            for (size_t i = 0; i < p.size(); ++i)
                if (p[i] == 'b' && mask[i] != 'b') fits = false;
            if (fits) {
                chosen = &p;
                break;
            }
        }
        if (!chosen) {
            if (sc_in) return false;
            throw Stuck{"", ast::to_source(n), n->span};
        }
        for (const std::string& v : to_bind) sc.values.erase(v);
        std::string shown = n->a->kind == Kind::Ident ? n->a->name : def.name;
        step("builtin " + shown + " with pattern " + *chosen + " for " + ast::to_source(n),
             n->span);
        return true;
    }

    // Positive guard giving `var` a finite range: occurrence as a simple
    // argument of an application of an enumerable relation, possibly
    // nested inside argument expressions.
    bool range_guarded(const std::string& var, const NodePtr& n) const {
        if (!n) return false;
        switch (n->kind) {
            case Kind::Not:
                return false;
            case Kind::Union:
                return range_guarded(var, n->a) && range_guarded(var, n->b);
            case Kind::Product:
                return range_guarded(var, n->a) || range_guarded(var, n->b);
            case Kind::Abstract:
            case Kind::Exists:
                for (const Binding& b : n->bindings)
                    if (b.name == var) return false;  // shadowed
                return range_guarded(var, n->a);
            case Kind::Apply:
            case Kind::FullApply: {
                bool callee_enumerable =
                    n->a->kind == Kind::Ident && !resolve_builtin(n->a->name);
                if (callee_enumerable) {
                    for (const Arg& a : n->args) {
                        if ((a.kind == Arg::Kind::First || a.kind == Arg::Kind::Unannotated) &&
                            a.expr->kind == Kind::Ident && a.expr->name == var)
                            return true;
                    }
                }
                for (const Arg& a : n->args)
                    if (a.expr && range_guarded(var, a.expr)) return true;
                return false;
            }
            default:
                return range_guarded(var, n->a) || range_guarded(var, n->b) ||
                       range_guarded(var, n->c);
        }
    }

    const std::set<std::string>& names_;
    DefPlan& plan_;
};

DefPlan analyze(const std::string& name, const NodePtr& body,
                const std::set<std::string>& names) {
    DefPlan plan;
    plan.name = name;
    // A definition is parametric when every union branch takes a relation
    // variable; those stay symbolic and are re-analyzed per instantiation.
    std::function<bool(const NodePtr&)> branch_parametric = [&](const NodePtr& n) -> bool {
        if (n->kind == Kind::Union) return branch_parametric(n->a) && branch_parametric(n->b);
        if (n->kind != Kind::Abstract) return false;
        for (const Binding& b : n->bindings)
            if (b.kind == Binding::Kind::RelVar) return true;
        return false;
    };
    if (branch_parametric(body)) {
        plan.parametric = true;
        return plan;
    }
    Checker checker(names, plan);
    try {
        checker.check_enumerable(body);
    } catch (const Stuck& s) {
        plan.ok = false;
        plan.unbound_variable = s.variable;
        plan.atom = s.atom;
        plan.error_span = s.span;
    }
    return plan;
}

}  // namespace

bool SafetyReport::ok() const {
    for (const auto& d : defs)
        if (!d.ok) return false;
    return true;
}

std::string SafetyReport::first_error() const {
    for (const auto& d : defs) {
        if (d.ok) continue;
        std::string msg = "definition '" + d.name + "' is unsafe";
        if (!d.atom.empty()) msg += ": " + d.atom;
        if (!d.unbound_variable.empty())
            msg += " leaves " + d.unbound_variable + " unbound";
        else
            msg += " is not enumerable";
        return msg;
    }
    return "";
}

std::string SafetyReport::explain() const {
    std::ostringstream os;
    for (const auto& d : defs) {
        os << "def " << d.name << ": ";
        if (d.parametric) {
            os << "parametric, analyzed per instantiation\n";
            continue;
        }
        if (!d.ok) {
            os << "UNSAFE";
            if (!d.atom.empty()) os << " (" << d.atom;
            if (!d.unbound_variable.empty()) os << " leaves " << d.unbound_variable << " unbound";
            if (!d.atom.empty()) os << ")";
            os << "\n";
            continue;
        }
        os << "safe\n";
        for (const auto& s : d.steps) {
            os << "  - " << s.description;
            if (s.span.valid()) os << " [" << s.span.to_string() << "]";
            os << "\n";
        }
    }
    return os.str();
}

SafetyReport check_program(const CoreProgram& program,
                           const std::set<std::string>& enumerable_names) {
    std::set<std::string> names = enumerable_names;
    for (const CoreDef& d : program.defs) names.insert(d.name);
    SafetyReport report;
    for (const CoreDef& d : program.defs) report.defs.push_back(analyze(d.name, d.body, names));
    return report;
}

DefPlan check_expression(const ast::NodePtr& body, const std::string& name,
                         const std::set<std::string>& enumerable_names) {
    return analyze(name, body, enumerable_names);
}

void enforce(const SafetyReport& report) {
    for (const auto& d : report.defs) {
        if (d.ok) continue;
        std::string msg = d.atom;
        if (!d.unbound_variable.empty())
            msg += " leaves " + d.unbound_variable + " unbound";
        else
            msg += " is not enumerable";
        throw UnsafePlan("definition '" + d.name + "': " + msg, d.error_span);
    }
}

}  // namespace rel
