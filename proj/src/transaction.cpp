#include "rel/transaction.hpp"

#include <memory>

#include "rel/desugar.hpp"
#include "rel/errors.hpp"
#include "rel/eval.hpp"
#include "rel/parser.hpp"
#include "rel/safety.hpp"
#include "rel/stdlib.hpp"

namespace rel {

namespace {

const CoreDef* find_def(const CoreProgram& program, const std::string& name) {
    for (const CoreDef& d : program.defs)
        if (d.name == name) return &d;
    return nullptr;
}

RelationPtr control_extent(const CoreProgram& program, const EnvPtr& env,
                           const std::string& name) {
    const CoreDef* def = find_def(program, name);
    if (!def) return Relation::empty();
    RelationPtr r = env->lookup(name);
    if (!r) return Relation::empty();
    return force_extensional(r, def->span);
}

std::vector<Effect> collect_effects(Effect::Kind kind, const RelationPtr& extent,
                                    const char* control) {
    std::vector<Effect> out;
    for (const Tuple& t : extent->tuples()) {
        if (t.arity() == 0 || !t[0].is_value() || !t[0].value().is_sym())
            throw DomainError(std::string(control) + " tuple " + t.to_string() +
                              " must start with a relation name symbol");
        if (!t.first_order())
            throw DomainError(std::string(control) + " tuple " + t.to_string() +
                              " is not first-order");
        out.push_back({kind, t[0].value().as_sym().name, t.suffix(1)});
    }
    return out;
}

// The violation extent of `ic name(params) requires Body` is the set of
// parameter bindings under which Body is false. Negation is applied to
// the surface body (before lowering) so implication-shaped constraints
// plan as conjunctive queries over their positive atoms.
ast::NodePtr violation_query(const ast::Constraint& c) {
    auto neg = std::make_shared<ast::Node>();
    neg->kind = ast::Kind::Not;
    neg->span = c.span;
    neg->a = c.body;
    if (c.params.empty()) return desugar_expression(neg);
    auto abs = std::make_shared<ast::Node>();
    abs->kind = ast::Kind::Abstract;
    abs->span = c.span;
    abs->name = "()";
    abs->bindings = c.params;
    abs->a = neg;
    return desugar_expression(abs);
}

}  // namespace

bool TransactionOutcome::has_violations() const {
    for (const auto& [name, extent] : violations)
        if (!extent->tuples().empty()) return true;
    return false;
}

TransactionOutcome run_transaction(Database& db, const std::string& source,
                                   const TransactionOptions& opts) {
    TransactionOutcome out;
    out.output = Relation::empty();
    try {
        reset_instantiation_state();
        ast::Program surface = parse_program(source);
        CoreProgram user = desugar(surface);

        CoreProgram full;
        if (opts.use_stdlib) full = stdlib_program();
        for (auto& d : user.defs) full.defs.push_back(std::move(d));
        for (auto& c : user.ics) full.ics.push_back(std::move(c));

        auto base = Env::root();
        for (const auto& [name, rel] : db.relations) base->bind(name, rel);
        EnvPtr env = eval_program(full, base, opts.program, opts.report);

        out.output = control_extent(full, env, "output");
        std::vector<Effect> deletes =
            collect_effects(Effect::Kind::Delete, control_extent(full, env, "delete"), "delete");
        std::vector<Effect> inserts =
            collect_effects(Effect::Kind::Insert, control_extent(full, env, "insert"), "insert");
        out.effects = deletes;
        out.effects.insert(out.effects.end(), inserts.begin(), inserts.end());

        // Stage the commit: deletes before inserts, so a tuple both
        // deleted and inserted in one transaction survives. Constraints
        // are then checked against this post-effect state; a violation
        // (or key violation) aborts with the database intact.
        Database next = db;
        for (const Effect& e : deletes) {
            auto it = next.relations.find(e.relation);
            if (it == next.relations.end()) continue;
            TupleSet tuples = it->second->tuples();
            tuples.erase(e.tuple);
            it->second = Relation::from_tuples(std::move(tuples));
        }
        for (const Effect& e : inserts) {
            auto [it, fresh] = next.relations.emplace(e.relation, Relation::empty());
            if (fresh) next.manifest.emplace(e.relation, RelationMeta{});
            TupleSet tuples = it->second->tuples();
            tuples.insert(e.tuple);
            it->second = Relation::from_tuples(std::move(tuples));
        }
        check_gnf(next);

        if (!surface.ics.empty()) {
            std::set<std::string> enumerable;
            for (const auto& [name, rel] : next.relations) enumerable.insert(name);
            for (const CoreDef& d : full.defs) enumerable.insert(d.name);
            EnvPtr post_env = env;
            if (!out.effects.empty()) {
                auto post_base = Env::root();
                for (const auto& [name, rel] : next.relations) post_base->bind(name, rel);
                post_env = eval_program(full, post_base, opts.program);
            }
            for (const ast::Constraint& c : surface.ics) {
                ast::NodePtr query = violation_query(c);
                DefPlan plan = check_expression(query, c.name, enumerable);
                if (!plan.ok)
                    throw UnsafeConstraint("constraint " + c.name +
                                               ": parameters are not range-restricted; '" +
                                               plan.unbound_variable + "' cannot be bound",
                                           c.span);
                out.violations[c.name] = force_extensional(eval_expr(query, post_env), c.span);
            }
            if (out.has_violations()) {
                out.status = TransactionOutcome::Status::Aborted;
                return out;
            }
        }
        db = std::move(next);
    } catch (const RelError& e) {
        out.status = TransactionOutcome::Status::Aborted;
        out.effects.clear();
        out.diagnostics.push_back(e.what());
    }
    return out;
}

}  // namespace rel
