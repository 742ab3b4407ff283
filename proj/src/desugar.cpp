#include "rel/desugar.hpp"

#include <map>

namespace rel {

using ast::Arg;
using ast::Binding;
using ast::Kind;
using ast::Node;
using ast::NodePtr;

namespace {

class Rewriter {
public:
    NodePtr rewrite(const NodePtr& n) {
        switch (n->kind) {
            case Kind::Const:
            case Kind::Ident:
            case Kind::TupleRef:
            case Kind::WildcardVal:
            case Kind::WildcardTup:
            case Kind::True_:
            case Kind::False_:
                return n;
            case Kind::Union: return binary(Kind::Union, n);
            case Kind::Product: return binary(Kind::Product, n);
            case Kind::Where: return binary(Kind::Product, n);
            case Kind::And: return binary(Kind::Product, n);
            case Kind::Or: return binary(Kind::Union, n);
            case Kind::Not:
                return mk_not(rewrite(n->a), n->span);
            case Kind::Implies:
                // a implies b  ==  not a or b
                return mk_union(mk_not(rewrite(n->a), n->span), rewrite(n->b), n->span);
            case Kind::Iff: {
                NodePtr a = rewrite(n->a), b = rewrite(n->b);
                return mk_product(mk_union(mk_not(a, n->span), b, n->span),
                                  mk_union(mk_not(b, n->span), a, n->span), n->span);
            }
            case Kind::Xor: {
                NodePtr a = rewrite(n->a), b = rewrite(n->b);
                return mk_union(mk_product(a, mk_not(b, n->span), n->span),
                                mk_product(mk_not(a, n->span), b, n->span), n->span);
            }
            case Kind::Compare: return builtin_call(Kind::FullApply, n->name, n);
            case Kind::Arith: return builtin_call(Kind::Apply, n->name, n);
            case Kind::Neg: {
                auto out = clone(Kind::Apply, n->span);
                out->a = ast::make_ident("negate", n->span);
                out->args.push_back(first_arg(rewrite(n->a)));
                return out;
            }
            case Kind::DotJoin: return second_order_call("dot_join", n);
            case Kind::LeftOverride: return second_order_call("left_override", n);
            case Kind::Abstract: {
                auto out = clone(Kind::Abstract, n->span);
                out->name = n->name;
                out->a = lower_bindings(n->bindings, rewrite(n->a), out->bindings, false);
                return out;
            }
            case Kind::Exists: {
                auto out = clone(Kind::Exists, n->span);
                out->a = lower_bindings(n->bindings, rewrite(n->a), out->bindings, false);
                return out;
            }
            case Kind::Forall: {
                // forall bs: F  ==  not exists bs: not F
                auto ex = clone(Kind::Exists, n->span);
                ex->a = lower_bindings(n->bindings, mk_not(rewrite(n->a), n->span), ex->bindings,
                                       false);
                return mk_not(ex, n->span);
            }
            case Kind::Apply:
            case Kind::FullApply: {
                auto out = clone(n->kind, n->span);
                out->a = rewrite(n->a);
                for (const Arg& a : n->args) {
                    Arg ra = a;
                    if (a.expr) ra.expr = rewrite(a.expr);
                    out->args.push_back(std::move(ra));
                }
                if (n->kind == Kind::FullApply) return flatten_atom(out);
                return out;
            }
            case Kind::Reduce:
            case Kind::ReduceCheck: {
                auto out = clone(n->kind, n->span);
                out->a = rewrite(n->a);
                out->b = rewrite(n->b);
                if (n->c) out->c = rewrite(n->c);
                return out;
            }
        }
        throw RelError("Internal", "unhandled node in desugar", n->span);
    }

    // Lowers 'x in V' and literal bindings. Produces the rewritten body
    // with guards attached and fills `out` with plain bindings. With
    // `implication` the guards weaken the body (used for constraints,
    // where parameters are universally quantified) instead of
    // restricting it.
    NodePtr lower_bindings(const std::vector<Binding>& bs, NodePtr body,
                           std::vector<Binding>& out, bool implication) {
        std::vector<NodePtr> guards;
        for (const Binding& b : bs) {
            switch (b.kind) {
                case Binding::Kind::Value:
                case Binding::Kind::TupleVar:
                case Binding::Kind::RelVar:
                    out.push_back(b);
                    break;
                case Binding::Kind::ValueIn: {
                    Binding nb = b;
                    nb.kind = Binding::Kind::Value;
                    nb.range = nullptr;
                    out.push_back(nb);
                    auto g = clone(Kind::FullApply, b.span);
                    g->a = b.range;
                    g->args.push_back(first_arg(ast::make_ident(b.name, b.span)));
                    guards.push_back(g);
                    break;
                }
                case Binding::Kind::Literal: {
                    Binding nb;
                    nb.kind = Binding::Kind::Value;
                    nb.name = fresh();
                    nb.span = b.span;
                    out.push_back(nb);
                    auto g = clone(Kind::FullApply, b.span);
                    g->a = ast::make_ident("eq", b.span);
                    g->args.push_back(first_arg(ast::make_ident(nb.name, b.span)));
                    g->args.push_back(first_arg(ast::make_const(b.lit, b.span)));
                    guards.push_back(g);
                    break;
                }
            }
        }
        for (auto it = guards.rbegin(); it != guards.rend(); ++it) {
            if (implication)
                body = mk_union(mk_not(*it, (*it)->span), body, (*it)->span);
            else
                body = mk_product(*it, body, (*it)->span);
        }
        return body;
    }

    std::string fresh() { return "$" + std::to_string(++counter_); }

private:
    static std::shared_ptr<Node> clone(Kind k, Span sp) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->span = sp;
        return n;
    }

    static Arg first_arg(NodePtr e) {
        Arg a;
        a.kind = Arg::Kind::First;
        a.expr = std::move(e);
        return a;
    }

    // Negation, normalized: double negation cancels and negation
    // distributes over union so quantifier bodies stay conjunctive
    // (an expression is empty iff both union sides are empty).
    // True only for nodes that always evaluate to {} or {<>}.
    static bool formula_shaped(const NodePtr& n) {
        switch (n->kind) {
            case Kind::FullApply:
            case Kind::Not:
            case Kind::Exists:
            case Kind::True_:
            case Kind::False_:
            case Kind::ReduceCheck:
                return true;
            case Kind::Product:
            case Kind::Union:
                return formula_shaped(n->a) && formula_shaped(n->b);
            default:
                return false;
        }
    }

    static NodePtr mk_not(NodePtr a, Span sp) {
        if (a->kind == Kind::Not && formula_shaped(a->a)) return a->a;
        if (a->kind == Kind::Union) {
            auto n = clone(Kind::Product, sp);
            n->a = mk_not(a->a, sp);
            n->b = mk_not(a->b, sp);
            return n;
        }
        if (a->kind == Kind::True_) return clone(Kind::False_, sp);
        if (a->kind == Kind::False_) return clone(Kind::True_, sp);
        auto n = clone(Kind::Not, sp);
        n->a = std::move(a);
        return n;
    }

    static NodePtr mk_union(NodePtr a, NodePtr b, Span sp) {
        auto n = clone(Kind::Union, sp);
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    static NodePtr mk_product(NodePtr a, NodePtr b, Span sp) {
        auto n = clone(Kind::Product, sp);
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    NodePtr binary(Kind k, const NodePtr& n) {
        auto out = clone(k, n->span);
        out->a = rewrite(n->a);
        out->b = rewrite(n->b);
        return out;
    }

    NodePtr builtin_call(Kind apply_kind, const std::string& name, const NodePtr& n) {
        auto out = clone(apply_kind, n->span);
        out->a = ast::make_ident(name, n->span);
        out->args.push_back(first_arg(rewrite(n->a)));
        out->args.push_back(first_arg(rewrite(n->b)));
        if (apply_kind == Kind::FullApply) return flatten_atom(out);
        return out;
    }

    // Partial application of an arithmetic builtin: the value-valued
    // form `add[x, y]` produced for infix arithmetic.
    static bool is_arith_apply(const NodePtr& e) {
        if (!e || e->kind != Kind::Apply || !e->a || e->a->kind != Kind::Ident) return false;
        const std::string& c = e->a->name;
        return c == "add" || c == "subtract" || c == "multiply" || c == "divide" ||
               c == "modulo" || c == "negate";
    }

    // Rewrites R(.., E, ..) with an arithmetic argument E into
    // exists((w) | op(.., w) and R(.., w, ..)) so the planner can run
    // the arithmetic relation in whichever direction binds its
    // variables (e.g. recover i from a bound i - 1).
    NodePtr flatten_atom(const std::shared_ptr<Node>& atom) {
        std::vector<Binding> fresh_vars;
        std::vector<NodePtr> lifted;
        auto lift = [&](auto&& self, const NodePtr& e) -> NodePtr {
            auto b = clone(Kind::FullApply, e->span);
            b->a = e->a;
            for (const Arg& a : e->args) {
                Arg ra = a;
                if ((a.kind == Arg::Kind::First || a.kind == Arg::Kind::Unannotated) &&
                    is_arith_apply(a.expr))
                    ra.expr = self(self, a.expr);
                b->args.push_back(std::move(ra));
            }
            Binding w;
            w.kind = Binding::Kind::Value;
            w.name = fresh();
            w.span = e->span;
            fresh_vars.push_back(w);
            b->args.push_back(first_arg(ast::make_ident(w.name, e->span)));
            lifted.push_back(b);
            return ast::make_ident(w.name, e->span);
        };
        bool any = false;
        for (Arg& a : atom->args) {
            if ((a.kind == Arg::Kind::First || a.kind == Arg::Kind::Unannotated) &&
                is_arith_apply(a.expr)) {
                a.expr = lift(lift, a.expr);
                any = true;
            }
        }
        if (!any) return atom;
        NodePtr body = atom;
        for (auto it = lifted.rbegin(); it != lifted.rend(); ++it)
            body = mk_product(*it, body, (*it)->span);
        auto ex = clone(Kind::Exists, atom->span);
        ex->bindings = std::move(fresh_vars);
        ex->a = std::move(body);
        return ex;
    }

    NodePtr second_order_call(const std::string& name, const NodePtr& n) {
        auto out = clone(Kind::Apply, n->span);
        out->a = ast::make_ident(name, n->span);
        Arg a;
        a.kind = Arg::Kind::Second;
        a.expr = rewrite(n->a);
        out->args.push_back(a);
        Arg b;
        b.kind = Arg::Kind::Second;
        b.expr = rewrite(n->b);
        out->args.push_back(b);
        return out;
    }

    int counter_ = 0;
};

}  // namespace

CoreProgram desugar(const ast::Program& program) {
    Rewriter rw;
    CoreProgram out;
    std::map<std::string, size_t> index;
    for (const ast::RelDef& d : program.defs) {
        NodePtr clause;
        if (d.params.empty()) {
            clause = rw.rewrite(d.body);
        } else {
            auto abs = std::make_shared<Node>();
            abs->kind = Kind::Abstract;
            abs->span = d.span;
            abs->name = "()";
            abs->bindings = d.params;
            abs->a = d.body;
            clause = rw.rewrite(abs);
        }
        auto it = index.find(d.name);
        if (it == index.end()) {
            index[d.name] = out.defs.size();
            out.defs.push_back({d.name, clause, d.span});
        } else {
            CoreDef& cd = out.defs[it->second];
            auto u = std::make_shared<Node>();
            u->kind = Kind::Union;
            u->span = d.span;
            u->a = cd.body;
            u->b = clause;
            cd.body = u;
        }
    }
    for (const ast::Constraint& c : program.ics) {
        ast::Constraint lowered;
        lowered.name = c.name;
        lowered.span = c.span;
        lowered.body = rw.lower_bindings(c.params, rw.rewrite(c.body), lowered.params, true);
        out.ics.push_back(std::move(lowered));
    }
    return out;
}

ast::NodePtr desugar_expression(const ast::NodePtr& expr) {
    Rewriter rw;
    return rw.rewrite(expr);
}

}  // namespace rel
