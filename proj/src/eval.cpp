#include "rel/eval.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <optional>

#include "rel/builtins.hpp"

namespace rel {

namespace {

using ast::Arg;
using ast::Binding;
using ast::Kind;
using ast::Node;
using ast::NodePtr;

constexpr int kMaxDepth = 2500;
thread_local int g_depth = 0;

struct DepthGuard {
    explicit DepthGuard(Span sp) {
        if (++g_depth > kMaxDepth) {
            --g_depth;
            throw RelError("Internal", "evaluation recursion limit exceeded", sp);
        }
    }
    ~DepthGuard() { --g_depth; }
};

TupleSet enumerate(const RelationPtr& r, Span span);
bool rel_equal(const RelationPtr& a, const RelationPtr& b, Span span);
TupleSet enumerate_branch(const ClosureBranch& br, Span span);

// An unannotated argument is ambiguous when sibling definition branches
// would read it at that position as a value in one and a relation in
// the other.
void check_ambiguity(const RelationPtr& closure, const std::vector<ast::Arg>& args, size_t ai,
                     Span span) {
    using ast::Arg;
    using ast::Binding;
    using ast::Kind;
    for (size_t k = ai; k < args.size(); ++k) {
        if (args[k].kind != Arg::Kind::Unannotated) continue;
        bool value_reading = false, relation_reading = false;
        for (const ClosureBranch& br : closure->branches()) {
            if (!br.expr || br.expr->kind != Kind::Abstract) {
                value_reading = true;
                continue;
            }
            size_t pos = k - ai;
            if (pos >= br.expr->bindings.size()) continue;
            bool positional = true;
            for (size_t i = 0; i < pos; ++i)
                if (br.expr->bindings[i].kind == Binding::Kind::TupleVar) positional = false;
            if (!positional) continue;
            switch (br.expr->bindings[pos].kind) {
                case Binding::Kind::RelVar: relation_reading = true; break;
                case Binding::Kind::TupleVar: break;
                default: value_reading = true; break;
            }
        }
        if (value_reading && relation_reading)
            throw AmbiguousApplication(
                "argument admits both a first-order (?{...}) and second-order (&{...}) "
                "reading; annotate to disambiguate",
                args[k].span.valid() ? args[k].span : span);
    }
}

const std::map<std::string, std::string>& op_aliases() {
    static const std::map<std::string, std::string> m = {
        {"(+)", "add"}, {"(-)", "subtract"}, {"(*)", "multiply"},
        {"(/)", "divide"}, {"(%)", "modulo"},
    };
    return m;
}

// ---------------------------------------------------------------- free vars

void free_vars_walk(const NodePtr& n, const VarSet& cand, VarSet shadow, VarSet& out) {
    if (!n) return;
    switch (n->kind) {
        case Kind::Ident:
            if (cand.values.count(n->name) && !shadow.values.count(n->name))
                out.values.insert(n->name);
            return;
        case Kind::TupleRef:
            if (cand.tuples.count(n->name) && !shadow.tuples.count(n->name))
                out.tuples.insert(n->name);
            return;
        case Kind::Abstract:
        case Kind::Exists: {
            VarSet inner = shadow;
            for (const Binding& b : n->bindings) {
                if (b.kind == Binding::Kind::TupleVar)
                    inner.tuples.insert(b.name);
                else
                    inner.values.insert(b.name);
            }
            free_vars_walk(n->a, cand, inner, out);
            return;
        }
        default:
            break;
    }
    free_vars_walk(n->a, cand, shadow, out);
    free_vars_walk(n->b, cand, shadow, out);
    free_vars_walk(n->c, cand, shadow, out);
    for (const Arg& a : n->args) free_vars_walk(a.expr, cand, shadow, out);
    for (const Binding& b : n->bindings) free_vars_walk(b.range, cand, shadow, out);
    // Tuple-variable arguments reference tuple vars without an expr node.
    for (const Arg& a : n->args)
        if (a.kind == Arg::Kind::TupleVar && cand.tuples.count(a.name) &&
            !shadow.tuples.count(a.name))
            out.tuples.insert(a.name);
}

// ---------------------------------------------------------------- solver

// Enumerates assignments of a variable set satisfying a conjunction,
// producing per-conjunct column tuples. Conjunct order is chosen
// greedily at run time: all-bound conjuncts run first, then atoms able
// to bind variables by matching, then a guarded-range fallback.
class Solver {
public:
    Solver(EnvPtr base, VarSet vars) : base_(std::move(base)), vars_(std::move(vars)) {}

    struct Conjunct {
        NodePtr node;
        Tuple cols;
        bool done = false;
    };

    using Emit = std::function<bool()>;
    using Sink = std::function<bool(const Tuple&)>;

    // Returns false if the emit callback requested a stop.
    bool run(std::vector<Conjunct>& cs, const Emit& emit) {
        DepthGuard guard(cs.empty() ? Span{} : cs.front().node->span);
        size_t remaining = 0;
        for (auto& c : cs)
            if (!c.done) ++remaining;
        if (remaining == 0) return emit();

        // Pick the cheapest executable conjunct.
        int best = -1;
        int best_score = 1 << 30;
        for (size_t j = 0; j < cs.size(); ++j) {
            if (cs[j].done) continue;
            int score = executable_score(cs[j].node);
            if (score >= 0 && score < best_score) {
                best_score = score;
                best = static_cast<int>(j);
            }
        }
        if (best >= 0) return exec(cs, static_cast<size_t>(best), emit);

        // Fallback: bind one variable from an inferred guard range.
        std::optional<std::pair<std::string, std::set<Value>>> choice;
        for (const auto& v : unbound_free_values(cs)) {
            auto range = infer_range(v, cs);
            if (range && (!choice || range->size() < choice->second.size()))
                choice.emplace(v, std::move(*range));
        }
        if (!choice) {
            std::string var = first_stuck_var(cs);
            throw UnsafePlan("no evaluation order can bind variable '" + var + "'",
                             stuck_span(cs));
        }
        for (const Value& v : choice->second) {
            vals_[choice->first] = v;
            bool cont = run(cs, emit);
            vals_.erase(choice->first);
            if (!cont) return false;
        }
        return true;
    }

    // Matches `args` against relation `r`; free solver variables inside
    // the arguments are bound per match. The sink receives the
    // unconsumed suffix (empty for full application).
    bool match_rel(const RelationPtr& r, const std::vector<Arg>& args, size_t ai, bool full,
                   Span span, const Sink& sink) {
        DepthGuard guard(span);
        switch (r->shape()) {
            case Relation::Shape::Extensional:
                for (const Tuple& t : r->tuples())
                    if (!match_args_tuple(args, ai, t, 0, full, span, sink)) return false;
                return true;
            case Relation::Shape::Builtin:
                return match_builtin(*r->builtin_def(), args, ai, full, span, sink);
            case Relation::Shape::UniverseValue: {
                if (args.size() - ai != 1 || !full)
                    throw InfiniteResult("the set of all values is not enumerable", span);
                // Membership in the universe holds for any value; only an
                // evaluable argument can be checked.
                const Arg& a = args[ai];
                if ((a.kind == Arg::Kind::First || a.kind == Arg::Kind::Unannotated) && a.expr &&
                    free(a.expr).empty()) {
                    for (const Tuple& t : enumerate(eval_expr(a.expr, env()), span))
                        if (t.arity() == 1 && t[0].is_value()) return sink(Tuple());
                    return true;
                }
                throw UnsafePlan("membership in the set of all values cannot bind a variable",
                                 span);
            }
            case Relation::Shape::UniverseTuple: {
                if (full && args.size() - ai == 1 && args[ai].kind == Arg::Kind::TupleVar &&
                    tups_.count(args[ai].name))
                    return sink(Tuple());
                throw InfiniteResult("the set of all tuples is not enumerable", span);
            }
            case Relation::Shape::Closure: {
                check_ambiguity(r, args, ai, span);
                for (const ClosureBranch& br : r->branches()) {
                    bool cont = true;
                    if (br.direct)
                        cont = match_rel(br.direct, args, ai, full, span, sink);
                    else if (br.expr->kind == Kind::Abstract)
                        cont = match_closure_branch(br, args, ai, full, span, sink);
                    else
                        cont = match_rel(eval_expr(br.expr, br.env), args, ai, full, span, sink);
                    if (!cont) return false;
                }
                return true;
            }
        }
        return true;
    }

    // Environment view including the current local bindings.
    EnvPtr env() const {
        if (vals_.empty() && tups_.empty()) return base_;
        auto e = base_->fork();
        for (const auto& [k, v] : vals_) e->bind(k, Relation::singleton_value(v));
        for (const auto& [k, t] : tups_) e->bind(tuple_var_key(k), Relation::singleton(t));
        return e;
    }

    VarSet free(const NodePtr& n) const {
        VarSet out;
        free_vars_walk(n, vars_, {}, out);
        for (auto it = out.values.begin(); it != out.values.end();)
            it = vals_.count(*it) ? out.values.erase(it) : std::next(it);
        for (auto it = out.tuples.begin(); it != out.tuples.end();)
            it = tups_.count(*it) ? out.tuples.erase(it) : std::next(it);
        return out;
    }

    const std::map<std::string, Value>& value_locals() const { return vals_; }
    const std::map<std::string, Tuple>& tuple_locals() const { return tups_; }
    void bind_value(const std::string& n, Value v) { vals_[n] = std::move(v); }
    void bind_tuple(const std::string& n, Tuple t) { tups_[n] = std::move(t); }

private:
    // -1: not executable now. Lower scores run earlier.
    int executable_score(const NodePtr& n) const {
        VarSet fv = free(n);
        if (fv.empty()) return formula_like(n) ? 0 : 1;
        switch (n->kind) {
            case Kind::FullApply:
            case Kind::Apply: {
                if (!free(n->a).empty()) return -1;
                RelationPtr callee = eval_expr(n->a, env());
                if (callee->shape() == Relation::Shape::Builtin)
                    return builtin_matchable(*callee->builtin_def(), n->args, 0,
                                             n->kind == Kind::FullApply)
                               ? 4
                               : -1;
                if (!args_bindable(n->args)) return -1;
                if (callee->is_extensional()) return 2;
                if (callee->shape() == Relation::Shape::Closure) return 5;
                return -1;
            }
            case Kind::Union:
            case Kind::Exists:
                return 6;
            default:
                return -1;
        }
    }

    // Arguments that tuple matching can handle when some of them carry
    // free variables: frees may appear only as whole-argument
    // identifiers (which matching binds), never inside compound
    // expressions that would have to be evaluated.
    bool args_bindable(const std::vector<Arg>& args) const {
        for (const Arg& a : args) {
            switch (a.kind) {
                case Arg::Kind::Wildcard:
                case Arg::Kind::WildcardTuple:
                case Arg::Kind::TupleVar:
                    break;
                case Arg::Kind::First:
                case Arg::Kind::Unannotated:
                    if (a.expr->kind == Kind::Ident && vars_.values.count(a.expr->name)) break;
                    if (!free(a.expr).empty()) return false;
                    break;
                case Arg::Kind::Second:
                    if (!free(a.expr).empty()) return false;
                    break;
            }
        }
        return true;
    }

    static bool formula_like(const NodePtr& n) {
        switch (n->kind) {
            case Kind::FullApply:
            case Kind::Not:
            case Kind::Exists:
            case Kind::True_:
            case Kind::False_:
            case Kind::ReduceCheck:
                return true;
            default:
                return false;
        }
    }

    bool exec(std::vector<Conjunct>& cs, size_t j, const Emit& emit) {
        Conjunct& c = cs[j];
        c.done = true;
        bool cont = exec_node(c.node, [&](const Tuple& cols) {
            c.cols = cols;
            return run(cs, emit);
        });
        c.done = false;
        c.cols = Tuple();
        return cont;
    }

    // Evaluates/matches a single conjunct, calling fn for every way it
    // can hold (with its column contribution).
    bool exec_node(const NodePtr& n, const Sink& fn) {
        VarSet fv = free(n);
        if (fv.empty()) {
            RelationPtr r = eval_expr(n, env());
            if (r->is_extensional()) {
                for (const Tuple& t : r->tuples())
                    if (!fn(t)) return false;
                return true;
            }
            for (const Tuple& t : enumerate(r, n->span))
                if (!fn(t)) return false;
            return true;
        }
        switch (n->kind) {
            case Kind::FullApply:
            case Kind::Apply: {
                RelationPtr callee = eval_expr(n->a, env());
                return match_rel(callee, n->args, 0, n->kind == Kind::FullApply, n->span, fn);
            }
            case Kind::Union: {
                // Alternatives; duplicates are deduplicated by the
                // set-collecting consumers.
                for (const NodePtr& side : {n->a, n->b}) {
                    std::vector<Conjunct> sub;
                    for (const NodePtr& p : flatten_product(side)) sub.push_back({p});
                    bool cont = run(sub, [&]() {
                        Tuple row;
                        for (const auto& sc : sub) row = row.concat(sc.cols);
                        return fn(row);
                    });
                    if (!cont) return false;
                }
                return true;
            }
            case Kind::Exists: {
                // Solve the inner formula for the inner variables plus
                // any of our still-unbound variables it mentions.
                VarSet inner_vars = fv;
                for (const Binding& b : n->bindings) {
                    if (b.kind == Binding::Kind::TupleVar)
                        inner_vars.tuples.insert(b.name);
                    else if (b.kind == Binding::Kind::RelVar)
                        throw InfiniteResult("cannot quantify over all relations", n->span);
                    else
                        inner_vars.values.insert(b.name);
                }
                Solver child(env(), inner_vars);
                std::vector<Conjunct> sub;
                for (const NodePtr& p : flatten_product(n->a)) sub.push_back({p});
                // Distinct outer assignments only.
                std::set<std::pair<std::vector<Value>, std::vector<Tuple>>> seen;
                bool cont = child.run(sub, [&]() {
                    std::vector<Value> vs;
                    std::vector<Tuple> ts;
                    for (const auto& v : fv.values) vs.push_back(child.vals_.at(v));
                    for (const auto& t : fv.tuples) ts.push_back(child.tups_.at(t));
                    if (!seen.insert({vs, ts}).second) return true;
                    size_t i = 0;
                    for (const auto& v : fv.values) vals_[v] = vs[i++];
                    i = 0;
                    for (const auto& t : fv.tuples) tups_[t] = ts[i++];
                    bool keep = fn(Tuple());
                    for (const auto& v : fv.values) vals_.erase(v);
                    for (const auto& t : fv.tuples) tups_.erase(t);
                    return keep;
                });
                return cont;
            }
            default:
                throw UnsafePlan("cannot bind variables from this expression", n->span);
        }
    }

    // ------------------------------------------------ tuple matching

    bool match_args_tuple(const std::vector<Arg>& args, size_t ai, const Tuple& t, size_t ci,
                          bool full, Span span, const Sink& sink) {
        if (ai == args.size()) {
            if (full && ci != t.arity()) return true;  // no match, keep going
            return sink(t.suffix(ci));
        }
        const Arg& a = args[ai];
        switch (a.kind) {
            case Arg::Kind::Wildcard:
                if (ci >= t.arity() || !t[ci].is_value()) return true;
                return match_args_tuple(args, ai + 1, t, ci + 1, full, span, sink);
            case Arg::Kind::WildcardTuple: {
                for (size_t len = 0; ci + len <= t.arity(); ++len) {
                    if (len > 0 && !t[ci + len - 1].is_value()) break;
                    if (!match_args_tuple(args, ai + 1, t, ci + len, full, span, sink))
                        return false;
                }
                return true;
            }
            case Arg::Kind::TupleVar: {
                auto it = tups_.find(a.name);
                std::optional<Tuple> env_bound;
                if (it == tups_.end()) {
                    // A tuple variable bound by an enclosing scope comes
                    // through the environment as a singleton relation.
                    if (RelationPtr r = base_->lookup(tuple_var_key(a.name));
                        r && r->is_extensional() && r->tuples().size() == 1)
                        env_bound = *r->tuples().begin();
                }
                if (it != tups_.end() || env_bound) {
                    const Tuple& bound = env_bound ? *env_bound : it->second;
                    if (ci + bound.arity() > t.arity()) return true;
                    for (size_t k = 0; k < bound.arity(); ++k)
                        if (!(t[ci + k] == bound[k])) return true;
                    return match_args_tuple(args, ai + 1, t, ci + bound.arity(), full, span,
                                            sink);
                }
                if (!vars_.tuples.count(a.name))
                    throw UnboundIdentifier("tuple variable '" + a.name + "...'", a.span);
                for (size_t len = 0; ci + len <= t.arity(); ++len) {
                    if (len > 0 && !t[ci + len - 1].is_value()) break;
                    Tuple seg(std::vector<Cell>(t.cells().begin() + ci,
                                                t.cells().begin() + ci + len));
                    if (!seg.first_order()) break;
                    tups_[a.name] = seg;
                    bool cont = match_args_tuple(args, ai + 1, t, ci + len, full, span, sink);
                    tups_.erase(a.name);
                    if (!cont) return false;
                }
                return true;
            }
            case Arg::Kind::Second: {
                if (ci >= t.arity() || !t[ci].is_relation()) return true;
                RelationPtr want = eval_expr(a.expr, env());
                if (!rel_equal(want, t[ci].relation(), span)) return true;
                return match_args_tuple(args, ai + 1, t, ci + 1, full, span, sink);
            }
            case Arg::Kind::First:
            case Arg::Kind::Unannotated: {
                if (ci >= t.arity()) return true;
                // Unbound variable argument: bind it to the cell.
                if (a.expr->kind == Kind::Ident && vars_.values.count(a.expr->name) &&
                    !vals_.count(a.expr->name)) {
                    if (!t[ci].is_value()) return true;
                    vals_[a.expr->name] = t[ci].value();
                    bool cont = match_args_tuple(args, ai + 1, t, ci + 1, full, span, sink);
                    vals_.erase(a.expr->name);
                    return cont;
                }
                RelationPtr s = eval_expr(a.expr, env());
                if (t[ci].is_relation()) {
                    if (a.kind != Arg::Kind::Unannotated) return true;
                    if (!rel_equal(s, t[ci].relation(), span)) return true;
                    return match_args_tuple(args, ai + 1, t, ci + 1, full, span, sink);
                }
                if (!relation_contains(s, Tuple::of_values({t[ci].value()}))) return true;
                return match_args_tuple(args, ai + 1, t, ci + 1, full, span, sink);
            }
        }
        return true;
    }

    // ------------------------------------------------ builtin matching

    struct PosSpec {
        enum class K { Bound, FreeVar, FreeDiscard, FreeCol } k;
        std::vector<Value> vals;  // Bound: candidate values (usually one)
        std::string var;          // FreeVar
    };

    bool builtin_positions(const BuiltinDef& def, const std::vector<Arg>& args, size_t ai,
                           bool full, Span span, std::vector<PosSpec>* out) const {
        std::vector<PosSpec> ps;
        for (size_t i = ai; i < args.size(); ++i) {
            const Arg& a = args[i];
            switch (a.kind) {
                case Arg::Kind::Wildcard:
                    ps.push_back({PosSpec::K::FreeDiscard, {}, {}});
                    break;
                case Arg::Kind::First:
                case Arg::Kind::Unannotated: {
                    if (a.expr->kind == Kind::Ident && vars_.values.count(a.expr->name) &&
                        !vals_.count(a.expr->name)) {
                        ps.push_back({PosSpec::K::FreeVar, {}, a.expr->name});
                        break;
                    }
                    if (!free(a.expr).empty()) return false;
                    if (!out) {
                        ps.push_back({PosSpec::K::Bound, {}, {}});
                        break;
                    }
                    std::vector<Value> vs;
                    for (const Tuple& t : enumerate(eval_expr(a.expr, env()), span))
                        if (t.arity() == 1 && t[0].is_value()) vs.push_back(t[0].value());
                    ps.push_back({PosSpec::K::Bound, std::move(vs), {}});
                    break;
                }
                case Arg::Kind::TupleVar: {
                    auto it = tups_.find(a.name);
                    if (it == tups_.end()) return false;
                    if (!out) {
                        for (size_t k = 0; k < it->second.arity(); ++k)
                            ps.push_back({PosSpec::K::Bound, {}, {}});
                        break;
                    }
                    for (size_t k = 0; k < it->second.arity(); ++k) {
                        if (!it->second[k].is_value()) return false;
                        ps.push_back({PosSpec::K::Bound, {it->second[k].value()}, {}});
                    }
                    break;
                }
                default:
                    return false;  // Second / free tuple args never fit builtins
            }
        }
        if (ps.size() > def.arity) throw ArityMismatch("too many arguments for " + def.name, span);
        if (full && ps.size() != def.arity)
            throw ArityMismatch(def.name + " expects " + std::to_string(def.arity) +
                                    " arguments in full application",
                                span);
        while (ps.size() < def.arity) ps.push_back({PosSpec::K::FreeCol, {}, {}});
        if (out) *out = std::move(ps);
        else {
            // pattern feasibility check only
            std::string mask;
            for (const auto& p : ps) mask += p.k == PosSpec::K::Bound ? 'b' : 'f';
            return pattern_for(def, mask).has_value();
        }
        return true;
    }

    bool builtin_matchable(const BuiltinDef& def, const std::vector<Arg>& args, size_t ai,
                           bool full) const {
        return builtin_positions(def, args, ai, full, {}, nullptr);
    }

    static std::optional<std::string> pattern_for(const BuiltinDef& def,
                                                  const std::string& mask) {
        std::optional<std::string> best;
        int best_b = -1;
        for (const auto& p : def.patterns) {
            bool ok = true;
            int nb = 0;
            for (size_t i = 0; i < p.size(); ++i) {
                if (p[i] == 'b') {
                    if (mask[i] != 'b') {
                        ok = false;
                        break;
                    }
                    ++nb;
                }
            }
            if (ok && nb > best_b) {
                best_b = nb;
                best = p;
            }
        }
        return best;
    }

    bool match_builtin(const BuiltinDef& def, const std::vector<Arg>& args, size_t ai, bool full,
                       Span span, const Sink& sink) {
        std::vector<PosSpec> ps;
        if (!builtin_positions(def, args, ai, full, span, &ps))
            throw UnsafePlan("unsupported argument shape for builtin " + def.name, span);
        std::string mask;
        for (const auto& p : ps) mask += p.k == PosSpec::K::Bound ? 'b' : 'f';
        auto pattern = pattern_for(def, mask);
        if (!pattern)
            throw UnsafePlan("builtin " + def.name +
                                 " cannot run with binding pattern '" + mask + "'",
                             span);
        // Iterate the cartesian product of bound candidate sets.
        std::vector<size_t> idx(ps.size(), 0);
        std::function<bool(size_t)> loop = [&](size_t i) -> bool {
            while (i < ps.size() && ps[i].k != PosSpec::K::Bound) ++i;
            if (i == ps.size()) return run_builtin(def, *pattern, ps, idx, span, sink);
            if (ps[i].vals.empty()) return true;
            for (size_t k = 0; k < ps[i].vals.size(); ++k) {
                idx[i] = k;
                if (!loop(i + 1)) return false;
            }
            return true;
        };
        return loop(0);
    }

    bool run_builtin(const BuiltinDef& def, const std::string& pattern,
                     const std::vector<PosSpec>& ps, const std::vector<size_t>& idx, Span span,
                     const Sink& sink) {
        std::vector<std::optional<Value>> in(def.arity);
        for (size_t i = 0; i < ps.size(); ++i)
            if (pattern[i] == 'b') in[i] = ps[i].vals[idx[i]];
        for (const auto& row : def.complete(pattern, in, span)) {
            bool ok = true;
            std::vector<std::string> bound_here;
            std::vector<Value> cols;
            for (size_t i = 0; i < ps.size() && ok; ++i) {
                switch (ps[i].k) {
                    case PosSpec::K::Bound:
                        ok = row[i] == ps[i].vals[idx[i]];
                        break;
                    case PosSpec::K::FreeVar: {
                        auto it = vals_.find(ps[i].var);
                        if (it != vals_.end()) {
                            ok = it->second == row[i];
                        } else {
                            vals_[ps[i].var] = row[i];
                            bound_here.push_back(ps[i].var);
                        }
                        break;
                    }
                    case PosSpec::K::FreeDiscard:
                        break;
                    case PosSpec::K::FreeCol:
                        cols.push_back(row[i]);
                        break;
                }
            }
            bool cont = true;
            if (ok) cont = sink(Tuple::of_values(cols));
            for (const auto& v : bound_here) vals_.erase(v);
            if (!cont) return false;
        }
        return true;
    }

    // ------------------------------------------------ closure matching

    // A tuple variable bound either locally or by an enclosing scope
    // (stored in the environment as a singleton relation).
    std::optional<Tuple> bound_tuple(const std::string& name) const {
        if (auto it = tups_.find(name); it != tups_.end()) return it->second;
        if (RelationPtr r = base_->lookup(tuple_var_key(name));
            r && r->is_extensional() && r->tuples().size() == 1)
            return *r->tuples().begin();
        return std::nullopt;
    }

    static bool const_value_arg(const Arg& a) {
        return (a.kind == Arg::Kind::First || a.kind == Arg::Kind::Unannotated) && a.expr &&
               a.expr->kind == Kind::Const;
    }

    bool match_closure_branch(const ClosureBranch& br, const std::vector<Arg>& in_args,
                              size_t ai, bool full, Span span, const Sink& sink) {
        const Node& abs = *br.expr;
        // A bound tuple-variable argument is spliced into one constant
        // argument per cell so its values can pre-bind parameters (e.g.
        // Cond(x...) against Cond(x1, x2, y...) with x... known).
        std::vector<Arg> args(in_args.begin() + ai, in_args.end());
        for (size_t i = 0; i < args.size(); ++i) {
            if (args[i].kind != Arg::Kind::TupleVar) continue;
            std::optional<Tuple> bound = bound_tuple(args[i].name);
            if (!bound || !bound->first_order()) continue;
            Span sp = args[i].span;
            std::vector<Arg> cells;
            for (size_t k = 0; k < bound->arity(); ++k) {
                Arg cell;
                cell.kind = Arg::Kind::First;
                cell.expr = ast::make_const((*bound)[k].value(), sp);
                cell.span = sp;
                cells.push_back(std::move(cell));
            }
            args.erase(args.begin() + i);
            args.insert(args.begin() + i, cells.begin(), cells.end());
            i += cells.size();
            --i;
        }
        // Pre-bind a prefix of parameters from evaluable arguments, then
        // enumerate the residual abstraction and match leftover args.
        std::function<bool(size_t, size_t, EnvPtr)> step =
            [&](size_t pi, size_t aj, EnvPtr envb) -> bool {
            if (pi < abs.bindings.size() && aj < args.size()) {
                const Binding& p = abs.bindings[pi];
                const Arg& a = args[aj];
                if (p.kind == Binding::Kind::RelVar) {
                    if (a.kind == Arg::Kind::First) return true;  // branch inapplicable
                    if (a.kind != Arg::Kind::Second && a.kind != Arg::Kind::Unannotated)
                        return true;
                    if (!free(a.expr).empty())
                        throw UnsafePlan(
                            "relation argument may not contain unbound variables", a.span);
                    return step(pi + 1, aj + 1,
                                envb->extend(p.name, eval_expr(a.expr, env())));
                }
                if (p.kind == Binding::Kind::Value && a.kind == Arg::Kind::Second)
                    return true;  // a relation never matches a value position
                if (p.kind == Binding::Kind::Value &&
                    (a.kind == Arg::Kind::First || a.kind == Arg::Kind::Unannotated) &&
                    free(a.expr).empty()) {
                    for (const Tuple& t : enumerate(eval_expr(a.expr, env()), a.span)) {
                        if (t.arity() != 1 || !t[0].is_value()) continue;
                        if (!step(pi + 1, aj + 1,
                                  envb->extend(p.name, Relation::singleton(t))))
                            return false;
                    }
                    return true;
                }
                if (p.kind == Binding::Kind::TupleVar && a.kind == Arg::Kind::TupleVar &&
                    tups_.count(a.name)) {
                    return step(pi + 1, aj + 1,
                                envb->extend(tuple_var_key(p.name),
                                             Relation::singleton(tups_.at(a.name))));
                }
                if (p.kind == Binding::Kind::TupleVar && const_value_arg(a)) {
                    // The tuple parameter absorbs some prefix of the
                    // constant cells; every split is a candidate.
                    size_t max_len = 0;
                    while (aj + max_len < args.size() && const_value_arg(args[aj + max_len]))
                        ++max_len;
                    for (size_t len = 0; len <= max_len; ++len) {
                        std::vector<Value> vs;
                        for (size_t k = 0; k < len; ++k) vs.push_back(args[aj + k].expr->lit);
                        if (!step(pi + 1, aj + len,
                                  envb->extend(tuple_var_key(p.name),
                                               Relation::singleton(
                                                   Tuple::of_values(std::move(vs))))))
                            return false;
                    }
                    return true;
                }
                // fall through: leave remaining params free
            }
            return enumerate_residual(abs, pi, envb, [&](const Tuple& row) {
                return match_args_tuple_rows(args, aj, row, full, span, sink);
            });
        };
        return step(0, 0, br.env);
    }

    bool match_args_tuple_rows(const std::vector<Arg>& args, size_t aj, const Tuple& row,
                               bool full, Span span, const Sink& sink) {
        return match_args_tuple(args, aj, row, 0, full, span, sink);
    }

    // Enumerates ⟨param-values⟩·⟨body-row⟩ of an abstraction whose
    // parameters from `pi` onward are free.
    bool enumerate_residual(const Node& abs, size_t pi, const EnvPtr& envb, const Sink& fn) {
        VarSet vars;
        std::vector<const Binding*> residual;
        for (size_t i = pi; i < abs.bindings.size(); ++i) {
            const Binding& b = abs.bindings[i];
            residual.push_back(&b);
            if (b.kind == Binding::Kind::TupleVar)
                vars.tuples.insert(b.name);
            else if (b.kind == Binding::Kind::RelVar)
                throw InfiniteResult(
                    "a relation-variable parameter cannot be enumerated", b.span);
            else
                vars.values.insert(b.name);
        }
        Solver child(envb, vars);
        std::vector<Conjunct> sub;
        for (const NodePtr& p : flatten_product(abs.a)) sub.push_back({p});
        return child.run(sub, [&]() {
            Tuple row;
            for (const Binding* b : residual) {
                if (b->kind == Binding::Kind::TupleVar)
                    row = row.concat(child.tups_.at(b->name));
                else
                    row = row.concat(Tuple::of_values({child.vals_.at(b->name)}));
            }
            for (const auto& sc : sub) row = row.concat(sc.cols);
            return fn(row);
        });
    }

    // ------------------------------------------------ range fallback

    std::vector<std::string> unbound_free_values(const std::vector<Conjunct>& cs) const {
        std::set<std::string> out;
        for (const auto& c : cs) {
            if (c.done) continue;
            VarSet fv = free(c.node);
            out.insert(fv.values.begin(), fv.values.end());
        }
        return {out.begin(), out.end()};
    }

    std::string first_stuck_var(const std::vector<Conjunct>& cs) const {
        for (const auto& c : cs) {
            if (c.done) continue;
            VarSet fv = free(c.node);
            if (!fv.values.empty()) return *fv.values.begin();
            if (!fv.tuples.empty()) return *fv.tuples.begin() + "...";
        }
        return "?";
    }

    Span stuck_span(const std::vector<Conjunct>& cs) const {
        for (const auto& c : cs)
            if (!c.done) return c.node->span;
        return {};
    }

    // Finite candidate set for `var` from positive guards in the
    // remaining conjuncts (a sound superset of the exact range).
    std::optional<std::set<Value>> infer_range(const std::string& var,
                                               const std::vector<Conjunct>& cs) const {
        for (const auto& c : cs) {
            if (c.done) continue;
            if (auto r = range_in(var, c.node)) return r;
        }
        return std::nullopt;
    }

    std::optional<std::set<Value>> range_in(const std::string& var, const NodePtr& n) const {
        if (!n) return std::nullopt;
        switch (n->kind) {
            case Kind::Not:
                return std::nullopt;
            case Kind::Union: {
                auto a = range_in(var, n->a);
                auto b = range_in(var, n->b);
                if (a && b) {
                    a->insert(b->begin(), b->end());
                    return a;
                }
                return std::nullopt;
            }
            case Kind::Product: {
                if (auto a = range_in(var, n->a)) return a;
                return range_in(var, n->b);
            }
            case Kind::Abstract:
            case Kind::Exists: {
                for (const Binding& b : n->bindings)
                    if (b.name == var) return std::nullopt;  // shadowed
                return range_in(var, n->a);
            }
            case Kind::Apply:
            case Kind::FullApply: {
                // Occurrence as a simple argument of a finite relation.
                if (free(n->a).empty()) {
                    RelationPtr callee;
                    try {
                        callee = eval_expr(n->a, env());
                    } catch (const RelError&) {
                        callee = nullptr;
                    }
                    if (callee && callee->is_extensional()) {
                        size_t pos = 0;
                        bool pos_known = true;
                        for (const Arg& a : n->args) {
                            if (a.kind == Arg::Kind::First || a.kind == Arg::Kind::Unannotated) {
                                if (a.expr->kind == Kind::Ident && a.expr->name == var &&
                                    pos_known) {
                                    std::set<Value> out;
                                    for (const Tuple& t : callee->tuples())
                                        if (pos < t.arity() && t[pos].is_value())
                                            out.insert(t[pos].value());
                                    return out;
                                }
                                ++pos;
                            } else if (a.kind == Arg::Kind::Wildcard) {
                                ++pos;
                            } else {
                                pos_known = false;  // tuple segment of unknown width
                            }
                        }
                    }
                }
                for (const Arg& a : n->args)
                    if (a.expr)
                        if (auto r = range_in(var, a.expr)) return r;
                return std::nullopt;
            }
            default: {
                if (auto r = range_in(var, n->a)) return r;
                if (auto r = range_in(var, n->b)) return r;
                return range_in(var, n->c);
            }
        }
    }

    EnvPtr base_;
    VarSet vars_;
    std::map<std::string, Value> vals_;
    std::map<std::string, Tuple> tups_;

    friend TupleSet enumerate_branch(const ClosureBranch&, Span);
};

// ---------------------------------------------------------------- enumerate

TupleSet enumerate_branch(const ClosureBranch& br, Span span) {
    TupleSet out;
    if (br.direct) return enumerate(br.direct, span);
    if (br.expr->kind == Kind::Abstract) {
        Solver child(br.env, {});
        child.enumerate_residual(*br.expr, 0, br.env, [&](const Tuple& row) {
            out.insert(row);
            return true;
        });
        return out;
    }
    Solver child(br.env, {});
    std::vector<Solver::Conjunct> sub;
    for (const NodePtr& p : flatten_product(br.expr)) sub.push_back({p});
    child.run(sub, [&]() {
        Tuple row;
        for (const auto& sc : sub) row = row.concat(sc.cols);
        out.insert(row);
        return true;
    });
    return out;
}

TupleSet enumerate(const RelationPtr& r, Span span) {
    DepthGuard guard(span);
    switch (r->shape()) {
        case Relation::Shape::Extensional:
            return r->tuples();
        case Relation::Shape::Builtin:
            throw InfiniteResult("builtin relation '" + r->name() + "' is not enumerable", span);
        case Relation::Shape::UniverseValue:
            throw InfiniteResult("the set of all values is not enumerable", span);
        case Relation::Shape::UniverseTuple:
            throw InfiniteResult("the set of all tuples is not enumerable", span);
        case Relation::Shape::Closure: {
            TupleSet out;
            for (const ClosureBranch& br : r->branches()) {
                TupleSet part = enumerate_branch(br, span);
                out.insert(part.begin(), part.end());
            }
            return out;
        }
    }
    return {};
}

bool rel_equal(const RelationPtr& a, const RelationPtr& b, Span span) {
    if (a.get() == b.get()) return true;
    return enumerate(a, span) == enumerate(b, span);
}

RelationPtr union_of(std::vector<RelationPtr> parts) {
    bool all_ext = true;
    for (const auto& p : parts) all_ext = all_ext && p->is_extensional();
    if (all_ext) {
        TupleSet out;
        for (const auto& p : parts) out.insert(p->tuples().begin(), p->tuples().end());
        return Relation::from_tuples(std::move(out));
    }
    std::vector<ClosureBranch> branches;
    for (const auto& p : parts) {
        if (p->known_empty()) continue;
        if (p->shape() == Relation::Shape::Closure) {
            for (const auto& br : p->branches()) branches.push_back(br);
        } else {
            branches.push_back({nullptr, nullptr, p});
        }
    }
    if (branches.empty()) return Relation::empty();
    return Relation::closure(std::move(branches));
}

// Symbolic partial application of a closure: pre-binds parameters from
// the argument list, returning the residual relation without
// enumeration when possible.
std::optional<RelationPtr> try_symbolic_apply(const RelationPtr& callee,
                                              const std::vector<Arg>& args, const EnvPtr& env,
                                              Span span) {
    std::vector<RelationPtr> parts;
    for (const ClosureBranch& br : callee->branches()) {
        if (br.direct || br.expr->kind != Kind::Abstract) return std::nullopt;
        const Node& abs = *br.expr;
        std::function<bool(size_t, size_t, EnvPtr)> step = [&](size_t pi, size_t aj,
                                                               EnvPtr envb) -> bool {
            if (aj == args.size()) {
                if (pi == abs.bindings.size()) {
                    parts.push_back(eval_expr(abs.a, envb));
                } else {
                    auto res = std::make_shared<Node>();
                    res->kind = Kind::Abstract;
                    res->span = abs.span;
                    res->name = abs.name;
                    res->bindings.assign(abs.bindings.begin() + pi, abs.bindings.end());
                    res->a = abs.a;
                    parts.push_back(Relation::closure({{res, envb, nullptr}}));
                }
                return true;
            }
            if (pi == abs.bindings.size()) return false;  // args left over: enumerate path
            const Binding& p = abs.bindings[pi];
            const Arg& a = args[aj];
            if (p.kind == Binding::Kind::RelVar) {
                if (a.kind == Arg::Kind::First) return true;  // branch inapplicable
                if (a.kind != Arg::Kind::Second && a.kind != Arg::Kind::Unannotated) return false;
                return step(pi + 1, aj + 1, envb->extend(p.name, eval_expr(a.expr, env)));
            }
            if (p.kind == Binding::Kind::Value && a.kind == Arg::Kind::Second)
                return true;  // a relation never matches a value position
            if (p.kind == Binding::Kind::Value &&
                (a.kind == Arg::Kind::First || a.kind == Arg::Kind::Unannotated) && a.expr) {
                for (const Tuple& t : enumerate(eval_expr(a.expr, env), a.span)) {
                    if (t.arity() != 1 || !t[0].is_value()) continue;
                    if (!step(pi + 1, aj + 1, envb->extend(p.name, Relation::singleton(t))))
                        return false;
                }
                return true;
            }
            return false;
        };
        if (!step(0, 0, br.env)) return std::nullopt;
    }
    return union_of(std::move(parts));
}

}  // namespace

// ---------------------------------------------------------------- API

std::vector<ast::NodePtr> flatten_product(const ast::NodePtr& n) {
    std::vector<NodePtr> out;
    std::function<void(const NodePtr&)> go = [&](const NodePtr& m) {
        if (m->kind == Kind::Product) {
            go(m->a);
            go(m->b);
        } else {
            out.push_back(m);
        }
    };
    go(n);
    return out;
}

VarSet free_vars(const ast::NodePtr& n, const VarSet& candidates) {
    VarSet out;
    free_vars_walk(n, candidates, {}, out);
    return out;
}

RelationPtr force_extensional(const RelationPtr& r, Span span) {
    if (r->is_extensional()) return r;
    return Relation::from_tuples(enumerate(r, span));
}

bool relation_contains(const RelationPtr& r, const Tuple& t) {
    DepthGuard guard({});
    switch (r->shape()) {
        case Relation::Shape::Extensional:
            return r->tuples().count(t) > 0;
        case Relation::Shape::UniverseValue:
            return t.arity() == 1 && t[0].is_value();
        case Relation::Shape::UniverseTuple:
            return t.first_order();
        case Relation::Shape::Builtin: {
            const BuiltinDef& def = *r->builtin_def();
            if (t.arity() != def.arity || !t.first_order()) return false;
            std::string mask(def.arity, 'b');
            std::optional<std::string> pattern;
            int best = -1;
            for (const auto& p : def.patterns) {
                int nb = static_cast<int>(std::count(p.begin(), p.end(), 'b'));
                if (nb > best) {
                    best = nb;
                    pattern = p;
                }
            }
            std::vector<std::optional<Value>> in(def.arity);
            for (size_t i = 0; i < def.arity; ++i)
                if ((*pattern)[i] == 'b') in[i] = t[i].value();
            for (const auto& row : def.complete(*pattern, in, {})) {
                bool same = true;
                for (size_t i = 0; i < def.arity && same; ++i) same = row[i] == t[i].value();
                if (same) return true;
            }
            return false;
        }
        case Relation::Shape::Closure: {
            for (const ClosureBranch& br : r->branches()) {
                if (br.direct) {
                    if (relation_contains(br.direct, t)) return true;
                    continue;
                }
                const NodePtr& e = br.expr;
                switch (e->kind) {
                    case Kind::Abstract: {
                        std::function<bool(size_t, size_t, EnvPtr)> step =
                            [&](size_t pi, size_t ci, EnvPtr envb) -> bool {
                            if (pi == e->bindings.size())
                                return relation_contains(eval_expr(e->a, envb), t.suffix(ci));
                            const Binding& b = e->bindings[pi];
                            switch (b.kind) {
                                case Binding::Kind::Value:
                                    if (ci >= t.arity() || !t[ci].is_value()) return false;
                                    return step(pi + 1, ci + 1,
                                                envb->extend(b.name,
                                                             Relation::singleton_value(
                                                                 t[ci].value())));
                                case Binding::Kind::RelVar:
                                    if (ci >= t.arity() || !t[ci].is_relation()) return false;
                                    return step(pi + 1, ci + 1,
                                                envb->extend(b.name, t[ci].relation()));
                                case Binding::Kind::TupleVar: {
                                    for (size_t len = 0; ci + len <= t.arity(); ++len) {
                                        Tuple seg(std::vector<Cell>(
                                            t.cells().begin() + ci,
                                            t.cells().begin() + ci + len));
                                        if (!seg.first_order()) break;
                                        if (step(pi + 1, ci + len,
                                                 envb->extend(tuple_var_key(b.name),
                                                              Relation::singleton(seg))))
                                            return true;
                                    }
                                    return false;
                                }
                                default:
                                    return false;
                            }
                        };
                        if (step(0, 0, br.env)) return true;
                        break;
                    }
                    case Kind::Product: {
                        RelationPtr left = eval_expr(e->a, br.env);
                        RelationPtr right = eval_expr(e->b, br.env);
                        for (size_t k = 0; k <= t.arity(); ++k) {
                            if (relation_contains(left, t.prefix(k)) &&
                                relation_contains(right, t.suffix(k)))
                                return true;
                        }
                        break;
                    }
                    case Kind::Union:
                        if (relation_contains(eval_expr(e->a, br.env), t) ||
                            relation_contains(eval_expr(e->b, br.env), t))
                            return true;
                        break;
                    default:
                        if (relation_contains(eval_expr(e, br.env), t)) return true;
                        break;
                }
            }
            return false;
        }
    }
    return false;
}

namespace {
ParametricInstantiator g_instantiator;
}  // namespace

void set_parametric_instantiator(ParametricInstantiator fn) { g_instantiator = std::move(fn); }

RelationPtr apply_relation(const RelationPtr& callee, const std::vector<ast::Arg>& args,
                           const EnvPtr& env, bool full, Span span) {
    DepthGuard guard(span);
    if (callee->shape() == Relation::Shape::Closure) {
        check_ambiguity(callee, args, 0, span);
        if (g_instantiator)
            if (RelationPtr r = g_instantiator(callee, args, env, full, span)) return r;
        if (!full)
            if (auto r = try_symbolic_apply(callee, args, env, span)) return *r;
    }
    if (callee->shape() == Relation::Shape::UniverseValue && args.empty() && !full) return callee;
    if (callee->shape() == Relation::Shape::UniverseTuple && args.empty() && !full) return callee;
    Solver s(env, {});
    TupleSet rows;
    bool found = false;
    s.match_rel(callee, args, 0, full, span, [&](const Tuple& suffix) {
        found = true;
        if (full) return false;  // one witness suffices
        rows.insert(suffix);
        return true;
    });
    if (full) return found ? Relation::unit() : Relation::empty();
    return Relation::from_tuples(std::move(rows));
}

RelationPtr eval_reduce(const RelationPtr& op, const RelationPtr& src, Span span) {
    TupleSet tuples = enumerate(src, span);
    if (tuples.empty()) return Relation::empty();
    std::optional<Value> acc;
    EnvPtr root = Env::root();
    for (const Tuple& t : tuples) {
        if (t.arity() == 0 || !t[t.arity() - 1].is_value())
            throw DomainError("reduce requires tuples ending in a value", span);
        Value v = t[t.arity() - 1].value();
        if (!acc) {
            acc = v;
            continue;
        }
        std::vector<Arg> args(2);
        args[0].kind = Arg::Kind::First;
        args[0].expr = ast::make_const(*acc, span);
        args[1].kind = Arg::Kind::First;
        args[1].expr = ast::make_const(v, span);
        RelationPtr res = force_extensional(apply_relation(op, args, root, false, span), span);
        if (res->tuples().size() != 1 || res->tuples().begin()->arity() != 1 ||
            !(*res->tuples().begin())[0].is_value())
            throw NotAFunction("reduce operation is not a binary function", span);
        acc = (*res->tuples().begin())[0].value();
    }
    return Relation::singleton_value(*acc);
}

RelationPtr eval_expr(const ast::NodePtr& n, const EnvPtr& env) {
    DepthGuard guard(n->span);
    switch (n->kind) {
        case Kind::Const:
            return Relation::singleton_value(n->lit);
        case Kind::Ident: {
            if (auto r = env->lookup(n->name)) return r;
            std::string name = n->name;
            if (auto it = op_aliases().find(name); it != op_aliases().end()) name = it->second;
            if (const BuiltinDef* d = find_builtin(name)) return Relation::builtin(d);
            throw UnboundIdentifier("'" + n->name + "' is not defined", n->span);
        }
        case Kind::TupleRef: {
            if (auto r = env->lookup(tuple_var_key(n->name))) return r;
            throw UnboundIdentifier("tuple variable '" + n->name + "...' is not bound", n->span);
        }
        case Kind::WildcardVal:
            return Relation::universe_value();
        case Kind::WildcardTup:
            return Relation::universe_tuple();
        case Kind::True_:
            return Relation::unit();
        case Kind::False_:
            return Relation::empty();
        case Kind::Union: {
            RelationPtr a = eval_expr(n->a, env);
            RelationPtr b = eval_expr(n->b, env);
            return union_of({a, b});
        }
        case Kind::Product: {
            RelationPtr a = eval_expr(n->a, env);
            if (a->known_empty()) return a;
            RelationPtr b = eval_expr(n->b, env);
            if (b->known_empty()) return b;
            if (a->is_true()) return b;
            if (b->is_true()) return a;
            if (a->is_extensional() && b->is_extensional())
                return relation_combine(CombineKind::Product, a, b);
            return Relation::closure({{n, env, nullptr}});
        }
        case Kind::Abstract:
            return Relation::closure({{n, env, nullptr}});
        case Kind::Apply:
        case Kind::FullApply: {
            RelationPtr callee = eval_expr(n->a, env);
            return apply_relation(callee, n->args, env, n->kind == Kind::FullApply, n->span);
        }
        case Kind::Not: {
            RelationPtr r = eval_expr(n->a, env);
            return relation_contains(r, Tuple()) ? Relation::empty() : Relation::unit();
        }
        case Kind::Exists: {
            VarSet vars;
            for (const Binding& b : n->bindings) {
                if (b.kind == Binding::Kind::TupleVar)
                    vars.tuples.insert(b.name);
                else if (b.kind == Binding::Kind::RelVar)
                    throw InfiniteResult("cannot quantify over all relations", n->span);
                else
                    vars.values.insert(b.name);
            }
            Solver s(env, vars);
            std::vector<Solver::Conjunct> cs;
            for (const NodePtr& p : flatten_product(n->a)) cs.push_back({p});
            bool found = false;
            s.run(cs, [&]() {
                found = true;
                return false;
            });
            return found ? Relation::unit() : Relation::empty();
        }
        case Kind::Reduce: {
            RelationPtr op = eval_expr(n->a, env);
            RelationPtr src = eval_expr(n->b, env);
            return eval_reduce(op, src, n->span);
        }
        case Kind::ReduceCheck: {
            RelationPtr op = eval_expr(n->a, env);
            RelationPtr src = eval_expr(n->b, env);
            RelationPtr want = eval_expr(n->c, env);
            RelationPtr got = eval_reduce(op, src, n->span);
            return rel_equal(want, got, n->span) ? Relation::unit() : Relation::empty();
        }
        default:
            throw RelError("Internal", "non-core node reached the evaluator", n->span);
    }
}

}  // namespace rel
