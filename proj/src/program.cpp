#include "rel/program.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <utility>

#include "rel/ast.hpp"
#include "rel/errors.hpp"
#include "rel/eval.hpp"

namespace rel {

using ast::Arg;
using ast::Binding;
using ast::Kind;
using ast::Node;
using ast::NodePtr;

namespace {

// ------------------------------------------------------------ mentions

// Splits a top-level union into its clauses (one per surface rule).
std::vector<NodePtr> union_branches(const NodePtr& body) {
    std::vector<NodePtr> out;
    std::function<void(const NodePtr&)> walk = [&](const NodePtr& n) {
        if (n->kind == Kind::Union) {
            walk(n->a);
            walk(n->b);
        } else {
            out.push_back(n);
        }
    };
    walk(body);
    return out;
}

// Number of leading relation-variable parameters shared by every clause
// of `body`; 0 when the definition is not (purely) relation-parameterized.
size_t parametric_arity(const NodePtr& body) {
    size_t k = 0;
    bool first = true;
    for (const NodePtr& br : union_branches(body)) {
        if (br->kind != Kind::Abstract) return 0;
        size_t lead = 0;
        while (lead < br->bindings.size() && br->bindings[lead].kind == Binding::Kind::RelVar)
            ++lead;
        for (size_t i = lead; i < br->bindings.size(); ++i)
            if (br->bindings[i].kind == Binding::Kind::RelVar) return 0;
        if (lead == 0) return 0;
        if (first) {
            k = lead;
            first = false;
        } else if (k != lead) {
            return 0;
        }
    }
    return first ? 0 : k;
}

void scan_mentions(const NodePtr& n, bool neg, bool agg, std::set<std::string> bound,
                   const std::set<std::string>& defs,
                   std::map<std::string, DepEdge::Polarity>& out) {
    if (!n) return;
    auto note = [&](const std::string& name) {
        if (!defs.count(name) || bound.count(name)) return;
        DepEdge::Polarity p = agg   ? DepEdge::Polarity::Aggregated
                              : neg ? DepEdge::Polarity::Negative
                                    : DepEdge::Polarity::Positive;
        auto [it, inserted] = out.emplace(name, p);
        // Strongest polarity wins: aggregated > negative > positive.
        if (!inserted && static_cast<int>(p) > static_cast<int>(it->second)) it->second = p;
    };
    switch (n->kind) {
        case Kind::Ident:
            note(n->name);
            return;
        case Kind::Not:
            scan_mentions(n->a, true, agg, bound, defs, out);
            return;
        case Kind::Abstract:
        case Kind::Exists: {
            for (const Binding& b : n->bindings) bound.insert(b.name);
            scan_mentions(n->a, neg, agg, std::move(bound), defs, out);
            return;
        }
        case Kind::Apply:
        case Kind::FullApply: {
            scan_mentions(n->a, neg, agg, bound, defs, out);
            for (const Arg& a : n->args) {
                if (!a.expr) continue;
                bool child_agg =
                    agg || a.kind == Arg::Kind::Second || a.expr->kind == Kind::Abstract;
                scan_mentions(a.expr, neg, child_agg, bound, defs, out);
            }
            return;
        }
        case Kind::Reduce:
        case Kind::ReduceCheck:
            scan_mentions(n->a, neg, true, bound, defs, out);
            scan_mentions(n->b, neg, true, bound, defs, out);
            scan_mentions(n->c, neg, true, bound, defs, out);
            return;
        default:
            scan_mentions(n->a, neg, agg, bound, defs, out);
            scan_mentions(n->b, neg, agg, bound, defs, out);
            scan_mentions(n->c, neg, agg, bound, defs, out);
            return;
    }
}

std::map<std::string, DepEdge::Polarity> mentions_of(const NodePtr& body,
                                                     const std::set<std::string>& defs) {
    std::map<std::string, DepEdge::Polarity> out;
    scan_mentions(body, false, false, {}, defs, out);
    return out;
}

// ----------------------------------------------------- fingerprinting

void ser_value(const Value& v, std::string& out) {
    switch (v.kind()) {
        case Value::Kind::Int:
            out += 'i';
            out += std::to_string(v.as_int());
            break;
        case Value::Kind::Float: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "f%a", v.as_float());
            out += buf;
            break;
        }
        case Value::Kind::Str:
            out += 's';
            out += std::to_string(v.as_str().size());
            out += ':';
            out += v.as_str();
            break;
        case Value::Kind::Bool:
            out += v.as_bool() ? "b1" : "b0";
            break;
        case Value::Kind::Sym:
            out += 'y';
            out += std::to_string(v.as_sym().name.size());
            out += ':';
            out += v.as_sym().name;
            break;
    }
}

void ser_relation(const RelationPtr& r, std::string& out) {
    if (!r) {
        out += "null";
        return;
    }
    if (!r->is_extensional()) {
        out += "sym";
        return;
    }
    out += '{';
    for (const Tuple& t : r->tuples()) {
        out += '(';
        for (const Cell& c : t.cells()) {
            if (c.is_value())
                ser_value(c.value(), out);
            else
                ser_relation(c.relation(), out);
            out += ',';
        }
        out += ')';
    }
    out += '}';
}

// -------------------------------------------- parametric registration

struct ParametricInfo {
    std::string name;
    size_t rel_params = 0;
    bool staged = false;
    int64_t max_stages = 10000;
    RelationPtr keepalive;  // the registered closure itself
    // Extents (other definitions reachable from the body) whose contents
    // affect the instantiation result; folded into the cache key.
    std::vector<ExtentSlotPtr> watched;
    std::ostream* trace = nullptr;
};

std::map<const Relation*, ParametricInfo> g_registry;
std::map<std::string, RelationPtr> g_cache;
std::map<std::string, ExtentSlotPtr> g_in_progress;
size_t g_hits = 0;
size_t g_misses = 0;

RelationPtr instantiate(const RelationPtr& closure, const ParametricInfo& info,
                        const std::vector<RelationPtr>& rel_args, Span span) {
    std::string key = std::to_string(reinterpret_cast<std::uintptr_t>(closure.get()));
    key += '|';
    for (const ExtentSlotPtr& w : info.watched) {
        ser_relation(w->rel, key);
        key += '|';
    }
    for (const RelationPtr& a : rel_args) {
        ser_relation(a, key);
        key += '|';
    }
    if (auto it = g_cache.find(key); it != g_cache.end()) {
        ++g_hits;
        return it->second;
    }
    if (auto it = g_in_progress.find(key); it != g_in_progress.end())
        return it->second->rel;  // recursive self-reference: current stage
    ++g_misses;
    auto slot = std::make_shared<ExtentSlot>();
    slot->rel = Relation::empty();
    g_in_progress.emplace(key, slot);
    struct Cleanup {
        const std::string& key;
        ~Cleanup() { g_in_progress.erase(key); }
    } cleanup{key};

    int64_t stage = 0;
    while (true) {
        if (++stage > info.max_stages)
            throw NoFixpoint("relation '" + info.name + "' did not reach a fixpoint within " +
                                 std::to_string(info.max_stages) + " stages",
                             span);
        TupleSet next;
        for (const ClosureBranch& br : closure->branches()) {
            RelationPtr part;
            std::shared_ptr<const Env> envb;
            if (br.direct) {
                part = br.direct;
            } else {
                const NodePtr& ab = br.expr;
                if (!ab || ab->kind != Kind::Abstract || ab->bindings.size() < info.rel_params)
                    throw RelError("Internal", "malformed relation-parameterized definition",
                                   span);
                envb = br.env;
                for (size_t i = 0; i < info.rel_params; ++i)
                    envb = envb->extend(ab->bindings[i].name, rel_args[i]);
                if (ab->bindings.size() == info.rel_params) {
                    part = eval_expr(ab->a, envb);
                } else {
                    auto res = std::make_shared<Node>();
                    res->kind = Kind::Abstract;
                    res->span = ab->span;
                    res->name = ab->name;
                    res->bindings.assign(ab->bindings.begin() + info.rel_params,
                                         ab->bindings.end());
                    res->a = ab->a;
                    part = Relation::closure({ClosureBranch{res, envb, nullptr}});
                }
            }
            RelationPtr ext = force_extensional(part, span);
            next.insert(ext->tuples().begin(), ext->tuples().end());
        }
        if (!info.staged) next.insert(slot->rel->tuples().begin(), slot->rel->tuples().end());
        if (info.trace)
            *info.trace << "  instantiate " << info.name << ": stage " << stage << ": "
                        << next.size() << " tuples\n";
        if (next == slot->rel->tuples()) break;
        slot->rel = Relation::from_tuples(std::move(next));
    }
    g_cache.emplace(key, slot->rel);
    return slot->rel;
}

RelationPtr instantiator_hook(const RelationPtr& callee, const std::vector<Arg>& args,
                              const EnvPtr& env, bool full, Span span) {
    auto it = g_registry.find(callee.get());
    if (it == g_registry.end()) return nullptr;
    const ParametricInfo& info = it->second;
    size_t k = info.rel_params;
    if (args.size() < k) return nullptr;
    std::vector<RelationPtr> rel_args;
    rel_args.reserve(k);
    for (size_t i = 0; i < k; ++i) {
        const Arg& a = args[i];
        if (a.kind != Arg::Kind::Second && a.kind != Arg::Kind::Unannotated) return nullptr;
        RelationPtr r;
        try {
            r = eval_expr(a.expr, env);
        } catch (const RelError&) {
            return nullptr;  // let the symbolic path report the error
        }
        if (!r || !r->is_extensional()) return nullptr;  // symbolic: stay lazy, uncached
        rel_args.push_back(std::move(r));
    }
    RelationPtr inst = instantiate(callee, info, rel_args, span);
    if (args.size() == k) {
        if (!full) return inst;
        return relation_contains(inst, Tuple()) ? Relation::unit() : Relation::empty();
    }
    std::vector<Arg> rest(args.begin() + k, args.end());
    return apply_relation(inst, rest, env, full, span);
}

void ensure_hook_installed() {
    static bool installed = false;
    if (!installed) {
        set_parametric_instantiator(instantiator_hook);
        installed = true;
    }
}

}  // namespace

// -------------------------------------------------- dependency graph

DependencyGraph build_dependency_graph(const CoreProgram& program) {
    DependencyGraph g;
    std::set<std::string> names;
    for (const CoreDef& d : program.defs) {
        g.nodes.push_back(d.name);
        names.insert(d.name);
    }
    std::set<std::tuple<std::string, std::string, int>> seen;
    for (const CoreDef& d : program.defs) {
        for (const auto& [from, pol] : mentions_of(d.body, names)) {
            if (seen.insert({from, d.name, static_cast<int>(pol)}).second)
                g.edges.push_back({from, d.name, pol});
        }
    }
    return g;
}

Stratification stratify(const CoreProgram& program, const DependencyGraph& graph) {
    std::map<std::string, size_t> order;
    for (size_t i = 0; i < graph.nodes.size(); ++i) order[graph.nodes[i]] = i;

    // deps[u] = definitions u's body mentions.
    std::map<std::string, std::vector<std::string>> deps;
    for (const std::string& n : graph.nodes) deps[n];
    for (const DepEdge& e : graph.edges) deps[e.to].push_back(e.from);

    // Tarjan over the depends-on graph: components come out with
    // dependencies before dependents.
    std::map<std::string, int> index, low;
    std::map<std::string, bool> on_stack;
    std::vector<std::string> stack;
    int counter = 0;
    std::vector<std::vector<std::string>> comps;
    std::function<void(const std::string&)> strongconnect = [&](const std::string& v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (const std::string& w : deps[v]) {
            if (!index.count(w)) {
                strongconnect(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::string> comp;
            while (true) {
                std::string w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp.push_back(w);
                if (w == v) break;
            }
            comps.push_back(std::move(comp));
        }
    };
    for (const std::string& n : graph.nodes)
        if (!index.count(n)) strongconnect(n);

    std::set<std::string> parametric;
    for (const CoreDef& d : program.defs)
        if (parametric_arity(d.body) > 0) parametric.insert(d.name);

    Stratification out;
    for (auto& comp : comps) {
        std::sort(comp.begin(), comp.end(),
                  [&](const std::string& a, const std::string& b) { return order[a] < order[b]; });
        std::set<std::string> members(comp.begin(), comp.end());
        Stratum st;
        st.names = comp;
        for (const DepEdge& e : graph.edges) {
            if (!members.count(e.from) || !members.count(e.to)) continue;
            st.recursive = true;
            if (e.polarity != DepEdge::Polarity::Positive) st.staged = true;
        }
        if (comp.size() > 1) st.recursive = true;
        st.parametric = std::all_of(comp.begin(), comp.end(), [&](const std::string& n) {
            return parametric.count(n) > 0;
        });
        out.strata.push_back(std::move(st));
    }
    return out;
}

// ------------------------------------------------------- evaluation

EnvPtr eval_program(const CoreProgram& program, const EnvPtr& base, const ProgramOptions& opts,
                    Stratification* report) {
    ensure_hook_installed();
    DependencyGraph graph = build_dependency_graph(program);
    Stratification strat = stratify(program, graph);

    std::map<std::string, const CoreDef*> defs;
    std::set<std::string> names;
    for (const CoreDef& d : program.defs) {
        defs[d.name] = &d;
        names.insert(d.name);
    }

    auto genv = std::const_pointer_cast<Env>(base)->fork();
    EnvPtr cenv = genv;
    std::map<std::string, ExtentSlotPtr> slots;
    for (const CoreDef& d : program.defs) {
        auto slot = std::make_shared<ExtentSlot>();
        slot->rel = Relation::empty();
        slots[d.name] = slot;
        genv->bind_slot(d.name, slot);
    }

    // Transitive mention closure, for semi-naive rule skipping and for
    // the instantiation cache's watched extents.
    std::map<std::string, std::set<std::string>> reach;
    for (const CoreDef& d : program.defs)
        for (const auto& [m, pol] : mentions_of(d.body, names)) reach[d.name].insert(m);
    for (bool grew = true; grew;) {
        grew = false;
        for (auto& [n, rs] : reach) {
            std::set<std::string> add;
            for (const std::string& m : rs) {
                auto it = reach.find(m);
                if (it != reach.end()) add.insert(it->second.begin(), it->second.end());
            }
            size_t before = rs.size();
            rs.insert(add.begin(), add.end());
            grew = grew || rs.size() != before;
        }
    }

    int stratum_no = 0;
    for (Stratum& st : strat.strata) {
        ++stratum_no;
        bool staged = st.staged || opts.force_staged;
        if (opts.trace) {
            *opts.trace << "stratum " << stratum_no << ":";
            for (const std::string& n : st.names) *opts.trace << ' ' << n;
            *opts.trace << " [" << (staged ? "staged" : "monotone")
                        << (st.recursive ? ", recursive" : "")
                        << (st.parametric ? ", parametric" : "") << "]\n";
        }

        std::vector<const CoreDef*> plain;
        for (const std::string& name : st.names) {
            const CoreDef* d = defs[name];
            size_t k = parametric_arity(d->body);
            if (k == 0) {
                plain.push_back(d);
                continue;
            }
            RelationPtr v = eval_expr(d->body, cenv);
            if (v->shape() == Relation::Shape::Closure) {
                v = Relation::closure(v->branches(), d->name);
                ParametricInfo info;
                info.name = d->name;
                info.rel_params = k;
                info.staged = staged;
                info.max_stages = opts.max_stages;
                info.keepalive = v;
                info.trace = opts.trace;
                for (const std::string& m : reach[d->name])
                    if (auto it = slots.find(m); it != slots.end() && m != d->name)
                        info.watched.push_back(it->second);
                g_registry.emplace(v.get(), std::move(info));
            }
            slots[name]->rel = v;
        }

        if (plain.empty()) {
            st.stages = 0;
            continue;
        }
        if (!st.recursive && !opts.force_staged) {
            // Bound lazily; enumeration happens on demand at queries.
            for (const CoreDef* d : plain) slots[d->name]->rel = eval_expr(d->body, cenv);
            st.stages = 0;
            continue;
        }

        // Fixpoint iteration over the materialized members.
        struct Rule {
            NodePtr node;
            std::set<std::string> deps;  // transitive, for semi-naive skipping
        };
        std::map<std::string, std::vector<Rule>> rules;
        for (const CoreDef* d : plain) {
            for (const NodePtr& br : union_branches(d->body)) {
                Rule r;
                r.node = br;
                for (const auto& [m, pol] : mentions_of(br, names)) {
                    r.deps.insert(m);
                    auto it = reach.find(m);
                    if (it != reach.end()) r.deps.insert(it->second.begin(), it->second.end());
                }
                rules[d->name].push_back(std::move(r));
            }
        }

        std::map<std::string, TupleSet> cur;
        for (const CoreDef* d : plain) cur[d->name];
        std::set<std::string> changed_prev;
        bool first_round = true;
        int64_t stage = 0;
        while (true) {
            if (++stage > opts.max_stages) {
                std::string who;
                for (const CoreDef* d : plain) who += (who.empty() ? "" : ", ") + d->name;
                throw NoFixpoint("definitions " + who + " did not reach a fixpoint within " +
                                     std::to_string(opts.max_stages) + " stages",
                                 plain.front()->span);
            }
            std::map<std::string, TupleSet> next;
            for (const CoreDef* d : plain) {
                TupleSet acc = staged ? TupleSet{} : cur[d->name];
                for (const Rule& r : rules[d->name]) {
                    if (!first_round && !staged) {
                        bool affected = false;
                        for (const std::string& c : changed_prev)
                            if (r.deps.count(c)) {
                                affected = true;
                                break;
                            }
                        if (!affected) continue;
                    }
                    RelationPtr ext = force_extensional(eval_expr(r.node, cenv), d->span);
                    acc.insert(ext->tuples().begin(), ext->tuples().end());
                }
                next[d->name] = std::move(acc);
            }
            if (opts.trace) {
                *opts.trace << "  stage " << stage << ":";
                for (const CoreDef* d : plain)
                    *opts.trace << ' ' << d->name << '=' << next[d->name].size();
                *opts.trace << '\n';
            }
            if (next == cur) break;
            changed_prev.clear();
            for (const CoreDef* d : plain)
                if (next[d->name] != cur[d->name]) changed_prev.insert(d->name);
            cur = std::move(next);
            for (const CoreDef* d : plain)
                slots[d->name]->rel = Relation::from_tuples(TupleSet(cur[d->name]));
            first_round = false;
        }
        st.stages = static_cast<int>(stage);
    }

    if (report) *report = strat;
    return cenv;
}

size_t instantiation_cache_hits() { return g_hits; }
size_t instantiation_cache_misses() { return g_misses; }

void reset_instantiation_state() {
    g_registry.clear();
    g_cache.clear();
    g_in_progress.clear();
    g_hits = 0;
    g_misses = 0;
}

}  // namespace rel
