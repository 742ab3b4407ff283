#include "rel/relation.hpp"

#include <sstream>

#include "rel/builtins.hpp"
#include "rel/env.hpp"
#include "rel/errors.hpp"

namespace rel {

namespace {
std::string builtin_display_name(const BuiltinDef* def) { return def->name; }
}  // namespace

// Implemented by the evaluator; membership test that also works for
// symbolic relations.
bool relation_contains(const RelationPtr& r, const Tuple& t);

RelationPtr Relation::empty() {
    static RelationPtr e = from_tuples({});
    return e;
}

RelationPtr Relation::unit() {
    static RelationPtr u = singleton(Tuple());
    return u;
}

RelationPtr Relation::from_tuples(TupleSet tuples) {
    auto r = std::make_shared<Relation>();
    r->shape_ = Shape::Extensional;
    r->tuples_ = std::move(tuples);
    return r;
}

RelationPtr Relation::singleton(Tuple t) {
    TupleSet s;
    s.insert(std::move(t));
    return from_tuples(std::move(s));
}

RelationPtr Relation::singleton_value(Value v) {
    return singleton(Tuple::of_values({std::move(v)}));
}

RelationPtr Relation::builtin(const BuiltinDef* def) {
    auto r = std::make_shared<Relation>();
    r->shape_ = Shape::Builtin;
    r->builtin_ = def;
    if (def) r->name_ = builtin_display_name(def);
    return r;
}

RelationPtr Relation::closure(std::vector<ClosureBranch> branches, std::string name) {
    auto r = std::make_shared<Relation>();
    r->shape_ = Shape::Closure;
    r->branches_ = std::move(branches);
    r->name_ = std::move(name);
    return r;
}

RelationPtr Relation::universe_value() {
    auto r = std::make_shared<Relation>();
    r->shape_ = Shape::UniverseValue;
    return r;
}

RelationPtr Relation::universe_tuple() {
    auto r = std::make_shared<Relation>();
    r->shape_ = Shape::UniverseTuple;
    return r;
}

bool Relation::is_true() const {
    return is_extensional() && tuples_.size() == 1 && tuples_.begin()->arity() == 0;
}

std::string Relation::to_string() const {
    switch (shape_) {
        case Shape::Extensional: {
            std::ostringstream os;
            os << "{";
            bool first = true;
            for (const auto& t : tuples_) {
                if (!first) os << "; ";
                first = false;
                os << t.to_string();
            }
            os << "}";
            return os.str();
        }
        case Shape::Builtin: return "<builtin " + name_ + ">";
        case Shape::Closure: return name_.empty() ? "<closure>" : "<closure " + name_ + ">";
        case Shape::UniverseValue: return "<all values>";
        case Shape::UniverseTuple: return "<all tuples>";
    }
    return "?";
}

RelationPtr relation_combine(CombineKind kind, const RelationPtr& a, const RelationPtr& b) {
    switch (kind) {
        case CombineKind::Union: {
            if (!a->is_extensional() || !b->is_extensional())
                throw InfiniteResult("union of non-enumerable relations");
            TupleSet out = a->tuples();
            out.insert(b->tuples().begin(), b->tuples().end());
            return Relation::from_tuples(std::move(out));
        }
        case CombineKind::Intersect: {
            const RelationPtr& fin = a->is_extensional() ? a : b;
            const RelationPtr& other = a->is_extensional() ? b : a;
            if (!fin->is_extensional())
                throw InfiniteResult("intersection of two non-enumerable relations");
            TupleSet out;
            for (const auto& t : fin->tuples())
                if (relation_contains(other, t)) out.insert(t);
            return Relation::from_tuples(std::move(out));
        }
        case CombineKind::Minus: {
            if (!a->is_extensional())
                throw InfiniteResult("difference with non-enumerable left operand");
            TupleSet out;
            for (const auto& t : a->tuples())
                if (!relation_contains(b, t)) out.insert(t);
            return Relation::from_tuples(std::move(out));
        }
        case CombineKind::Product: {
            // Annihilation and identity do not require the other operand
            // to be enumerable.
            if (a->known_empty() || b->known_empty()) return Relation::empty();
            if (a->is_true()) return b;
            if (b->is_true()) return a;
            if (!a->is_extensional() || !b->is_extensional())
                throw InfiniteResult("product of non-enumerable relations");
            TupleSet out;
            for (const auto& ta : a->tuples())
                for (const auto& tb : b->tuples()) out.insert(ta.concat(tb));
            return Relation::from_tuples(std::move(out));
        }
    }
    return Relation::empty();
}

std::vector<Tuple> canonical_sort(const RelationPtr& r) {
    if (!r->is_extensional()) throw NotEnumerable("canonical_sort requires an extensional relation");
    // TupleSet is ordered by the canonical comparator already.
    return {r->tuples().begin(), r->tuples().end()};
}

}  // namespace rel
