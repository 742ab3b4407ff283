#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rel/value.hpp"

namespace rel {

namespace ast {
struct Node;
using NodePtr = std::shared_ptr<const Node>;
}  // namespace ast

class Env;
struct BuiltinDef;

// One definition branch of a closure relation: either a core expression
// (usually an abstraction) closed over its environment, or a direct
// reference to an already-evaluated relation. The relation denoted by
// the closure is the union of its branches.
struct ClosureBranch {
    ast::NodePtr expr;                 // unset when `direct` is used
    std::shared_ptr<const Env> env;    // environment `expr` is closed over
    RelationPtr direct;                // pre-evaluated relation branch
};

// Arity-heterogeneous set of tuples. Extensional relations are finite and
// enumerable; the other shapes are symbolic and may denote infinite sets.
class Relation {
public:
    enum class Shape { Extensional, Builtin, Closure, UniverseValue, UniverseTuple };

    static RelationPtr empty();
    static RelationPtr unit();  // {<>} , Boolean true
    static RelationPtr from_tuples(TupleSet tuples);
    static RelationPtr singleton(Tuple t);
    static RelationPtr singleton_value(Value v);
    static RelationPtr builtin(const BuiltinDef* def);
    static RelationPtr closure(std::vector<ClosureBranch> branches, std::string name = "");
    static RelationPtr universe_value();
    static RelationPtr universe_tuple();

    Shape shape() const { return shape_; }
    bool is_extensional() const { return shape_ == Shape::Extensional; }

    const TupleSet& tuples() const { return tuples_; }  // Extensional only
    const BuiltinDef* builtin_def() const { return builtin_; }
    const std::vector<ClosureBranch>& branches() const { return branches_; }
    const std::string& name() const { return name_; }

    bool known_empty() const { return is_extensional() && tuples_.empty(); }
    // True iff the relation is {<>}, the Boolean "true".
    bool is_true() const;

    std::string to_string() const;

private:
    Shape shape_ = Shape::Extensional;
    TupleSet tuples_;
    const BuiltinDef* builtin_ = nullptr;
    std::vector<ClosureBranch> branches_;
    std::string name_;
};

enum class CombineKind { Union, Intersect, Minus, Product };

// Standard set-theoretic combination; product concatenates tuples pairwise.
// Intersect/minus with a finite left operand may filter a symbolic right
// operand by membership testing.
RelationPtr relation_combine(CombineKind kind, const RelationPtr& a, const RelationPtr& b);

// Tuples of an extensional first-order relation in canonical order
// (arity first, then elementwise value order).
std::vector<Tuple> canonical_sort(const RelationPtr& r);

}  // namespace rel
