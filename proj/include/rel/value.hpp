#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace rel {

// Relation-name symbol, written :Name in source.
struct Symbol {
    std::string name;
    friend bool operator==(const Symbol&, const Symbol&) = default;
    friend auto operator<=>(const Symbol& a, const Symbol& b) { return a.name <=> b.name; }
};

// Scalar constant. Kinds never compare equal across each other and the
// total order is: Int < Float < Str < Bool < Sym, then natural order
// within a kind. Float equality is bit-level IEEE; NaN is rejected at
// the parse/arithmetic boundaries.
class Value {
public:
    enum class Kind { Int, Float, Str, Bool, Sym };

    Value() : rep_(int64_t{0}) {}
    explicit Value(int64_t v) : rep_(v) {}
    explicit Value(double v) : rep_(v) {}
    explicit Value(std::string v) : rep_(std::move(v)) {}
    explicit Value(bool v) : rep_(v) {}
    explicit Value(Symbol v) : rep_(std::move(v)) {}

    Kind kind() const { return static_cast<Kind>(rep_.index()); }

    bool is_int() const { return kind() == Kind::Int; }
    bool is_float() const { return kind() == Kind::Float; }
    bool is_str() const { return kind() == Kind::Str; }
    bool is_bool() const { return kind() == Kind::Bool; }
    bool is_sym() const { return kind() == Kind::Sym; }
    bool is_numeric() const { return is_int() || is_float(); }

    int64_t as_int() const { return std::get<int64_t>(rep_); }
    double as_float() const { return std::get<double>(rep_); }
    const std::string& as_str() const { return std::get<std::string>(rep_); }
    bool as_bool() const { return std::get<bool>(rep_); }
    const Symbol& as_sym() const { return std::get<Symbol>(rep_); }

    // Numeric payload as double regardless of Int/Float kind.
    double numeric() const { return is_int() ? double(as_int()) : as_float(); }

    bool operator==(const Value& other) const;
    bool operator<(const Value& other) const;

    std::string to_string() const;

private:
    std::variant<int64_t, double, std::string, bool, Symbol> rep_;
};

class Relation;
using RelationPtr = std::shared_ptr<const Relation>;

// A tuple cell: a scalar value, or (transiently, during evaluation of
// second-order code) a whole relation.
class Cell {
public:
    Cell() = default;
    Cell(Value v) : rep_(std::move(v)) {}
    Cell(RelationPtr r) : rep_(std::move(r)) {}

    bool is_value() const { return rep_.index() == 0; }
    bool is_relation() const { return rep_.index() == 1; }
    const Value& value() const { return std::get<Value>(rep_); }
    const RelationPtr& relation() const { return std::get<RelationPtr>(rep_); }

    bool operator==(const Cell& other) const;
    bool operator<(const Cell& other) const;

    std::string to_string() const;

private:
    std::variant<Value, RelationPtr> rep_;
};

// Ordered sequence of cells. First-order iff every cell is a value.
class Tuple {
public:
    Tuple() = default;
    explicit Tuple(std::vector<Cell> cells) : cells_(std::move(cells)) {}
    static Tuple of_values(std::vector<Value> vs);

    size_t arity() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }
    const Cell& operator[](size_t i) const { return cells_[i]; }
    const std::vector<Cell>& cells() const { return cells_; }

    bool first_order() const;

    Tuple concat(const Tuple& right) const;
    Tuple prefix(size_t n) const;
    Tuple suffix(size_t from) const;

    bool operator==(const Tuple& other) const;
    // Total lexicographic order: arity first, then elementwise.
    bool operator<(const Tuple& other) const;

    std::string to_string() const;

private:
    std::vector<Cell> cells_;
};

Tuple tuple_concat(const Tuple& left, const Tuple& right);

using TupleSet = std::set<Tuple>;

}  // namespace rel
