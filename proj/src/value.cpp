#include "rel/value.hpp"

#include <bit>
#include <charconv>
#include <sstream>

#include "rel/relation.hpp"

namespace rel {

namespace {

// Total order on doubles, consistent with bit-level equality: maps the
// IEEE bit pattern to a monotone integer key, which orders -0.0 before
// 0.0 and gives NaNs a fixed position.
uint64_t float_order_key(double d) {
    auto bits = std::bit_cast<uint64_t>(d);
    return (bits & 0x8000000000000000ull) ? ~bits : bits | 0x8000000000000000ull;
}

int float_bits_compare(double a, double b) {
    uint64_t ka = float_order_key(a), kb = float_order_key(b);
    return ka < kb ? -1 : (ka > kb ? 1 : 0);
}

}  // namespace

bool Value::operator==(const Value& other) const {
    if (kind() != other.kind()) return false;
    switch (kind()) {
        case Kind::Float:
            return std::bit_cast<uint64_t>(as_float()) == std::bit_cast<uint64_t>(other.as_float());
        default:
            return rep_ == other.rep_;
    }
}

bool Value::operator<(const Value& other) const {
    if (kind() != other.kind()) return static_cast<int>(kind()) < static_cast<int>(other.kind());
    switch (kind()) {
        case Kind::Int: return as_int() < other.as_int();
        case Kind::Float: return float_bits_compare(as_float(), other.as_float()) < 0;
        case Kind::Str: return as_str() < other.as_str();
        case Kind::Bool: return as_bool() < other.as_bool();
        case Kind::Sym: return as_sym().name < other.as_sym().name;
    }
    return false;
}

std::string format_double(double d) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), d);
    std::string out(buf, res.ptr);
    // Keep a kind marker so 1.0 prints differently from the integer 1.
    if (out.find('.') == std::string::npos && out.find('e') == std::string::npos &&
        out.find("inf") == std::string::npos && out.find("nan") == std::string::npos) {
        out += ".0";
    }
    return out;
}

std::string Value::to_string() const {
    switch (kind()) {
        case Kind::Int: return std::to_string(as_int());
        case Kind::Float: return format_double(as_float());
        case Kind::Str: {
            std::string out = "\"";
            for (char c : as_str()) {
                if (c == '"' || c == '\\') out += '\\';
                out += c;
            }
            return out + "\"";
        }
        case Kind::Bool: return as_bool() ? "true" : "false";
        case Kind::Sym: return ":" + as_sym().name;
    }
    return "?";
}

bool Cell::operator==(const Cell& other) const {
    if (is_value() != other.is_value()) return false;
    if (is_value()) return value() == other.value();
    // Relation cells are transient; compare by pointer identity.
    return relation() == other.relation();
}

bool Cell::operator<(const Cell& other) const {
    if (is_value() != other.is_value()) return is_value();  // values sort before relations
    if (is_value()) return value() < other.value();
    return relation().get() < other.relation().get();
}

std::string Cell::to_string() const {
    if (is_value()) return value().to_string();
    return relation() ? relation()->to_string() : "<null>";
}

Tuple Tuple::of_values(std::vector<Value> vs) {
    std::vector<Cell> cells;
    cells.reserve(vs.size());
    for (auto& v : vs) cells.emplace_back(std::move(v));
    return Tuple(std::move(cells));
}

bool Tuple::first_order() const {
    for (const auto& c : cells_)
        if (!c.is_value()) return false;
    return true;
}

Tuple Tuple::concat(const Tuple& right) const {
    std::vector<Cell> cells = cells_;
    cells.insert(cells.end(), right.cells_.begin(), right.cells_.end());
    return Tuple(std::move(cells));
}

Tuple Tuple::prefix(size_t n) const {
    return Tuple(std::vector<Cell>(cells_.begin(), cells_.begin() + std::min(n, cells_.size())));
}

Tuple Tuple::suffix(size_t from) const {
    if (from >= cells_.size()) return Tuple();
    return Tuple(std::vector<Cell>(cells_.begin() + from, cells_.end()));
}

bool Tuple::operator==(const Tuple& other) const { return cells_ == other.cells_; }

bool Tuple::operator<(const Tuple& other) const {
    if (arity() != other.arity()) return arity() < other.arity();
    for (size_t i = 0; i < arity(); ++i) {
        if (cells_[i] < other.cells_[i]) return true;
        if (other.cells_[i] < cells_[i]) return false;
    }
    return false;
}

std::string Tuple::to_string() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < cells_.size(); ++i) {
        if (i) os << ", ";
        os << cells_[i].to_string();
    }
    os << ")";
    return os.str();
}

Tuple tuple_concat(const Tuple& left, const Tuple& right) { return left.concat(right); }

}  // namespace rel
