#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rel/errors.hpp"
#include "rel/value.hpp"

namespace rel {

// Native primitive relation. A binding pattern is a string over {b,f},
// one flag per position: the callback may be invoked only when every 'b'
// position carries a value, and returns complete tuples (all positions)
// consistent with those inputs. Callers filter the completions against
// any additionally-known positions.
struct BuiltinDef {
    std::string name;
    size_t arity;
    std::vector<std::string> patterns;
    std::function<std::vector<std::vector<Value>>(
        const std::string& pattern, const std::vector<std::optional<Value>>& bound, Span span)>
        complete;

    bool supports(const std::string& pattern) const;
};

// name → definition; includes the rel_primitive_* arithmetic family and
// their short aliases used by desugared infix operators.
const std::map<std::string, const BuiltinDef*>& builtin_catalog();

const BuiltinDef* find_builtin(const std::string& name);

// Total comparison used by lt/lte/gt/gte, minimum/maximum and sorting:
// cross-kind numerics compare numerically, same kinds naturally, and
// remaining mixed kinds fall back to the kind order.
int compare_values(const Value& a, const Value& b);

}  // namespace rel
