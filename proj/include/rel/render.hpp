#pragma once

#include <string>

#include "rel/relation.hpp"

namespace rel {

enum class OutputFormat { Table, Json, Csv };

// Display form of a scalar: integers in decimal, floats in shortest
// round-trip notation, strings verbatim, booleans true/false, relation
// name symbols with a leading colon.
std::string render_value(const Value& v);

// Renders a finite relation in canonical order (arity first, then
// elementwise). Table output groups tuples by arity with a blank line
// between groups; CSV quotes per RFC 4180; JSON is an array of arrays
// of typed cells in the storage format. Repeated renderings of the
// same relation are byte-identical.
std::string render_relation(const RelationPtr& r, OutputFormat format);

}  // namespace rel
