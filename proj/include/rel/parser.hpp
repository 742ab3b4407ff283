#pragma once

#include <string>

#include "rel/ast.hpp"

namespace rel {

ast::Program parse_program(const std::string& source);

// Single expression, same grammar as rule bodies (REPL entry point).
ast::NodePtr parse_expression(const std::string& source);

}  // namespace rel
