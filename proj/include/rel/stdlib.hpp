#pragma once

#include <set>
#include <string>

#include "rel/desugar.hpp"

namespace rel {

// Directory the library source ships in; overridable with the
// REL_STDLIB_DIR environment variable.
std::string stdlib_directory();

// Parses and desugars the shipped `.rel` library files (base, ra, la,
// graph). Throws StdlibLoadError when a file is missing or fails to
// parse. The result is cached after the first load.
const CoreProgram& stdlib_program();

// Same, reading from an explicit directory (uncached).
CoreProgram load_stdlib(const std::string& directory);

// Names defined by the library, for safety analysis scoping.
std::set<std::string> stdlib_names();

}  // namespace rel
