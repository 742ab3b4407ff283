#include "rel/stdlib.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rel/errors.hpp"
#include "rel/parser.hpp"

namespace rel {

namespace {

const char* kFiles[] = {"base.rel", "ra.rel", "la.rel", "graph.rel"};

}  // namespace

std::string stdlib_directory() {
    if (const char* env = std::getenv("REL_STDLIB_DIR"); env && *env) return env;
#ifdef REL_STDLIB_DIR
    return REL_STDLIB_DIR;
#else
    return "stdlib";
#endif
}

CoreProgram load_stdlib(const std::string& directory) {
    ast::Program merged;
    for (const char* file : kFiles) {
        std::string path = directory + "/" + file;
        std::ifstream in(path);
        if (!in) throw StdlibLoadError("cannot open library file " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        ast::Program p;
        try {
            p = parse_program(buf.str());
        } catch (const RelError& e) {
            throw StdlibLoadError("library file " + path + " failed to load: " + e.what());
        }
        for (auto& d : p.defs) merged.defs.push_back(std::move(d));
        for (auto& c : p.ics) merged.ics.push_back(std::move(c));
    }
    return desugar(merged);
}

const CoreProgram& stdlib_program() {
    static const CoreProgram program = load_stdlib(stdlib_directory());
    return program;
}

std::set<std::string> stdlib_names() {
    std::set<std::string> out;
    for (const CoreDef& d : stdlib_program().defs) out.insert(d.name);
    return out;
}

}  // namespace rel
