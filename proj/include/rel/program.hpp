#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rel/desugar.hpp"
#include "rel/env.hpp"

namespace rel {

// Dependency edge: `to`'s body mentions `from`. Polarity is negative for
// mentions under `not`, aggregated for mentions inside a reduce or
// passed as a relation-valued argument, positive otherwise.
struct DepEdge {
    enum class Polarity { Positive, Negative, Aggregated };
    std::string from;
    std::string to;
    Polarity polarity = Polarity::Positive;
};

struct DependencyGraph {
    std::vector<std::string> nodes;  // definition names, in program order
    std::vector<DepEdge> edges;      // deduplicated
};

DependencyGraph build_dependency_graph(const CoreProgram& program);

// One strongly connected component, in dependency (evaluation) order.
struct Stratum {
    std::vector<std::string> names;
    bool recursive = false;   // self-loop or more than one member
    bool staged = false;      // some internal edge is negative/aggregated
    bool parametric = false;  // every member has relation parameters
    int stages = 0;           // fixpoint iterations run (filled by eval_program)
};

struct Stratification {
    std::vector<Stratum> strata;
};

Stratification stratify(const CoreProgram& program, const DependencyGraph& graph);

struct ProgramOptions {
    int64_t max_stages = 10000;
    bool force_staged = false;       // run every derived extent under stage semantics
    std::ostream* trace = nullptr;   // stratification / per-stage trace sink
};

// Evaluates all definitions over `base` (the stored relations): derived
// relations in recursive components are materialized by fixpoint
// iteration (least fixpoint for monotone components, stage semantics
// otherwise), other definitions are bound lazily, and definitions with
// relation parameters are registered for cached instantiation on
// application. Returns an environment binding every definition;
// `report`, when given, receives the stratification with stage counts.
EnvPtr eval_program(const CoreProgram& program, const EnvPtr& base,
                    const ProgramOptions& opts = {}, Stratification* report = nullptr);

// Instrumentation for the parametric-instantiation cache.
size_t instantiation_cache_hits();
size_t instantiation_cache_misses();
// Drops cached instantiations and registered parametric definitions.
void reset_instantiation_state();

}  // namespace rel
