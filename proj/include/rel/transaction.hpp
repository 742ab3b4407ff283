#pragma once

#include <map>
#include <string>
#include <vector>

#include "rel/database.hpp"
#include "rel/program.hpp"

namespace rel {

// One committed change, derived from the control relations: the first
// column of an insert/delete tuple names the base relation, the rest is
// the stored tuple.
struct Effect {
    enum class Kind { Delete, Insert };
    Kind kind = Kind::Insert;
    std::string relation;
    Tuple tuple;

    friend bool operator==(const Effect&, const Effect&) = default;
};

struct TransactionOutcome {
    enum class Status { Committed, Aborted };
    Status status = Status::Committed;
    RelationPtr output;                             // extensional, possibly empty
    std::vector<Effect> effects;                    // deletes first, then inserts
    std::map<std::string, RelationPtr> violations;  // per integrity constraint
    std::vector<std::string> diagnostics;           // errors that forced an abort

    bool committed() const { return status == Status::Committed; }
    bool has_violations() const;
};

struct TransactionOptions {
    bool use_stdlib = true;       // prepend the shipped library definitions
    ProgramOptions program;       // fixpoint limits / tracing
    Stratification* report = nullptr;
};

// Runs one program against `db`: parse, desugar, stratified evaluation,
// then collection of the control relations `output`, `insert`, and
// `delete`. Insert/delete tuples must start with a relation-name
// symbol. Integrity constraints are checked on the post-effect state;
// for `ic name(params) requires Body` the violation extent holds the
// parameter tuples for which Body fails (a zero-parameter constraint
// yields {<>} when its body is false). Any violation — or any
// evaluation error, recorded in `diagnostics` — aborts the transaction
// and leaves `db` untouched. On commit, deletes are applied before
// inserts and missing base relations are created; persistence is the
// caller's concern.
TransactionOutcome run_transaction(Database& db, const std::string& source,
                                   const TransactionOptions& opts = {});

}  // namespace rel
