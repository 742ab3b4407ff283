#pragma once

#include <map>
#include <string>
#include <vector>

#include "rel/relation.hpp"

namespace rel {

// Per-relation storage metadata. `functional` marks the last column as
// a non-key value column; when `gnf_checked` is also set, the key
// property (no two tuples share the same all-but-last prefix) is
// validated on load and before commit.
struct RelationMeta {
    bool functional = false;
    bool gnf_checked = false;

    friend bool operator==(const RelationMeta&, const RelationMeta&) = default;
};

// The stored state: finite first-order relations plus their metadata.
// Every relation has a manifest entry; extents and manifest are kept in
// sync by load/persist and the transaction engine.
struct Database {
    std::map<std::string, RelationPtr> relations;  // extensional, first-order
    std::map<std::string, RelationMeta> manifest;
};

bool database_equal(const Database& a, const Database& b);

// One stored tuple as a single line: a JSON array of typed cells, e.g.
// [{"t":"str","v":"O1"},{"t":"int","v":2}].
std::string tuple_to_line(const Tuple& t);
Tuple tuple_from_line(const std::string& line);

// Directory layout: manifest.json naming every relation with its flags
// and data file, plus one line-oriented data file per relation, tuples
// in canonical order, UTF-8 with LF line endings. load(persist(db))
// is the identity, and persisting a loaded canonical directory leaves
// it byte-identical.
//
// load_database throws CorruptDatabase on a missing or malformed
// manifest, a manifest/data-file mismatch, or an unreadable line, and
// GnfViolation when a gnf_checked functional relation breaks the key
// property. Duplicate lines are deduplicated with a warning.
Database load_database(const std::string& dir, std::vector<std::string>* warnings = nullptr);
void persist_database(const Database& db, const std::string& dir);

// Creates `dir` (if needed) with an empty manifest.
void init_database(const std::string& dir);

// Key check for functional relations flagged gnf_checked; throws
// GnfViolation naming the relation and the offending tuples.
void check_gnf(const Database& db);

// Advisory lock file held while a transaction runs against `dir`;
// released (and the file removed) on destruction. A second concurrent
// lock attempt throws DomainError ("database is locked").
class DatabaseLock {
public:
    explicit DatabaseLock(const std::string& dir);
    ~DatabaseLock();
    DatabaseLock(const DatabaseLock&) = delete;
    DatabaseLock& operator=(const DatabaseLock&) = delete;

private:
    std::string path_;
};

}  // namespace rel
