#include "rel/database.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rel/errors.hpp"

namespace rel {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kLockName = "lock";
constexpr const char* kDataSuffix = ".rows";

std::string data_file_name(const std::string& relation) { return relation + kDataSuffix; }

json cell_to_json(const Cell& c) {
    if (!c.is_value())
        throw DomainError("only first-order tuples can be stored; found a relation cell");
    const Value& v = c.value();
    json j;
    switch (v.kind()) {
        case Value::Kind::Int: j["t"] = "int"; j["v"] = v.as_int(); break;
        case Value::Kind::Float: j["t"] = "float"; j["v"] = v.as_float(); break;
        case Value::Kind::Str: j["t"] = "str"; j["v"] = v.as_str(); break;
        case Value::Kind::Bool: j["t"] = "bool"; j["v"] = v.as_bool(); break;
        case Value::Kind::Sym: j["t"] = "sym"; j["v"] = v.as_sym().name; break;
    }
    return j;
}

Value cell_from_json(const json& j) {
    if (!j.is_object() || !j.contains("t") || !j.contains("v"))
        throw CorruptDatabase("malformed cell: " + j.dump());
    const std::string t = j.at("t").get<std::string>();
    const json& v = j.at("v");
    if (t == "int" && v.is_number_integer()) return Value(v.get<int64_t>());
    if (t == "float" && v.is_number()) return Value(v.get<double>());
    if (t == "str" && v.is_string()) return Value(v.get<std::string>());
    if (t == "bool" && v.is_boolean()) return Value(v.get<bool>());
    if (t == "sym" && v.is_string()) return Value(Symbol{v.get<std::string>()});
    throw CorruptDatabase("malformed cell: " + j.dump());
}

// Writes `content` to `path` through a temporary file in the same
// directory, so readers never observe a half-written file.
void write_file_atomically(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CorruptDatabase("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw CorruptDatabase("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace

bool database_equal(const Database& a, const Database& b) {
    if (a.manifest != b.manifest) return false;
    if (a.relations.size() != b.relations.size()) return false;
    for (const auto& [name, rel] : a.relations) {
        auto it = b.relations.find(name);
        if (it == b.relations.end()) return false;
        if (rel->tuples() != it->second->tuples()) return false;
    }
    return true;
}

std::string tuple_to_line(const Tuple& t) {
    json arr = json::array();
    for (const Cell& c : t.cells()) arr.push_back(cell_to_json(c));
    return arr.dump();
}

Tuple tuple_from_line(const std::string& line) {
    json arr;
    try {
        arr = json::parse(line);
    } catch (const json::exception& e) {
        throw CorruptDatabase(std::string("unparseable tuple line: ") + e.what());
    }
    if (!arr.is_array()) throw CorruptDatabase("tuple line is not a JSON array: " + line);
    std::vector<Value> vs;
    vs.reserve(arr.size());
    for (const json& j : arr) vs.push_back(cell_from_json(j));
    return Tuple::of_values(std::move(vs));
}

Database load_database(const std::string& dir, std::vector<std::string>* warnings) {
    fs::path root(dir);
    if (!fs::is_directory(root)) throw CorruptDatabase("not a database directory: " + dir);
    std::ifstream min(root / kManifestName);
    if (!min) throw CorruptDatabase("missing manifest.json in " + dir);
    json manifest;
    try {
        manifest = json::parse(min);
    } catch (const json::exception& e) {
        throw CorruptDatabase(std::string("malformed manifest.json: ") + e.what());
    }
    if (!manifest.is_object() || !manifest.contains("relations") ||
        !manifest.at("relations").is_object())
        throw CorruptDatabase("manifest.json lacks a \"relations\" object");

    Database db;
    for (const auto& [name, meta] : manifest.at("relations").items()) {
        if (!meta.is_object()) throw CorruptDatabase("malformed manifest entry for " + name);
        RelationMeta m;
        m.functional = meta.value("functional", false);
        m.gnf_checked = meta.value("gnf_checked", false);
        std::string file = meta.value("file", data_file_name(name));
        std::ifstream in(root / file, std::ios::binary);
        if (!in)
            throw CorruptDatabase("manifest lists relation " + name + " but data file " + file +
                                  " is missing");
        TupleSet tuples;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            Tuple t;
            try {
                t = tuple_from_line(line);
            } catch (const CorruptDatabase& e) {
                throw CorruptDatabase(file + ":" + std::to_string(lineno) + ": " + e.message());
            }
            if (!tuples.insert(std::move(t)).second && warnings)
                warnings->push_back(file + ":" + std::to_string(lineno) +
                                    ": duplicate tuple ignored (set semantics)");
        }
        db.relations[name] = Relation::from_tuples(std::move(tuples));
        db.manifest[name] = m;
    }

    // A stray data file that the manifest does not mention indicates a
    // manifest/data mismatch.
    for (const auto& entry : fs::directory_iterator(root)) {
        std::string fname = entry.path().filename().string();
        if (!fname.ends_with(kDataSuffix)) continue;
        std::string name = fname.substr(0, fname.size() - std::string(kDataSuffix).size());
        if (!db.manifest.count(name))
            throw CorruptDatabase("data file " + fname + " is not listed in the manifest");
    }

    check_gnf(db);
    return db;
}

void persist_database(const Database& db, const std::string& dir) {
    fs::path root(dir);
    fs::create_directories(root);

    json rels = json::object();
    for (const auto& [name, meta] : db.manifest) {
        rels[name] = {{"file", data_file_name(name)},
                      {"functional", meta.functional},
                      {"gnf_checked", meta.gnf_checked}};
    }
    json manifest = {{"relations", rels}};
    write_file_atomically(root / kManifestName, manifest.dump(2) + "\n");

    for (const auto& [name, meta] : db.manifest) {
        std::ostringstream out;
        auto it = db.relations.find(name);
        if (it != db.relations.end())
            for (const Tuple& t : canonical_sort(it->second)) out << tuple_to_line(t) << "\n";
        write_file_atomically(root / data_file_name(name), out.str());
    }

    // Drop data files for relations no longer in the manifest so the
    // directory mirrors the database exactly.
    for (const auto& entry : fs::directory_iterator(root)) {
        std::string fname = entry.path().filename().string();
        if (!fname.ends_with(kDataSuffix)) continue;
        std::string name = fname.substr(0, fname.size() - std::string(kDataSuffix).size());
        if (!db.manifest.count(name)) fs::remove(entry.path());
    }
}

void init_database(const std::string& dir) { persist_database(Database{}, dir); }

void check_gnf(const Database& db) {
    for (const auto& [name, meta] : db.manifest) {
        if (!(meta.functional && meta.gnf_checked)) continue;
        auto it = db.relations.find(name);
        if (it == db.relations.end()) continue;
        std::map<Tuple, Tuple> by_key;
        for (const Tuple& t : it->second->tuples()) {
            if (t.arity() == 0) continue;
            Tuple key = t.prefix(t.arity() - 1);
            auto [slot, fresh] = by_key.emplace(std::move(key), t);
            if (!fresh)
                throw GnfViolation("relation " + name + " is not functional: tuples " +
                                   slot->second.to_string() + " and " + t.to_string() +
                                   " share the key " + slot->first.to_string());
        }
    }
}

DatabaseLock::DatabaseLock(const std::string& dir) {
    fs::path p = fs::path(dir) / kLockName;
    int fd = ::open(p.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST)
            throw DomainError("database is locked by another transaction: " + p.string());
        throw CorruptDatabase("cannot create lock file " + p.string());
    }
    ::close(fd);
    path_ = p.string();
}

DatabaseLock::~DatabaseLock() {
    if (!path_.empty()) ::unlink(path_.c_str());
}

}  // namespace rel
