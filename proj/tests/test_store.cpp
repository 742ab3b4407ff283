#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>

#include "corpus_cases.hpp"
#include "rel/database.hpp"
#include "rel/transaction.hpp"

using namespace rel;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               fs::path("rel_store_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    static int& counter() {
        static int n = 0;
        return n;
    }
};

// Byte-level snapshot of a directory, for atomicity / identity checks.
std::map<std::string, std::string> snapshot(const std::string& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        out[fs::relative(e.path(), dir).string()] =
            corpus::read_file(e.path().string());
    }
    return out;
}

void write_file(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
}

Value Sy(const char* s) { return Value(Symbol{s}); }

RelationPtr rel_of(std::vector<Tuple> rows) {
    TupleSet ts(rows.begin(), rows.end());
    return Relation::from_tuples(std::move(ts));
}

}  // namespace

TEST_CASE("tuple lines round-trip every cell kind") {
    Tuple t = corpus::T({corpus::I(-3), corpus::F(1.5), corpus::S("a\"b\nc"),
                         Value(true), Sy("Orders")});
    CHECK(tuple_from_line(tuple_to_line(t)) == t);
    CHECK(tuple_to_line(corpus::T({corpus::S("O1"), corpus::I(2)})) ==
          "[{\"t\":\"str\",\"v\":\"O1\"},{\"t\":\"int\",\"v\":2}]");
    CHECK_THROWS_AS(tuple_from_line("not json"), CorruptDatabase);
    CHECK_THROWS_AS(tuple_from_line("[{\"t\":\"nope\",\"v\":1}]"), CorruptDatabase);
}

TEST_CASE("persist then load is the identity and re-persist is byte-stable") {
    Database db = corpus::fig1();
    TempDir dir;
    persist_database(db, dir.str());
    std::vector<std::string> warnings;
    Database loaded = load_database(dir.str(), &warnings);
    CHECK(warnings.empty());
    CHECK(database_equal(db, loaded));

    auto before = snapshot(dir.str());
    persist_database(loaded, dir.str());
    CHECK(snapshot(dir.str()) == before);
}

TEST_CASE("init creates an empty loadable database") {
    TempDir dir;
    fs::remove_all(dir.path);
    init_database(dir.str());
    Database db = load_database(dir.str());
    CHECK(db.relations.empty());
    CHECK(db.manifest.empty());
}

TEST_CASE("key property of functional relations is enforced") {
    Database db;
    db.relations["ProductPrice"] = rel_of({corpus::T({corpus::S("P1"), corpus::I(10)}),
                                           corpus::T({corpus::S("P1"), corpus::I(11)})});
    db.manifest["ProductPrice"] = RelationMeta{true, true};
    CHECK_THROWS_WITH_AS(check_gnf(db), doctest::Contains("ProductPrice"), GnfViolation);

    // Unchecked relations may hold the same data.
    db.manifest["ProductPrice"] = RelationMeta{true, false};
    CHECK_NOTHROW(check_gnf(db));

    // The violation also surfaces on load.
    db.manifest["ProductPrice"] = RelationMeta{true, true};
    TempDir dir;
    persist_database(db, dir.str());
    CHECK_THROWS_AS(load_database(dir.str()), GnfViolation);
}

TEST_CASE("duplicate stored lines are deduplicated with a warning") {
    Database db = corpus::fig1();
    TempDir dir;
    persist_database(db, dir.str());
    std::string rows = corpus::read_file((dir.path / "ProductPrice.rows").string());
    std::string first = rows.substr(0, rows.find('\n') + 1);
    write_file(dir.path / "ProductPrice.rows", rows + first);

    std::vector<std::string> warnings;
    Database loaded = load_database(dir.str(), &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("ProductPrice") != std::string::npos);
    CHECK(database_equal(db, loaded));
}

TEST_CASE("corruption is detected on load") {
    SUBCASE("missing manifest") {
        TempDir dir;
        CHECK_THROWS_AS(load_database(dir.str()), CorruptDatabase);
    }
    SUBCASE("manifest names a missing data file") {
        TempDir dir;
        persist_database(corpus::fig1(), dir.str());
        fs::remove(dir.path / "ProductPrice.rows");
        CHECK_THROWS_AS(load_database(dir.str()), CorruptDatabase);
    }
    SUBCASE("stray data file not in the manifest") {
        TempDir dir;
        persist_database(corpus::fig1(), dir.str());
        write_file(dir.path / "Stray.rows", "");
        CHECK_THROWS_AS(load_database(dir.str()), CorruptDatabase);
    }
    SUBCASE("malformed data line") {
        TempDir dir;
        persist_database(corpus::fig1(), dir.str());
        write_file(dir.path / "ProductPrice.rows", "garbage\n");
        CHECK_THROWS_AS(load_database(dir.str()), CorruptDatabase);
    }
}

TEST_CASE("a query-only transaction commits with its output") {
    Database db = corpus::fig1();
    Database before = db;
    auto out = run_transaction(
        db, "def output(x) : exists((y) | ProductPrice(x, y) and y > 30)\n");
    REQUIRE(out.committed());
    CHECK(out.effects.empty());
    CHECK(out.output->tuples() == corpus::names({"P4"}));
    CHECK(database_equal(db, before));
}

TEST_CASE("an empty program commits with no effects") {
    Database db = corpus::fig1();
    auto out = run_transaction(db, "");
    CHECK(out.committed());
    CHECK(out.effects.empty());
    CHECK(out.output->tuples().empty());
}

TEST_CASE("the close-order program deletes and inserts the right tuples") {
    Database db = corpus::fig1();
    auto out = run_transaction(
        db, corpus::read_file(corpus::corpus_dir() + "/close_order.rel"));
    REQUIRE(out.committed());
    REQUIRE(out.effects.size() == 2);
    CHECK(out.effects[0] ==
          Effect{Effect::Kind::Delete, "OrderProductQuantity",
                 corpus::T({corpus::S("O2"), corpus::S("P1"), corpus::I(1)})});
    CHECK(out.effects[1] ==
          Effect{Effect::Kind::Insert, "ClosedOrders", corpus::T({corpus::S("O2")})});
    CHECK(db.relations.at("ClosedOrders")->tuples() == corpus::names({"O2"}));
    CHECK(db.relations.at("OrderProductQuantity")->tuples().count(
              corpus::T({corpus::S("O2"), corpus::S("P1"), corpus::I(1)})) == 0);
    CHECK(db.manifest.count("ClosedOrders") == 1);
}

TEST_CASE("a tuple deleted and re-inserted in one transaction survives") {
    Database db = corpus::fig1();
    auto out = run_transaction(db,
                               "def delete(r, x...) : r = :ProductPrice and "
                               "ProductPrice(x...)\n"
                               "def insert : {(:ProductPrice, \"P1\", 10)}\n");
    REQUIRE(out.committed());
    CHECK(db.relations.at("ProductPrice")->tuples() ==
          TupleSet{corpus::T({corpus::S("P1"), corpus::I(10)})});
}

TEST_CASE("a violated constraint aborts and leaves the database untouched") {
    Database db = corpus::fig1();
    Database before = db;
    auto out = run_transaction(db,
                               "def insert : {(:OrderProductQuantity, \"O9\", \"P9\", 2.5)}\n"
                               "ic integer_quantities(q) requires "
                               "exists((o, p) | OrderProductQuantity(o, p, q)) implies Int(q)\n");
    REQUIRE_FALSE(out.committed());
    REQUIRE(out.violations.count("integer_quantities") == 1);
    CHECK(out.violations.at("integer_quantities")->tuples() ==
          TupleSet{corpus::T({corpus::F(2.5)})});
    CHECK(database_equal(db, before));
}

TEST_CASE("constraints are checked on the post-effect state") {
    Database db = corpus::fig1();
    // The constraint holds before the transaction but not after it.
    auto out = run_transaction(db,
                               "def delete : {(:ProductPrice, \"P4\", 40)}\n"
                               "ic p4_has_a_price() requires exists((y) | "
                               "ProductPrice(\"P4\", y))\n");
    REQUIRE_FALSE(out.committed());
    CHECK(out.violations.at("p4_has_a_price")->tuples() == TupleSet{corpus::T({})});
    CHECK(db.relations.at("ProductPrice")->tuples().count(
              corpus::T({corpus::S("P4"), corpus::I(40)})) == 1);
}

TEST_CASE("a trivially true zero-parameter constraint does not abort") {
    Database db = corpus::fig1();
    auto out = run_transaction(db, "ic t() requires {()}\n");
    CHECK(out.committed());
}

TEST_CASE("a constraint with unboundable parameters is rejected") {
    Database db = corpus::fig1();
    auto out = run_transaction(db, "ic bad(x) requires x = x\n");
    REQUIRE_FALSE(out.committed());
    REQUIRE(out.diagnostics.size() == 1);
    CHECK(out.diagnostics[0].find("bad") != std::string::npos);
}

TEST_CASE("a parse error aborts with a diagnostic") {
    Database db = corpus::fig1();
    Database before = db;
    auto out = run_transaction(db, "def broken( : \n");
    REQUIRE_FALSE(out.committed());
    CHECK(out.effects.empty());
    REQUIRE_FALSE(out.diagnostics.empty());
    CHECK(database_equal(db, before));
}

TEST_CASE("effect tuples must start with a relation-name symbol") {
    Database db = corpus::fig1();
    Database before = db;
    auto out = run_transaction(db, "def insert : {(\"NotASymbol\", 1)}\n");
    REQUIRE_FALSE(out.committed());
    REQUIRE_FALSE(out.diagnostics.empty());
    CHECK(out.diagnostics[0].find("relation name symbol") != std::string::npos);
    CHECK(database_equal(db, before));
}

TEST_CASE("an insert breaking the key property aborts") {
    Database db = corpus::fig1();
    Database before = db;
    auto out = run_transaction(db, "def insert : {(:ProductPrice, \"P1\", 11)}\n");
    REQUIRE_FALSE(out.committed());
    REQUIRE_FALSE(out.diagnostics.empty());
    CHECK(out.diagnostics[0].find("ProductPrice") != std::string::npos);
    CHECK(database_equal(db, before));
}

TEST_CASE("the advisory lock excludes a second holder") {
    TempDir dir;
    init_database(dir.str());
    DatabaseLock lock(dir.str());
    CHECK_THROWS_WITH_AS(DatabaseLock{dir.str()}, doctest::Contains("locked"), DomainError);
}
