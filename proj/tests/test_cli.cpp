#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "corpus_cases.hpp"

namespace fs = std::filesystem;

namespace {

std::string rel_bin() {
    const char* env = std::getenv("REL_BIN");
    REQUIRE_MESSAGE(env != nullptr, "REL_BIN must point at the rel executable");
    return env;
}

struct Result {
    int exit_code = -1;
    std::string out;  // stdout and stderr interleaved
};

// Runs `rel <args>` through the shell, capturing combined output.
Result run_cli(const std::string& args, const std::string& stdin_data = {}) {
    std::string cmd = rel_bin() + " " + args + " 2>&1";
    if (!stdin_data.empty()) {
        std::string in = (fs::temp_directory_path() / "rel_cli_stdin.txt").string();
        std::ofstream(in, std::ios::binary) << stdin_data;
        cmd += " < " + in;
    }
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    Result r;
    std::array<char, 4096> buf;
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

struct TempDb {
    fs::path path;
    explicit TempDb(bool seed = true) {
        path = fs::temp_directory_path() /
               fs::path("rel_cli_db_" + std::to_string(counter()++));
        fs::remove_all(path);
        if (seed) fs::copy(corpus::corpus_dir() + "/fig1_db", path);
    }
    ~TempDb() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    static int& counter() {
        static int n = 0;
        return n;
    }
};

std::string write_program(const std::string& source) {
    static int n = 0;
    std::string p =
        (fs::temp_directory_path() / ("rel_cli_prog_" + std::to_string(n++) + ".rel"))
            .string();
    std::ofstream(p, std::ios::binary) << source;
    return p;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        out[fs::relative(e.path(), dir).string()] =
            corpus::read_file(e.path().string());
    }
    return out;
}

const std::string kPriceQuery =
    "def output(x) : exists((y) | ProductPrice(x, y) and y > 30)\n";

}  // namespace

TEST_CASE("run prints the output relation and commits with exit 0") {
    TempDb db;
    std::string prog = write_program(kPriceQuery);
    Result r = run_cli("run --db " + db.str() + " " + prog);
    CHECK(r.exit_code == 0);
    CHECK(r.out == "P4\n");
    // A read-only run leaves the directory byte-identical and is
    // reproducible.
    auto before = snapshot(db.path);
    Result again = run_cli("run --db " + db.str() + " " + prog);
    CHECK(again.out == r.out);
    CHECK(snapshot(db.path) == before);
}

TEST_CASE("run supports json and csv output") {
    TempDb db;
    std::string prog = write_program(kPriceQuery);
    CHECK(run_cli("run --db " + db.str() + " --format json " + prog).out ==
          "[\n [{\"t\":\"str\",\"v\":\"P4\"}]\n]\n");
    CHECK(run_cli("run --db " + db.str() + " --format csv " + prog).out == "P4\r\n");
}

TEST_CASE("run persists committed effects unless --dry-run is given") {
    std::string prog = corpus::corpus_dir() + "/close_order.rel";
    TempDb db;
    auto before = snapshot(db.path);

    Result dry = run_cli("run --db " + db.str() + " --dry-run " + prog);
    CHECK(dry.exit_code == 0);
    CHECK(snapshot(db.path) == before);

    Result wet = run_cli("run --db " + db.str() + " " + prog);
    CHECK(wet.exit_code == 0);
    auto after = snapshot(db.path);
    CHECK(after != before);
    CHECK(after.count("ClosedOrders.rows") == 1);
}

TEST_CASE("run exits 2 when a constraint is violated, leaving the database intact") {
    TempDb db;
    std::string prog = write_program(
        "def insert : {(:OrderProductQuantity, \"O9\", \"P9\", 2.5)}\n"
        "ic integer_quantities(q) requires "
        "exists((o, p) | OrderProductQuantity(o, p, q)) implies Int(q)\n");
    auto before = snapshot(db.path);
    Result r = run_cli("run --db " + db.str() + " " + prog);
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("integer_quantities") != std::string::npos);
    CHECK(r.out.find("2.5") != std::string::npos);
    CHECK(snapshot(db.path) == before);
}

TEST_CASE("run exits 1 on errors") {
    TempDb db;
    CHECK(run_cli("run --db " + db.str() + " " + write_program("def broken( : \n"))
              .exit_code == 1);
    CHECK(run_cli("run --db " + db.str() + " " +
                  write_program("def output(x) : not ProductPrice(\"P1\", x)\n"))
              .exit_code == 1);
    CHECK(run_cli("run --db " + db.str() + "/missing " + write_program(kPriceQuery))
              .exit_code == 1);
}

TEST_CASE("check reports unsafe definitions with the unbound variable") {
    Result r = run_cli("check " + corpus::corpus_dir() + "/unsafe_not_p1_price.rel");
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("NotP1Price") != std::string::npos);
    CHECK(r.out.find("'x'") != std::string::npos);
}

TEST_CASE("check accepts clean programs and reports parse errors") {
    CHECK(run_cli("check " + corpus::corpus_dir() + "/transitive_closure.rel").out == "ok\n");
    Result bad = run_cli("check " + write_program("def broken( : \n"));
    CHECK(bad.exit_code == 1);
    CHECK(bad.out.find("parse error") != std::string::npos);
}

TEST_CASE("check flags components that need staged evaluation") {
    std::string prog = write_program(
        "def Move : {(1,2);(2,3)}\n"
        "def Win(x) : exists((y) | Move(x,y) and not Win(y))\n");
    Result r = run_cli("check " + prog);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("staged component: Win") != std::string::npos);
}

TEST_CASE("init creates an empty database directory") {
    TempDb db(/*seed=*/false);
    Result r = run_cli("init --db " + db.str());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(db.path / "manifest.json"));
    // A run against the fresh directory works.
    Result q = run_cli("run --db " + db.str() + " " +
                       write_program("def output : {(1, 2)}\n"));
    CHECK(q.exit_code == 0);
    CHECK(q.out == "1  2\n");
}

TEST_CASE("repl evaluates queries against accumulated definitions") {
    TempDb db;
    Result r = run_cli("repl --db " + db.str(),
                       "OrderProductQuantity[\"O1\"]\n"
                       ":relations\n"
                       "def Expensive(x) : exists((y) | ProductPrice(x,y) and y > 15)\n"
                       "Expensive\n"
                       ":quit\n");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("P1  2\nP2  1\n") != std::string::npos);
    CHECK(r.out.find("ProductPrice (4 tuples)") != std::string::npos);
    CHECK(r.out.find("P2\nP3\nP4\n") != std::string::npos);
}

TEST_CASE("repl keeps its session after an error") {
    TempDb db;
    Result r = run_cli("repl --db " + db.str(),
                       "def D(x) : ProductPrice(x, _)\n"
                       "NoSuchRelation\n"
                       "D\n"
                       ":quit\n");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("NoSuchRelation") != std::string::npos);  // the error message
    CHECK(r.out.find("P1\nP2\nP3\nP4\n") != std::string::npos);
}
