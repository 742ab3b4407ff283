// Command-line driver: run programs against a database, statically
// check programs, explore interactively, or create a new database.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rel/database.hpp"
#include "rel/desugar.hpp"
#include "rel/errors.hpp"
#include "rel/eval.hpp"
#include "rel/parser.hpp"
#include "rel/program.hpp"
#include "rel/render.hpp"
#include "rel/safety.hpp"
#include "rel/stdlib.hpp"
#include "rel/transaction.hpp"

namespace {

using namespace rel;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

OutputFormat parse_format(const std::string& name) {
    if (name == "table") return OutputFormat::Table;
    if (name == "json") return OutputFormat::Json;
    if (name == "csv") return OutputFormat::Csv;
    throw DomainError("unknown output format: " + name);
}

// Names a static checker may assume to be finite relations: stored and
// derived relations, plus any identifier the program merely scans —
// without a database we cannot tell base relations from typos, so
// unknown names are treated as finite base relations.
std::set<std::string> assumed_finite(const CoreProgram& program,
                                     const std::set<std::string>& extra) {
    std::set<std::string> names = extra;
    for (const CoreDef& d : program.defs) names.insert(d.name);
    std::vector<ast::NodePtr> work;
    for (const CoreDef& d : program.defs) work.push_back(d.body);
    for (const ast::Constraint& c : program.ics) work.push_back(c.body);
    while (!work.empty()) {
        ast::NodePtr n = work.back();
        work.pop_back();
        if (!n) continue;
        if (n->kind == ast::Kind::Ident) names.insert(n->name);
        work.push_back(n->a);
        work.push_back(n->b);
        work.push_back(n->c);
        for (const ast::Arg& a : n->args) work.push_back(a.expr);
        for (const ast::Binding& b : n->bindings) work.push_back(b.range);
    }
    return names;
}

int cmd_run(const std::string& db_path, const std::string& program_path,
            OutputFormat format, const TransactionOptions& topts, bool dry_run,
            bool explain_safety) {
    std::string source = read_file(program_path);
    DatabaseLock lock(db_path);
    Database db = load_database(db_path);

    if (explain_safety) {
        CoreProgram core = desugar(parse_program(source));
        std::set<std::string> finite;
        for (const auto& [name, rel] : db.relations) finite.insert(name);
        for (const std::string& name : stdlib_names()) finite.insert(name);
        std::cerr << check_program(core, assumed_finite(core, finite)).explain();
    }

    TransactionOutcome outcome = run_transaction(db, source, topts);
    std::cout << render_relation(outcome.output, format);
    if (!outcome.diagnostics.empty()) {
        for (const std::string& d : outcome.diagnostics) std::cerr << "error: " << d << "\n";
        return 1;
    }
    if (!outcome.committed()) {
        for (const auto& [name, extent] : outcome.violations) {
            if (extent->tuples().empty()) continue;
            std::cerr << "constraint " << name << " violated:\n"
                      << render_relation(extent, OutputFormat::Table);
        }
        std::cerr << "transaction aborted\n";
        return 2;
    }
    if (!dry_run) persist_database(db, db_path);
    return 0;
}

int cmd_check(const std::string& program_path, bool explain_safety, bool use_stdlib) {
    std::string source = read_file(program_path);
    ast::Program surface;
    try {
        surface = parse_program(source);
    } catch (const RelError& e) {
        std::cout << "parse error: " << e.what() << "\n";
        return 1;
    }
    CoreProgram core = desugar(surface);
    std::set<std::string> finite = use_stdlib ? stdlib_names() : std::set<std::string>{};
    SafetyReport report = check_program(core, assumed_finite(core, finite));
    if (explain_safety) std::cerr << report.explain();

    bool clean = true;
    for (const DefPlan& plan : report.defs) {
        if (plan.ok) continue;
        clean = false;
        std::cout << "unsafe: " << plan.name << ": variable '" << plan.unbound_variable
                  << "' cannot be bound";
        if (!plan.atom.empty()) std::cout << " in " << plan.atom;
        std::cout << "\n";
    }
    Stratification strata = stratify(core, build_dependency_graph(core));
    for (const Stratum& s : strata.strata) {
        if (!s.staged) continue;
        std::cout << "staged component:";
        for (const std::string& name : s.names) std::cout << " " << name;
        std::cout << "\n";
    }
    if (clean) std::cout << "ok\n";
    return clean ? 0 : 1;
}

int cmd_repl(const std::string& db_path, const TransactionOptions& topts) {
    Database db = load_database(db_path);
    auto base = Env::root();
    for (const auto& [name, rel] : db.relations) base->bind(name, rel);

    std::vector<std::string> session;  // accumulated def/ic lines
    auto session_env = [&]() -> EnvPtr {
        std::string src;
        for (const std::string& s : session) src += s + "\n";
        CoreProgram full;
        if (topts.use_stdlib) full = stdlib_program();
        CoreProgram user = desugar(parse_program(src));
        for (auto& d : user.defs) full.defs.push_back(std::move(d));
        return eval_program(full, base, topts.program);
    };

    std::string line;
    while (std::cout << "rel> " << std::flush, std::getline(std::cin, line)) {
        if (line.empty()) continue;
        try {
            if (line == ":quit") break;
            if (line == ":relations") {
                for (const auto& [name, rel] : db.relations)
                    std::cout << name << " (" << rel->tuples().size() << " tuples)\n";
                continue;
            }
            if (line == ":reset") {
                session.clear();
                reset_instantiation_state();
                std::cout << "session cleared\n";
                continue;
            }
            if (line.rfind(":load ", 0) == 0) {
                std::string contents = read_file(line.substr(6));
                parse_program(contents);  // report errors before accumulating
                session.push_back(contents);
                std::cout << "loaded\n";
                continue;
            }
            if (line[0] == ':') {
                std::cout << "unknown command: " << line << "\n";
                continue;
            }
            if (line.rfind("def ", 0) == 0 || line.rfind("ic ", 0) == 0) {
                parse_program(line);
                session.push_back(line);
                continue;
            }
            ast::NodePtr query = desugar_expression(parse_expression(line));
            RelationPtr result = force_extensional(eval_expr(query, session_env()));
            std::cout << render_relation(result, OutputFormat::Table);
        } catch (const RelError& e) {
            std::cout << "error: " << e.what() << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rel: interpreter and transaction engine for a relational language"};
    app.require_subcommand(1);

    std::string db_path, program_path, format_name = "table";
    int64_t max_stages = 10000;
    bool no_stdlib = false, trace_strata = false, explain_safety = false, dry_run = false;

    auto add_engine_flags = [&](CLI::App* cmd) {
        cmd->add_option("--max-stages", max_stages, "fixpoint iteration limit")
            ->envname("REL_MAX_STAGES");
        cmd->add_flag("--no-stdlib", no_stdlib, "do not load the standard library");
        cmd->add_flag("--trace-strata", trace_strata, "trace stratum evaluation to stderr");
    };

    CLI::App* run = app.add_subcommand("run", "run a program as one transaction");
    run->add_option("--db", db_path, "database directory")->required();
    run->add_option("program", program_path, "program file")->required();
    run->add_option("--format", format_name, "output format: table, json, csv");
    run->add_flag("--explain-safety", explain_safety, "print the safety plan to stderr");
    run->add_flag("--dry-run", dry_run, "evaluate but never persist");
    add_engine_flags(run);

    CLI::App* check = app.add_subcommand("check", "statically check a program");
    check->add_option("program", program_path, "program file")->required();
    check->add_flag("--explain-safety", explain_safety, "print the safety plan to stderr");
    check->add_flag("--no-stdlib", no_stdlib, "do not assume the standard library");

    CLI::App* repl = app.add_subcommand("repl", "interactive session");
    repl->add_option("--db", db_path, "database directory")->required();
    add_engine_flags(repl);

    CLI::App* init = app.add_subcommand("init", "create an empty database");
    init->add_option("--db", db_path, "database directory")->required();

    CLI11_PARSE(app, argc, argv);

    rel::TransactionOptions topts;
    topts.use_stdlib = !no_stdlib;
    topts.program.max_stages = max_stages;
    if (trace_strata) topts.program.trace = &std::cerr;

    try {
        if (run->parsed())
            return cmd_run(db_path, program_path, parse_format(format_name), topts, dry_run,
                           explain_safety);
        if (check->parsed()) return cmd_check(program_path, explain_safety, !no_stdlib);
        if (repl->parsed()) return cmd_repl(db_path, topts);
        if (init->parsed()) {
            rel::init_database(db_path);
            return 0;
        }
    } catch (const rel::RelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
