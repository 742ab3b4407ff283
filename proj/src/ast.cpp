#include "rel/ast.hpp"

#include <sstream>

namespace rel::ast {

NodePtr make(Kind kind, Span span) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->span = span;
    return n;
}

NodePtr make_const(Value v, Span span) {
    auto n = make(Kind::Const, span);
    const_cast<Node&>(*n).lit = std::move(v);
    return n;
}

NodePtr make_ident(std::string name, Span span) {
    auto n = make(Kind::Ident, span);
    const_cast<Node&>(*n).name = std::move(name);
    return n;
}

namespace {

bool equal_binding(const Binding& a, const Binding& b) {
    return a.kind == b.kind && a.name == b.name && a.lit == b.lit && equal(a.range, b.range);
}

bool equal_arg(const Arg& a, const Arg& b) {
    return a.kind == b.kind && a.name == b.name && equal(a.expr, b.expr);
}

}  // namespace

bool equal(const NodePtr& a, const NodePtr& b) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind || a->name != b->name || !(a->lit == b->lit)) return false;
    if (!equal(a->a, b->a) || !equal(a->b, b->b) || !equal(a->c, b->c)) return false;
    if (a->bindings.size() != b->bindings.size() || a->args.size() != b->args.size()) return false;
    for (size_t i = 0; i < a->bindings.size(); ++i)
        if (!equal_binding(a->bindings[i], b->bindings[i])) return false;
    for (size_t i = 0; i < a->args.size(); ++i)
        if (!equal_arg(a->args[i], b->args[i])) return false;
    return true;
}

bool equal(const Program& a, const Program& b) {
    if (a.defs.size() != b.defs.size() || a.ics.size() != b.ics.size()) return false;
    for (size_t i = 0; i < a.defs.size(); ++i) {
        const auto& da = a.defs[i];
        const auto& db = b.defs[i];
        if (da.name != db.name || da.params.size() != db.params.size() || !equal(da.body, db.body))
            return false;
        for (size_t j = 0; j < da.params.size(); ++j)
            if (!equal_binding(da.params[j], db.params[j])) return false;
    }
    for (size_t i = 0; i < a.ics.size(); ++i) {
        const auto& ca = a.ics[i];
        const auto& cb = b.ics[i];
        if (ca.name != cb.name || ca.params.size() != cb.params.size() || !equal(ca.body, cb.body))
            return false;
        for (size_t j = 0; j < ca.params.size(); ++j)
            if (!equal_binding(ca.params[j], cb.params[j])) return false;
    }
    return true;
}

namespace {

std::string binding_source(const Binding& b) {
    switch (b.kind) {
        case Binding::Kind::Value: return b.name;
        case Binding::Kind::ValueIn: return b.name + " in " + b.range->name;
        case Binding::Kind::TupleVar: return b.name + "...";
        case Binding::Kind::RelVar: return "{" + b.name + "}";
        case Binding::Kind::Literal: return b.lit.to_string();
    }
    return "?";
}

std::string bindings_source(const std::vector<Binding>& bs) {
    std::string out;
    for (size_t i = 0; i < bs.size(); ++i) {
        if (i) out += ", ";
        out += binding_source(bs[i]);
    }
    return out;
}

std::string arg_source(const Arg& a) {
    switch (a.kind) {
        case Arg::Kind::Wildcard: return "_";
        case Arg::Kind::WildcardTuple: return "_...";
        case Arg::Kind::TupleVar: return a.name + "...";
        case Arg::Kind::First: return "?{" + to_source(a.expr) + "}";
        case Arg::Kind::Second: return "&{" + to_source(a.expr) + "}";
        case Arg::Kind::Unannotated: return to_source(a.expr);
    }
    return "?";
}

std::string args_source(const std::vector<Arg>& args) {
    std::string out;
    for (size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        out += arg_source(args[i]);
    }
    return out;
}

const char* compare_op(const std::string& name) {
    if (name == "eq") return "=";
    if (name == "neq") return "!=";
    if (name == "lt") return "<";
    if (name == "lte") return "<=";
    if (name == "gt") return ">";
    return ">=";
}

const char* arith_op(const std::string& name) {
    if (name == "add") return "+";
    if (name == "subtract") return "-";
    if (name == "multiply") return "*";
    if (name == "divide") return "/";
    return "%";
}

}  // namespace

std::string to_source(const NodePtr& n) {
    if (!n) return "";
    switch (n->kind) {
        case Kind::Const: return n->lit.to_string();
        case Kind::Ident: return n->name;
        case Kind::TupleRef: return n->name + "...";
        case Kind::WildcardVal: return "_";
        case Kind::WildcardTup: return "_...";
        case Kind::Union: return "{" + to_source(n->a) + "; " + to_source(n->b) + "}";
        case Kind::Product: return "(" + to_source(n->a) + ", " + to_source(n->b) + ")";
        case Kind::Where: return "(" + to_source(n->a) + " where " + to_source(n->b) + ")";
        case Kind::Abstract: {
            bool square = n->name == "[]";
            return std::string("{") + (square ? "[" : "(") + bindings_source(n->bindings) +
                   (square ? "]" : ")") + " : " + to_source(n->a) + "}";
        }
        case Kind::Apply: return "{" + to_source(n->a) + "}[" + args_source(n->args) + "]";
        case Kind::FullApply: return "{" + to_source(n->a) + "}(" + args_source(n->args) + ")";
        case Kind::Reduce: return "reduce[&{" + to_source(n->a) + "}, &{" + to_source(n->b) + "}]";
        case Kind::ReduceCheck:
            return "reduce(&{" + to_source(n->a) + "}, &{" + to_source(n->b) + "}, ?{" +
                   to_source(n->c) + "})";
        case Kind::Arith:
            return "(" + to_source(n->a) + " " + arith_op(n->name) + " " + to_source(n->b) + ")";
        case Kind::Neg: return "(- " + to_source(n->a) + ")";
        case Kind::DotJoin: return "(" + to_source(n->a) + " . " + to_source(n->b) + ")";
        case Kind::LeftOverride: return "(" + to_source(n->a) + " <++ " + to_source(n->b) + ")";
        case Kind::True_: return "{()}";
        case Kind::False_: return "{}";
        case Kind::And: return "(" + to_source(n->a) + " and " + to_source(n->b) + ")";
        case Kind::Or: return "(" + to_source(n->a) + " or " + to_source(n->b) + ")";
        case Kind::Not: return "(not " + to_source(n->a) + ")";
        case Kind::Implies: return "(" + to_source(n->a) + " implies " + to_source(n->b) + ")";
        case Kind::Iff: return "(" + to_source(n->a) + " iff " + to_source(n->b) + ")";
        case Kind::Xor: return "(" + to_source(n->a) + " xor " + to_source(n->b) + ")";
        case Kind::Compare:
            return "(" + to_source(n->a) + " " + compare_op(n->name) + " " + to_source(n->b) + ")";
        case Kind::Exists:
            return "exists((" + bindings_source(n->bindings) + ") | " + to_source(n->a) + ")";
        case Kind::Forall:
            return "forall((" + bindings_source(n->bindings) + ") | " + to_source(n->a) + ")";
    }
    return "?";
}

std::string to_source(const Program& p) {
    std::ostringstream os;
    for (const auto& d : p.defs) {
        os << "def " << d.name;
        if (!d.params.empty())
            os << (d.square ? "[" : "(") << bindings_source(d.params) << (d.square ? "]" : ")");
        os << " : " << to_source(d.body) << "\n";
    }
    for (const auto& c : p.ics) {
        os << "ic " << c.name << "(" << bindings_source(c.params) << ") requires "
           << to_source(c.body) << "\n";
    }
    return os.str();
}

}  // namespace rel::ast
