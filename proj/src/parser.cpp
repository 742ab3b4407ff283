#include "rel/parser.hpp"

#include "rel/token.hpp"

namespace rel {

using ast::Node;
using ast::NodePtr;

namespace {

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    ast::Program program() {
        ast::Program prog;
        while (!at(Tok::End)) {
            if (at(Tok::KwDef)) {
                prog.defs.push_back(def());
            } else if (at(Tok::KwIc)) {
                prog.ics.push_back(constraint());
            } else {
                fail("expected 'def' or 'ic'");
            }
        }
        return prog;
    }

    NodePtr expression_only() {
        NodePtr e = expr();
        expect(Tok::End);
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg + ", found " + token_name(peek().kind), peek().span);
    }

    const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    bool at(Tok kind) const { return peek().kind == kind; }
    const Token& advance() { return toks_[pos_++]; }
    bool eat(Tok kind) {
        if (!at(kind)) return false;
        ++pos_;
        return true;
    }
    const Token& expect(Tok kind) {
        if (!at(kind)) fail(std::string("expected ") + token_name(kind));
        return advance();
    }

    // A ':' glued to a following name lexes as a symbol literal; when the
    // grammar expects ':' here, split the token back into ':' + identifier.
    void expect_colon() {
        if (eat(Tok::Colon)) return;
        if (at(Tok::SymLit)) {
            Token& t = toks_[pos_];
            t.kind = Tok::Ident;
            return;
        }
        fail("expected ':'");
    }

    // ---- declarations ----

    std::string def_name() {
        if (at(Tok::Ident)) return advance().text;
        if (eat(Tok::LParen)) {
            std::string op;
            switch (peek().kind) {
                case Tok::Plus: op = "+"; break;
                case Tok::Minus: op = "-"; break;
                case Tok::Star: op = "*"; break;
                case Tok::Slash: op = "/"; break;
                case Tok::Percent: op = "%"; break;
                default: fail("expected operator name");
            }
            advance();
            expect(Tok::RParen);
            return "(" + op + ")";
        }
        fail("expected relation name");
    }

    ast::RelDef def() {
        Span sp = peek().span;
        expect(Tok::KwDef);
        ast::RelDef d;
        d.span = sp;
        d.name = def_name();
        if (at(Tok::LParen) || at(Tok::LBracket)) {
            Tok open = advance().kind;
            d.square = open == Tok::LBracket;
            d.params = binding_list(open == Tok::LParen ? Tok::RParen : Tok::RBracket);
            expect_colon();
            d.body = expr();
        } else if (eat(Tok::LBrace)) {
            d.body = brace_tail(sp);
        } else {
            expect_colon();
            d.body = expr();
        }
        return d;
    }

    ast::Constraint constraint() {
        Span sp = peek().span;
        expect(Tok::KwIc);
        ast::Constraint c;
        c.span = sp;
        c.name = expect(Tok::Ident).text;
        expect(Tok::LParen);
        if (!at(Tok::RParen)) c.params = binding_list(Tok::RParen);
        else advance();
        expect(Tok::KwRequires);
        c.body = expr();
        return c;
    }

    std::vector<ast::Binding> binding_list(Tok close) {
        std::vector<ast::Binding> out;
        if (eat(close)) return out;
        for (;;) {
            out.push_back(binding());
            if (eat(Tok::Comma)) continue;
            expect(close);
            return out;
        }
    }

    ast::Binding binding() {
        ast::Binding b;
        b.span = peek().span;
        switch (peek().kind) {
            case Tok::Ident:
                b.name = advance().text;
                if (eat(Tok::KwIn)) {
                    b.kind = ast::Binding::Kind::ValueIn;
                    b.range = ast::make_ident(expect(Tok::Ident).text, peek().span);
                } else {
                    b.kind = ast::Binding::Kind::Value;
                }
                return b;
            case Tok::IdentTuple:
                b.kind = ast::Binding::Kind::TupleVar;
                b.name = advance().text;
                return b;
            case Tok::LBrace:
                advance();
                b.kind = ast::Binding::Kind::RelVar;
                b.name = expect(Tok::Ident).text;
                expect(Tok::RBrace);
                return b;
            case Tok::Int:
                b.kind = ast::Binding::Kind::Literal;
                b.lit = Value(advance().int_val);
                return b;
            case Tok::Float:
                b.kind = ast::Binding::Kind::Literal;
                b.lit = Value(advance().float_val);
                return b;
            case Tok::Str:
                b.kind = ast::Binding::Kind::Literal;
                b.lit = Value(advance().text);
                return b;
            case Tok::SymLit:
                b.kind = ast::Binding::Kind::Literal;
                b.lit = Value(Symbol{advance().text});
                return b;
            case Tok::KwTrue:
            case Tok::KwFalse:
                b.kind = ast::Binding::Kind::Literal;
                b.lit = Value(advance().kind == Tok::KwTrue);
                return b;
            default:
                fail("expected binding");
        }
    }

    // ---- expressions, loosest first ----

    // Loosest level: ',' builds a product. Contexts where ',' separates
    // list items (arguments, bindings) parse one level below.
    NodePtr expr() {
        NodePtr e = where_level();
        while (at(Tok::Comma)) {
            Span sp = advance().span;
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::Product;
            n->span = sp;
            n->a = e;
            n->b = where_level();
            e = n;
        }
        return e;
    }

    NodePtr where_level() {
        NodePtr e = implies_level();
        while (at(Tok::KwWhere)) {
            Span sp = advance().span;
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::Where;
            n->span = sp;
            n->a = e;
            n->b = implies_level();
            e = n;
        }
        return e;
    }

    NodePtr implies_level() {
        NodePtr e = or_level();
        for (;;) {
            ast::Kind k;
            if (at(Tok::KwImplies)) k = ast::Kind::Implies;
            else if (at(Tok::KwIff)) k = ast::Kind::Iff;
            else if (at(Tok::KwXor)) k = ast::Kind::Xor;
            else return e;
            Span sp = advance().span;
            auto n = std::make_shared<Node>();
            n->kind = k;
            n->span = sp;
            n->a = e;
            n->b = or_level();
            e = n;
        }
    }

    NodePtr or_level() {
        NodePtr e = and_level();
        while (at(Tok::KwOr)) {
            Span sp = advance().span;
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::Or;
            n->span = sp;
            n->a = e;
            n->b = and_level();
            e = n;
        }
        return e;
    }

    NodePtr and_level() {
        NodePtr e = not_level();
        while (at(Tok::KwAnd)) {
            Span sp = advance().span;
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::And;
            n->span = sp;
            n->a = e;
            n->b = not_level();
            e = n;
        }
        return e;
    }

    NodePtr not_level() {
        if (at(Tok::KwNot)) {
            Span sp = advance().span;
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::Not;
            n->span = sp;
            n->a = not_level();
            return n;
        }
        return compare_level();
    }

    NodePtr compare_level() {
        NodePtr e = override_level();
        const char* op = nullptr;
        switch (peek().kind) {
            case Tok::Eq: op = "eq"; break;
            case Tok::Neq: op = "neq"; break;
            case Tok::Lt: op = "lt"; break;
            case Tok::Le: op = "lte"; break;
            case Tok::Gt: op = "gt"; break;
            case Tok::Ge: op = "gte"; break;
            default: return e;
        }
        Span sp = advance().span;
        auto n = std::make_shared<Node>();
        n->kind = ast::Kind::Compare;
        n->span = sp;
        n->name = op;
        n->a = e;
        n->b = override_level();
        return n;
    }

    NodePtr override_level() {
        NodePtr e = add_level();
        while (at(Tok::LeftOverride)) {
            Span sp = advance().span;
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::LeftOverride;
            n->span = sp;
            n->a = e;
            n->b = add_level();
            e = n;
        }
        return e;
    }

    NodePtr add_level() {
        NodePtr e = mul_level();
        for (;;) {
            const char* op = nullptr;
            if (at(Tok::Plus)) op = "add";
            else if (at(Tok::Minus)) op = "subtract";
            else return e;
            Span sp = advance().span;
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::Arith;
            n->span = sp;
            n->name = op;
            n->a = e;
            n->b = mul_level();
            e = n;
        }
    }

    NodePtr mul_level() {
        NodePtr e = unary_level();
        for (;;) {
            const char* op = nullptr;
            if (at(Tok::Star)) op = "multiply";
            else if (at(Tok::Slash)) op = "divide";
            else if (at(Tok::Percent)) op = "modulo";
            else return e;
            Span sp = advance().span;
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::Arith;
            n->span = sp;
            n->name = op;
            n->a = e;
            n->b = unary_level();
            e = n;
        }
    }

    NodePtr unary_level() {
        if (at(Tok::Minus)) {
            Span sp = advance().span;
            // Fold '-' into numeric literals so -5 is a constant.
            if (at(Tok::Int)) return ast::make_const(Value(-advance().int_val), sp);
            if (at(Tok::Float)) return ast::make_const(Value(-advance().float_val), sp);
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::Neg;
            n->span = sp;
            n->a = unary_level();
            return n;
        }
        return dot_level();
    }

    NodePtr dot_level() {
        NodePtr e = postfix_level();
        while (at(Tok::Dot)) {
            Span sp = advance().span;
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::DotJoin;
            n->span = sp;
            n->a = e;
            n->b = postfix_level();
            e = n;
        }
        return e;
    }

    NodePtr postfix_level() {
        NodePtr e = primary();
        for (;;) {
            if (at(Tok::LBracket)) {
                Span sp = advance().span;
                auto n = std::make_shared<Node>();
                n->kind = ast::Kind::Apply;
                n->span = sp;
                n->a = e;
                n->args = arg_list(Tok::RBracket);
                e = n;
            } else if (at(Tok::LParen)) {
                Span sp = advance().span;
                auto n = std::make_shared<Node>();
                n->kind = ast::Kind::FullApply;
                n->span = sp;
                n->a = e;
                n->args = arg_list(Tok::RParen);
                e = n;
            } else {
                return e;
            }
        }
    }

    std::vector<ast::Arg> arg_list(Tok close) {
        std::vector<ast::Arg> out;
        if (eat(close)) return out;
        for (;;) {
            out.push_back(argument());
            if (eat(Tok::Comma)) continue;
            expect(close);
            return out;
        }
    }

    ast::Arg argument() {
        ast::Arg a;
        a.span = peek().span;
        switch (peek().kind) {
            case Tok::Underscore:
                advance();
                a.kind = ast::Arg::Kind::Wildcard;
                return a;
            case Tok::UnderscoreTuple:
                advance();
                a.kind = ast::Arg::Kind::WildcardTuple;
                return a;
            case Tok::Question:
                advance();
                expect(Tok::LBrace);
                a.kind = ast::Arg::Kind::First;
                a.expr = brace_tail(a.span);
                return a;
            case Tok::Amp:
                advance();
                expect(Tok::LBrace);
                a.kind = ast::Arg::Kind::Second;
                a.expr = brace_tail(a.span);
                return a;
            default:
                break;
        }
        if (at(Tok::IdentTuple)) {
            // A tuple variable argument, unless it is a longer expression
            // such as x... suffixed application (not in the grammar).
            a.kind = ast::Arg::Kind::TupleVar;
            a.name = advance().text;
            return a;
        }
        a.kind = ast::Arg::Kind::Unannotated;
        a.expr = where_level();
        return a;
    }

    // Body of a '{...}' whose opening brace is already consumed.
    NodePtr brace_tail(Span sp) {
        if (eat(Tok::RBrace)) {
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::False_;
            n->span = sp;
            return n;
        }
        if (at(Tok::LParen) && peek(1).kind == Tok::RParen && peek(2).kind == Tok::RBrace) {
            advance();
            advance();
            advance();
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::True_;
            n->span = sp;
            return n;
        }
        NodePtr e = expr();
        while (at(Tok::Semicolon)) {
            Span usp = advance().span;
            auto n = std::make_shared<Node>();
            n->kind = ast::Kind::Union;
            n->span = usp;
            n->a = e;
            n->b = expr();
            e = n;
        }
        expect(Tok::RBrace);
        return e;
    }

    // True when '(' at the current position opens an abstraction binding
    // list, i.e. the matching ')' is directly followed by ':'.
    bool paren_starts_abstraction() const {
        size_t i = pos_;
        int depth = 0;
        while (i < toks_.size()) {
            Tok k = toks_[i].kind;
            if (k == Tok::LParen || k == Tok::LBracket || k == Tok::LBrace) ++depth;
            if (k == Tok::RParen || k == Tok::RBracket || k == Tok::RBrace) {
                --depth;
                if (depth == 0) {
                    Tok next = i + 1 < toks_.size() ? toks_[i + 1].kind : Tok::End;
                    return next == Tok::Colon || next == Tok::SymLit;
                }
            }
            if (k == Tok::End) return false;
            ++i;
        }
        return false;
    }

    NodePtr abstraction(Tok open) {
        Span sp = peek().span;
        expect(open);
        auto n = std::make_shared<Node>();
        n->kind = ast::Kind::Abstract;
        n->span = sp;
        n->name = open == Tok::LBracket ? "[]" : "()";
        n->bindings = binding_list(open == Tok::LBracket ? Tok::RBracket : Tok::RParen);
        expect_colon();
        n->a = expr();
        return n;
    }

    NodePtr quantifier(ast::Kind kind) {
        Span sp = advance().span;  // exists / forall
        auto n = std::make_shared<Node>();
        n->kind = kind;
        n->span = sp;
        expect(Tok::LParen);
        expect(Tok::LParen);
        n->bindings = binding_list(Tok::RParen);
        expect(Tok::Pipe);
        n->a = expr();
        expect(Tok::RParen);
        return n;
    }

    NodePtr reduce_form() {
        Span sp = advance().span;  // reduce
        bool square = at(Tok::LBracket);
        if (!square && !at(Tok::LParen)) fail("expected '[' or '(' after 'reduce'");
        advance();
        std::vector<ast::Arg> args = arg_list(square ? Tok::RBracket : Tok::RParen);
        auto arg_expr = [&](const ast::Arg& a) -> NodePtr {
            if (a.expr) return a.expr;
            if (a.kind == ast::Arg::Kind::TupleVar) {
                auto n = std::make_shared<Node>();
                n->kind = ast::Kind::TupleRef;
                n->span = a.span;
                n->name = a.name;
                return n;
            }
            throw ParseError("reduce arguments must be expressions", a.span);
        };
        auto n = std::make_shared<Node>();
        n->span = sp;
        if (square) {
            if (args.size() != 2) throw ParseError("reduce[...] takes two arguments", sp);
            n->kind = ast::Kind::Reduce;
            n->a = arg_expr(args[0]);
            n->b = arg_expr(args[1]);
        } else {
            if (args.size() != 3) throw ParseError("reduce(...) takes three arguments", sp);
            n->kind = ast::Kind::ReduceCheck;
            n->a = arg_expr(args[0]);
            n->b = arg_expr(args[1]);
            n->c = arg_expr(args[2]);
        }
        return n;
    }

    NodePtr primary() {
        Span sp = peek().span;
        switch (peek().kind) {
            case Tok::Int: return ast::make_const(Value(advance().int_val), sp);
            case Tok::Float: return ast::make_const(Value(advance().float_val), sp);
            case Tok::Str: return ast::make_const(Value(advance().text), sp);
            case Tok::SymLit: return ast::make_const(Value(Symbol{advance().text}), sp);
            case Tok::KwTrue: advance(); return ast::make_const(Value(true), sp);
            case Tok::KwFalse: advance(); return ast::make_const(Value(false), sp);
            case Tok::Ident: return ast::make_ident(advance().text, sp);
            case Tok::IdentTuple: {
                auto n = std::make_shared<Node>();
                n->kind = ast::Kind::TupleRef;
                n->span = sp;
                n->name = advance().text;
                return n;
            }
            case Tok::Underscore: {
                advance();
                auto n = std::make_shared<Node>();
                n->kind = ast::Kind::WildcardVal;
                n->span = sp;
                return n;
            }
            case Tok::UnderscoreTuple: {
                advance();
                auto n = std::make_shared<Node>();
                n->kind = ast::Kind::WildcardTup;
                n->span = sp;
                return n;
            }
            case Tok::KwExists: return quantifier(ast::Kind::Exists);
            case Tok::KwForall: return quantifier(ast::Kind::Forall);
            case Tok::KwReduce: return reduce_form();
            case Tok::LBrace: {
                advance();
                return brace_tail(sp);
            }
            case Tok::LBracket: return abstraction(Tok::LBracket);
            case Tok::LParen: {
                if (paren_starts_abstraction()) return abstraction(Tok::LParen);
                advance();
                if (eat(Tok::RParen)) {
                    auto n = std::make_shared<Node>();
                    n->kind = ast::Kind::True_;
                    n->span = sp;
                    return n;
                }
                // Operator references: (+), (-), (*), (/), (%).
                if (peek(1).kind == Tok::RParen) {
                    const char* op = nullptr;
                    switch (peek().kind) {
                        case Tok::Plus: op = "(+)"; break;
                        case Tok::Minus: op = "(-)"; break;
                        case Tok::Star: op = "(*)"; break;
                        case Tok::Slash: op = "(/)"; break;
                        case Tok::Percent: op = "(%)"; break;
                        default: break;
                    }
                    if (op) {
                        advance();
                        advance();
                        return ast::make_ident(op, sp);
                    }
                }
                NodePtr e = expr();
                while (at(Tok::Comma) || at(Tok::Semicolon)) {
                    bool prod = at(Tok::Comma);
                    Span psp = advance().span;
                    auto n = std::make_shared<Node>();
                    n->kind = prod ? ast::Kind::Product : ast::Kind::Union;
                    n->span = psp;
                    n->a = e;
                    n->b = expr();
                    e = n;
                }
                expect(Tok::RParen);
                return e;
            }
            default:
                fail("expected expression");
        }
    }

    std::vector<Token> toks_;
    size_t pos_ = 0;
};

}  // namespace

ast::Program parse_program(const std::string& source) {
    return Parser(tokenize(source)).program();
}

ast::NodePtr parse_expression(const std::string& source) {
    return Parser(tokenize(source)).expression_only();
}

}  // namespace rel
