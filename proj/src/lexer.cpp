#include <cctype>
#include <charconv>
#include <map>

#include "rel/token.hpp"

namespace rel {

namespace {

const std::map<std::string, Tok, std::less<>> kKeywords = {
    {"def", Tok::KwDef},       {"where", Tok::KwWhere},   {"and", Tok::KwAnd},
    {"or", Tok::KwOr},         {"not", Tok::KwNot},       {"exists", Tok::KwExists},
    {"forall", Tok::KwForall}, {"in", Tok::KwIn},         {"reduce", Tok::KwReduce},
    {"ic", Tok::KwIc},         {"requires", Tok::KwRequires}, {"implies", Tok::KwImplies},
    {"iff", Tok::KwIff},       {"xor", Tok::KwXor},       {"true", Tok::KwTrue},
    {"false", Tok::KwFalse},
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_ws();
            Span sp = span();
            if (at_end()) {
                out.push_back({Tok::End, "", 0, 0, sp});
                return out;
            }
            char c = peek();
            if (ident_start(c)) {
                out.push_back(lex_word(sp));
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                out.push_back(lex_number(sp));
            } else if (c == '"') {
                out.push_back(lex_string(sp));
            } else {
                out.push_back(lex_punct(sp));
            }
        }
    }

private:
    bool at_end() const { return pos_ >= src_.size(); }
    char peek(size_t k = 0) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }
    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }
    Span span() const { return {line_, col_}; }

    void skip_ws() {
        for (;;) {
            while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
            if (peek() == '/' && peek(1) == '/') {
                while (!at_end() && peek() != '\n') advance();
                continue;
            }
            return;
        }
    }

    bool eat_ellipsis() {
        if (peek() == '.' && peek(1) == '.' && peek(2) == '.') {
            advance();
            advance();
            advance();
            return true;
        }
        return false;
    }

    Token lex_word(Span sp) {
        std::string w;
        while (!at_end() && ident_char(peek())) w += advance();
        if (w == "_") {
            if (eat_ellipsis()) return {Tok::UnderscoreTuple, "_", 0, 0, sp};
            return {Tok::Underscore, "_", 0, 0, sp};
        }
        if (eat_ellipsis()) return {Tok::IdentTuple, w, 0, 0, sp};
        if (auto it = kKeywords.find(w); it != kKeywords.end()) return {it->second, w, 0, 0, sp};
        return {Tok::Ident, w, 0, 0, sp};
    }

    Token lex_number(Span sp) {
        std::string num;
        while (std::isdigit(static_cast<unsigned char>(peek()))) num += advance();
        bool is_float = false;
        // A '.' starts a fraction only when followed by a digit, so that
        // "1..2" or "R.1" stay unambiguous.
        if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
            is_float = true;
            num += advance();
            while (std::isdigit(static_cast<unsigned char>(peek()))) num += advance();
        }
        if (peek() == 'e' || peek() == 'E') {
            is_float = true;
            num += advance();
            if (peek() == '+' || peek() == '-') num += advance();
            if (!std::isdigit(static_cast<unsigned char>(peek())))
                throw LexError("malformed number '" + num + "'", sp);
            while (std::isdigit(static_cast<unsigned char>(peek()))) num += advance();
        }
        Token t{is_float ? Tok::Float : Tok::Int, num, 0, 0, sp};
        if (is_float) {
            auto res = std::from_chars(num.data(), num.data() + num.size(), t.float_val);
            if (res.ec != std::errc{}) throw LexError("malformed number '" + num + "'", sp);
        } else {
            auto res = std::from_chars(num.data(), num.data() + num.size(), t.int_val);
            if (res.ec != std::errc{}) throw LexError("integer literal out of range '" + num + "'", sp);
        }
        return t;
    }

    Token lex_string(Span sp) {
        advance();  // opening quote
        std::string s;
        for (;;) {
            if (at_end() || peek() == '\n') throw LexError("unterminated string", sp);
            char c = advance();
            if (c == '"') break;
            if (c == '\\') {
                if (at_end()) throw LexError("unterminated string", sp);
                char e = advance();
                switch (e) {
                    case 'n': s += '\n'; break;
                    case 't': s += '\t'; break;
                    case '"': s += '"'; break;
                    case '\\': s += '\\'; break;
                    default: throw LexError(std::string("unknown escape '\\") + e + "'", sp);
                }
            } else {
                s += c;
            }
        }
        return {Tok::Str, s, 0, 0, sp};
    }

    Token lex_punct(Span sp) {
        char c = advance();
        switch (c) {
            case '{': return {Tok::LBrace, "{", 0, 0, sp};
            case '}': return {Tok::RBrace, "}", 0, 0, sp};
            case '[': return {Tok::LBracket, "[", 0, 0, sp};
            case ']': return {Tok::RBracket, "]", 0, 0, sp};
            case '(': return {Tok::LParen, "(", 0, 0, sp};
            case ')': return {Tok::RParen, ")", 0, 0, sp};
            case ',': return {Tok::Comma, ",", 0, 0, sp};
            case ';': return {Tok::Semicolon, ";", 0, 0, sp};
            case '|': return {Tok::Pipe, "|", 0, 0, sp};
            case '?': return {Tok::Question, "?", 0, 0, sp};
            case '&': return {Tok::Amp, "&", 0, 0, sp};
            case '+': return {Tok::Plus, "+", 0, 0, sp};
            case '-': return {Tok::Minus, "-", 0, 0, sp};
            case '*': return {Tok::Star, "*", 0, 0, sp};
            case '/': return {Tok::Slash, "/", 0, 0, sp};
            case '%': return {Tok::Percent, "%", 0, 0, sp};
            case '=': return {Tok::Eq, "=", 0, 0, sp};
            case '.':
                if (peek() == '.' && peek(1) == '.')
                    throw LexError("unexpected '...' outside an identifier", sp);
                return {Tok::Dot, ".", 0, 0, sp};
            case ':': {
                // ':' glued to a name is a relation-name symbol literal.
                if (ident_start(peek())) {
                    std::string w;
                    while (!at_end() && ident_char(peek())) w += advance();
                    return {Tok::SymLit, w, 0, 0, sp};
                }
                return {Tok::Colon, ":", 0, 0, sp};
            }
            case '!':
                if (peek() == '=') {
                    advance();
                    return {Tok::Neq, "!=", 0, 0, sp};
                }
                throw LexError("unexpected '!'", sp);
            case '<':
                if (peek() == '=') {
                    advance();
                    return {Tok::Le, "<=", 0, 0, sp};
                }
                if (peek() == '+' && peek(1) == '+') {
                    advance();
                    advance();
                    return {Tok::LeftOverride, "<++", 0, 0, sp};
                }
                return {Tok::Lt, "<", 0, 0, sp};
            case '>':
                if (peek() == '=') {
                    advance();
                    return {Tok::Ge, ">=", 0, 0, sp};
                }
                return {Tok::Gt, ">", 0, 0, sp};
        }
        throw LexError(std::string("unexpected character '") + c + "'", sp);
    }

    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace

const char* token_name(Tok kind) {
    switch (kind) {
        case Tok::KwDef: return "'def'";
        case Tok::KwWhere: return "'where'";
        case Tok::KwAnd: return "'and'";
        case Tok::KwOr: return "'or'";
        case Tok::KwNot: return "'not'";
        case Tok::KwExists: return "'exists'";
        case Tok::KwForall: return "'forall'";
        case Tok::KwIn: return "'in'";
        case Tok::KwReduce: return "'reduce'";
        case Tok::KwIc: return "'ic'";
        case Tok::KwRequires: return "'requires'";
        case Tok::KwImplies: return "'implies'";
        case Tok::KwIff: return "'iff'";
        case Tok::KwXor: return "'xor'";
        case Tok::KwTrue: return "'true'";
        case Tok::KwFalse: return "'false'";
        case Tok::Ident: return "identifier";
        case Tok::IdentTuple: return "tuple variable";
        case Tok::Int: return "integer";
        case Tok::Float: return "float";
        case Tok::Str: return "string";
        case Tok::SymLit: return "symbol";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::Comma: return "','";
        case Tok::Semicolon: return "';'";
        case Tok::Colon: return "':'";
        case Tok::Pipe: return "'|'";
        case Tok::Underscore: return "'_'";
        case Tok::UnderscoreTuple: return "'_...'";
        case Tok::Question: return "'?'";
        case Tok::Amp: return "'&'";
        case Tok::Plus: return "'+'";
        case Tok::Minus: return "'-'";
        case Tok::Star: return "'*'";
        case Tok::Slash: return "'/'";
        case Tok::Percent: return "'%'";
        case Tok::Eq: return "'='";
        case Tok::Neq: return "'!='";
        case Tok::Lt: return "'<'";
        case Tok::Le: return "'<='";
        case Tok::Gt: return "'>'";
        case Tok::Ge: return "'>='";
        case Tok::LeftOverride: return "'<++'";
        case Tok::Dot: return "'.'";
        case Tok::End: return "end of input";
    }
    return "?";
}

std::vector<Token> tokenize(const std::string& source) { return Lexer(source).run(); }

}  // namespace rel
