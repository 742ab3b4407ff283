#pragma once

#include <string>
#include <vector>

#include "rel/errors.hpp"
#include "rel/value.hpp"

namespace rel {

enum class Tok {
    // keywords
    KwDef, KwWhere, KwAnd, KwOr, KwNot, KwExists, KwForall, KwIn, KwReduce,
    KwIc, KwRequires, KwImplies, KwIff, KwXor, KwTrue, KwFalse,
    // names and literals
    Ident, IdentTuple,  // x and x...
    Int, Float, Str, SymLit,
    // punctuation
    LBrace, RBrace, LBracket, RBracket, LParen, RParen,
    Comma, Semicolon, Colon, Pipe, Underscore, UnderscoreTuple,
    Question, Amp,
    // operators
    Plus, Minus, Star, Slash, Percent,
    Eq, Neq, Lt, Le, Gt, Ge, LeftOverride, Dot,
    End,
};

struct Token {
    Tok kind;
    std::string text;   // identifier / symbol / string payload
    int64_t int_val = 0;
    double float_val = 0.0;
    Span span;
};

const char* token_name(Tok kind);

// Splits UTF-8 source into tokens; '//' comments run to end of line.
std::vector<Token> tokenize(const std::string& source);

}  // namespace rel
