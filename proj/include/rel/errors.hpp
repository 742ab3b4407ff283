#pragma once

#include <stdexcept>
#include <string>

namespace rel {

struct Span {
    int line = 0;
    int column = 0;
    bool valid() const { return line > 0; }
    std::string to_string() const { return std::to_string(line) + ":" + std::to_string(column); }
};

class RelError : public std::runtime_error {
public:
    RelError(std::string kind, std::string message, Span span = {})
        : std::runtime_error(span.valid() ? kind + " at " + span.to_string() + ": " + message
                                          : kind + ": " + message),
          kind_(std::move(kind)),
          message_(std::move(message)),
          span_(span) {}

    const std::string& kind() const { return kind_; }
    const std::string& message() const { return message_; }
    Span span() const { return span_; }

private:
    std::string kind_;
    std::string message_;
    Span span_;
};

#define REL_ERROR_KIND(NAME)                                        \
    class NAME : public RelError {                                  \
    public:                                                         \
        explicit NAME(std::string message, Span span = {})          \
            : RelError(#NAME, std::move(message), span) {}          \
    }

REL_ERROR_KIND(LexError);
REL_ERROR_KIND(ParseError);
REL_ERROR_KIND(InfiniteResult);
REL_ERROR_KIND(NotEnumerable);
REL_ERROR_KIND(UnboundIdentifier);
REL_ERROR_KIND(AmbiguousApplication);
REL_ERROR_KIND(ArityMismatch);
REL_ERROR_KIND(UnsafePlan);
REL_ERROR_KIND(UnsafeConstraint);
REL_ERROR_KIND(NotAFunction);
REL_ERROR_KIND(DomainError);
REL_ERROR_KIND(NoFixpoint);
REL_ERROR_KIND(StdlibLoadError);
REL_ERROR_KIND(CorruptDatabase);
REL_ERROR_KIND(GnfViolation);

#undef REL_ERROR_KIND

}  // namespace rel
