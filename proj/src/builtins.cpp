#include "rel/builtins.hpp"

#include <cmath>

namespace rel {

namespace {

using Bound = std::vector<std::optional<Value>>;
using Rows = std::vector<std::vector<Value>>;

bool both_int(const Value& a, const Value& b) { return a.is_int() && b.is_int(); }

void require_numeric(const Value& v, const char* op, Span sp) {
    if (!v.is_numeric()) throw DomainError(std::string(op) + " requires numeric arguments", sp);
}

Value check_float(double d, const char* op, Span sp) {
    if (std::isnan(d)) throw DomainError(std::string(op) + " result is undefined", sp);
    return Value(d);
}

Value add_vals(const Value& a, const Value& b, Span sp) {
    require_numeric(a, "add", sp);
    require_numeric(b, "add", sp);
    if (both_int(a, b)) return Value(a.as_int() + b.as_int());
    return check_float(a.numeric() + b.numeric(), "add", sp);
}

Value sub_vals(const Value& a, const Value& b, Span sp) {
    require_numeric(a, "subtract", sp);
    require_numeric(b, "subtract", sp);
    if (both_int(a, b)) return Value(a.as_int() - b.as_int());
    return check_float(a.numeric() - b.numeric(), "subtract", sp);
}

// z = x + y with the forward sum re-emitted, so inverse patterns stay
// sound for floats: the caller's filter rejects candidates whose forward
// sum does not reproduce the bound z bit-exactly.
Rows add_complete(const std::string& p, const Bound& in, Span sp) {
    Value x, y;
    if (p == "bbf" || p == "bbb") {
        x = *in[0];
        y = *in[1];
    } else if (p == "bfb") {
        x = *in[0];
        y = sub_vals(*in[2], *in[0], sp);
    } else {  // fbb
        y = *in[1];
        x = sub_vals(*in[2], *in[1], sp);
    }
    return {{x, y, add_vals(x, y, sp)}};
}

Rows subtract_complete(const std::string& p, const Bound& in, Span sp) {
    Value x, y;
    if (p == "bbf" || p == "bbb") {
        x = *in[0];
        y = *in[1];
    } else if (p == "bfb") {
        x = *in[0];
        y = sub_vals(*in[0], *in[2], sp);
    } else {  // fbb
        y = *in[1];
        x = add_vals(*in[2], *in[1], sp);
    }
    return {{x, y, sub_vals(x, y, sp)}};
}

Rows multiply_complete(const std::string&, const Bound& in, Span sp) {
    const Value &a = *in[0], &b = *in[1];
    require_numeric(a, "multiply", sp);
    require_numeric(b, "multiply", sp);
    Value z = both_int(a, b) ? Value(a.as_int() * b.as_int())
                             : check_float(a.numeric() * b.numeric(), "multiply", sp);
    return {{a, b, z}};
}

Rows divide_complete(const std::string&, const Bound& in, Span sp) {
    const Value &a = *in[0], &b = *in[1];
    require_numeric(a, "divide", sp);
    require_numeric(b, "divide", sp);
    if (b.numeric() == 0.0) throw DomainError("division by zero", sp);
    return {{a, b, check_float(a.numeric() / b.numeric(), "divide", sp)}};
}

Rows modulo_complete(const std::string&, const Bound& in, Span sp) {
    const Value &a = *in[0], &b = *in[1];
    if (!a.is_int() || !b.is_int()) throw DomainError("modulo requires integers", sp);
    if (b.as_int() == 0) throw DomainError("modulo by zero", sp);
    return {{a, b, Value(a.as_int() % b.as_int())}};
}

Rows negate_complete(const std::string&, const Bound& in, Span sp) {
    const Value& a = *in[0];
    require_numeric(a, "negate", sp);
    Value z = a.is_int() ? Value(-a.as_int()) : Value(-a.as_float());
    return {{a, z}};
}

Rows log_complete(const std::string&, const Bound& in, Span sp) {
    const Value& a = *in[0];
    require_numeric(a, "log", sp);
    if (a.numeric() <= 0.0) throw DomainError("log of a non-positive number", sp);
    return {{a, Value(std::log(a.numeric()))}};
}

Rows eq_complete(const std::string& p, const Bound& in, Span) {
    Value v = p == "fb" ? *in[1] : *in[0];
    return {{v, v}};
}

Rows minmax_complete(bool want_min, const Bound& in, Span) {
    const Value &a = *in[0], &b = *in[1];
    int c = compare_values(a, b);
    Value z = (c <= 0) == want_min ? a : b;
    return {{a, b, z}};
}

Rows range_complete(const std::string& p, const Bound& in, Span sp) {
    for (int i = 0; i < 3; ++i)
        if (!(*in[i]).is_int()) throw DomainError("range bounds must be integers", sp);
    int64_t lo = (*in[0]).as_int(), hi = (*in[1]).as_int(), step = (*in[2]).as_int();
    if (step <= 0) throw DomainError("range step must be positive", sp);
    Rows out;
    if (p == "bbbb") {
        if (!(*in[3]).is_int()) return out;
        int64_t i = (*in[3]).as_int();
        if (i >= lo && i <= hi && (i - lo) % step == 0)
            out.push_back({*in[0], *in[1], *in[2], *in[3]});
        return out;
    }
    for (int64_t i = lo; i <= hi; i += step) out.push_back({*in[0], *in[1], *in[2], Value(i)});
    return out;
}

template <typename Pred>
Rows check2(Pred pred, const Bound& in) {
    if (pred(*in[0], *in[1])) return {{*in[0], *in[1]}};
    return {};
}

template <Value::Kind K>
Rows type_test(const Bound& in) {
    if ((*in[0]).kind() == K) return {{*in[0]}};
    return {};
}

struct Catalog {
    std::vector<std::unique_ptr<BuiltinDef>> defs;
    std::map<std::string, const BuiltinDef*> by_name;

    void install(std::string name, size_t arity, std::vector<std::string> patterns,
                 decltype(BuiltinDef::complete) fn, std::vector<std::string> aliases = {}) {
        auto d = std::make_unique<BuiltinDef>();
        d->name = name;
        d->arity = arity;
        d->patterns = std::move(patterns);
        d->complete = std::move(fn);
        by_name[name] = d.get();
        for (auto& a : aliases) by_name[a] = d.get();
        defs.push_back(std::move(d));
    }

    Catalog() {
        install("rel_primitive_add", 3, {"bbf", "bfb", "fbb", "bbb"}, add_complete, {"add"});
        install("rel_primitive_subtract", 3, {"bbf", "bfb", "fbb", "bbb"}, subtract_complete,
                {"subtract"});
        install("rel_primitive_multiply", 3, {"bbf", "bbb"}, multiply_complete, {"multiply"});
        install("rel_primitive_divide", 3, {"bbf", "bbb"}, divide_complete, {"divide"});
        install("rel_primitive_modulo", 3, {"bbf", "bbb"}, modulo_complete, {"modulo"});
        install("rel_primitive_log", 2, {"bf", "bb"}, log_complete, {"log"});
        install("negate", 2, {"bf", "bb"}, negate_complete);
        install("eq", 2, {"bf", "fb", "bb"}, eq_complete);
        install("neq", 2, {"bb"}, [](const std::string&, const Bound& in, Span) {
            return check2([](const Value& a, const Value& b) { return !(a == b); }, in);
        });
        install("lt", 2, {"bb"}, [](const std::string&, const Bound& in, Span) {
            return check2([](const Value& a, const Value& b) { return compare_values(a, b) < 0; },
                          in);
        });
        install("lte", 2, {"bb"}, [](const std::string&, const Bound& in, Span) {
            return check2([](const Value& a, const Value& b) { return compare_values(a, b) <= 0; },
                          in);
        });
        install("gt", 2, {"bb"}, [](const std::string&, const Bound& in, Span) {
            return check2([](const Value& a, const Value& b) { return compare_values(a, b) > 0; },
                          in);
        });
        install("gte", 2, {"bb"}, [](const std::string&, const Bound& in, Span) {
            return check2([](const Value& a, const Value& b) { return compare_values(a, b) >= 0; },
                          in);
        });
        install("minimum", 3, {"bbf", "bbb"}, [](const std::string&, const Bound& in, Span sp) {
            return minmax_complete(true, in, sp);
        });
        install("maximum", 3, {"bbf", "bbb"}, [](const std::string&, const Bound& in, Span sp) {
            return minmax_complete(false, in, sp);
        });
        install("Int", 1, {"b"}, [](const std::string&, const Bound& in, Span) {
            return type_test<Value::Kind::Int>(in);
        });
        install("Float", 1, {"b"}, [](const std::string&, const Bound& in, Span) {
            return type_test<Value::Kind::Float>(in);
        });
        install("String", 1, {"b"}, [](const std::string&, const Bound& in, Span) {
            return type_test<Value::Kind::Str>(in);
        });
        install("range", 4, {"bbbf", "bbbb"}, range_complete);
    }
};

const Catalog& catalog_instance() {
    static Catalog c;
    return c;
}

}  // namespace

bool BuiltinDef::supports(const std::string& pattern) const {
    for (const auto& p : patterns)
        if (p == pattern) return true;
    return false;
}

const std::map<std::string, const BuiltinDef*>& builtin_catalog() {
    return catalog_instance().by_name;
}

const BuiltinDef* find_builtin(const std::string& name) {
    const auto& m = builtin_catalog();
    auto it = m.find(name);
    return it == m.end() ? nullptr : it->second;
}

int compare_values(const Value& a, const Value& b) {
    if (a.is_numeric() && b.is_numeric()) {
        double x = a.numeric(), y = b.numeric();
        if (x < y) return -1;
        if (y < x) return 1;
        return 0;
    }
    if (a == b) return 0;
    return a < b ? -1 : 1;
}

}  // namespace rel
