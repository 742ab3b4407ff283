#include "rel/render.hpp"

#include <sstream>
#include <vector>

#include "json.hpp"
#include "rel/database.hpp"

namespace rel {

namespace {

std::string cell_display(const Cell& c) {
    if (c.is_relation()) return c.relation()->to_string();
    return render_value(c.value());
}

std::string render_table(const std::vector<Tuple>& rows) {
    std::ostringstream out;
    // canonical_sort orders by arity first, so arity groups are
    // contiguous; compute column widths per group for alignment.
    size_t i = 0;
    bool first_group = true;
    while (i < rows.size()) {
        size_t j = i;
        while (j < rows.size() && rows[j].arity() == rows[i].arity()) ++j;
        if (!first_group) out << "\n";
        first_group = false;
        size_t arity = rows[i].arity();
        if (arity == 0) {
            for (size_t r = i; r < j; ++r) out << "()\n";
        } else {
            std::vector<size_t> width(arity, 0);
            for (size_t r = i; r < j; ++r)
                for (size_t c = 0; c < arity; ++c)
                    width[c] = std::max(width[c], cell_display(rows[r][c]).size());
            for (size_t r = i; r < j; ++r) {
                for (size_t c = 0; c < arity; ++c) {
                    std::string s = cell_display(rows[r][c]);
                    if (c + 1 < arity) s.resize(width[c] + 2, ' ');
                    out << s;
                }
                out << "\n";
            }
        }
        i = j;
    }
    return out.str();
}

std::string csv_field(const Cell& c) {
    std::string s = cell_display(c);
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

std::string render_csv(const std::vector<Tuple>& rows) {
    std::ostringstream out;
    for (const Tuple& t : rows) {
        for (size_t c = 0; c < t.arity(); ++c) {
            if (c) out << ",";
            out << csv_field(t[c]);
        }
        out << "\r\n";
    }
    return out.str();
}

std::string render_json(const std::vector<Tuple>& rows) {
    std::ostringstream out;
    out << "[";
    for (size_t r = 0; r < rows.size(); ++r) {
        out << (r ? ",\n " : "\n ") << tuple_to_line(rows[r]);
    }
    if (!rows.empty()) out << "\n";
    out << "]\n";
    return out.str();
}

}  // namespace

std::string render_value(const Value& v) {
    switch (v.kind()) {
        case Value::Kind::Int: return std::to_string(v.as_int());
        case Value::Kind::Float: return nlohmann::json(v.as_float()).dump();
        case Value::Kind::Str: return v.as_str();
        case Value::Kind::Bool: return v.as_bool() ? "true" : "false";
        case Value::Kind::Sym: return ":" + v.as_sym().name;
    }
    return "";
}

std::string render_relation(const RelationPtr& r, OutputFormat format) {
    std::vector<Tuple> rows = canonical_sort(r);
    switch (format) {
        case OutputFormat::Table: return render_table(rows);
        case OutputFormat::Csv: return render_csv(rows);
        case OutputFormat::Json: return render_json(rows);
    }
    return "";
}

}  // namespace rel
