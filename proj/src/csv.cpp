#include "irtkit/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "irtkit/error.hpp"

namespace irtkit::csv {

namespace {

std::string where(std::string_view source, std::size_t line) {
    return std::string(source) + ":" + std::to_string(line) + ": ";
}

}  // namespace

std::size_t Table::column(std::string_view name, std::string_view source) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ValidationError(std::string(source) + ": missing column '" + std::string(name) + "'");
}

Table parse(std::string_view text, std::string_view source) {
    Table table;
    std::vector<std::string> fields;
    std::string field;
    std::size_t line = 1;
    std::size_t record_line = 1;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool record_has_content = false;
    bool have_header = false;

    auto finish_record = [&] {
        fields.push_back(std::move(field));
        field.clear();
        const bool blank = fields.size() == 1 && fields[0].empty() && !field_was_quoted;
        if (!blank) {
            if (!have_header) {
                table.header = std::move(fields);
                for (auto& h : table.header) h = trim(h);
                // Tolerate a UTF-8 byte order mark.
                if (!table.header.empty() && table.header[0].rfind("\xEF\xBB\xBF", 0) == 0) {
                    table.header[0].erase(0, 3);
                }
                have_header = true;
            } else {
                if (fields.size() != table.header.size()) {
                    throw ValidationError(where(source, record_line) + "expected " +
                                          std::to_string(table.header.size()) + " fields, found " +
                                          std::to_string(fields.size()));
                }
                table.rows.push_back(Row{record_line, std::move(fields)});
            }
        }
        fields.clear();
        field_was_quoted = false;
        record_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                if (!field.empty()) {
                    throw ValidationError(where(source, line) + "unexpected quote inside field");
                }
                in_quotes = true;
                field_was_quoted = true;
                record_has_content = true;
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                record_has_content = true;
                break;
            case '\r':
                break;
            case '\n':
                finish_record();
                ++line;
                record_line = line;
                break;
            default:
                field.push_back(ch);
                record_has_content = true;
        }
    }
    if (in_quotes) throw ValidationError(where(source, record_line) + "unterminated quoted field");
    if (record_has_content || !field.empty() || !fields.empty()) finish_record();
    if (!have_header) throw ValidationError(std::string(source) + ": empty CSV file");
    return table;
}

Table read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.string());
}

void expect_header(const Table& table, const std::vector<std::string>& expected,
                   std::string_view source) {
    bool ok = table.header.size() >= expected.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i) ok = table.header[i] == expected[i];
    if (!ok) {
        std::string want;
        for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
        throw ValidationError(std::string(source) + ":1: expected header '" + want + "'");
    }
}

std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << quote(fields[i]);
    }
    out << '\n';
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

double parse_double(std::string_view text, std::size_t line, std::string_view source) {
    const std::string s = trim(text);
    if (s.empty()) throw ValidationError(where(source, line) + "empty numeric field");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    // Underflow (ERANGE with a subnormal or zero result) is accepted; overflow is not finite.
    if (end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw ValidationError(where(source, line) + "not a finite number: '" + s + "'");
    }
    return v;
}

long long parse_integer(std::string_view text, std::size_t line, std::string_view source) {
    const std::string s = trim(text);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        throw ValidationError(where(source, line) + "not an integer: '" + s + "'");
    }
    return v;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace irtkit::csv
