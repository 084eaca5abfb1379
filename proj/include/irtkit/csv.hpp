#pragma once

// Minimal RFC 4180 reader/writer shared by every file format in the toolkit.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace irtkit::csv {

struct Row {
    std::size_t line = 0;  // 1-based line where the record starts
    std::vector<std::string> fields;
};

struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    /// Column index of `name`; throws ValidationError naming `source` if absent.
    std::size_t column(std::string_view name, std::string_view source) const;
};

/// Parses CSV text. The first record is the header. Blank lines are skipped.
/// Throws ValidationError with the line number on malformed quoting or on a
/// record whose field count differs from the header.
Table parse(std::string_view text, std::string_view source = "<input>");
Table read_file(const std::filesystem::path& path);

/// Requires the header to begin with exactly `expected` columns.
void expect_header(const Table& table, const std::vector<std::string>& expected,
                   std::string_view source);

std::string quote(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// 17 significant digits, so every double read back is bit-identical.
std::string format_double(double value);

double parse_double(std::string_view text, std::size_t line, std::string_view source);
long long parse_integer(std::string_view text, std::size_t line, std::string_view source);

std::string trim(std::string_view s);

}  // namespace irtkit::csv
