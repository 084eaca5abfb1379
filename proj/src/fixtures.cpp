#include "irtkit/fixtures.hpp"

#include "irtkit/annotations.hpp"
#include "irtkit/csv.hpp"

namespace irtkit {

std::vector<FixtureItem> read_nli_fixture(const std::filesystem::path& path) {
    const auto table = csv::read_file(path);
    const auto source = path.string();
    csv::expect_header(table, {"item_id", "premise", "hypothesis", "gold_label", "b"}, source);
    std::vector<FixtureItem> out;
    for (const auto& row : table.rows) {
        out.push_back({csv::trim(row.fields[0]), row.fields[1] + " / " + row.fields[2], normalize_label(row.fields[3]),
                       csv::parse_double(row.fields[4], row.line, source)});
    }
    return out;
}

std::vector<FixtureItem> read_sa_fixture(const std::filesystem::path& path) {
    const auto table = csv::read_file(path);
    const auto source = path.string();
    csv::expect_header(table, {"item_id", "phrase", "gold_label", "b"}, source);
    std::vector<FixtureItem> out;
    for (const auto& row : table.rows) {
        out.push_back({csv::trim(row.fields[0]), row.fields[1], normalize_label(row.fields[2]),
                       csv::parse_double(row.fields[3], row.line, source)});
    }
    return out;
}

std::vector<ItemDifficulty> fixture_difficulties(const std::vector<FixtureItem>& items) {
    std::vector<ItemDifficulty> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back({item.item_id, item.b});
    return out;
}

}  // namespace irtkit
