#include "irtkit/curves.hpp"

#include <ostream>
#include <unordered_set>

#include "irtkit/csv.hpp"
#include "irtkit/error.hpp"
#include "irtkit/io.hpp"

namespace irtkit {

void LearningCurveTable::write_csv(std::ostream& out) const {
    out << "model_name,training_size,item_id,correct\n";
    for (const auto& r : rows) {
        csv::write_row(out, {r.model_name, std::to_string(r.training_size), r.item_id, r.correct ? "1" : "0"});
    }
}

LearningCurveTable LearningCurveTable::parse_csv(const std::string& text, const std::string& source) {
    const auto table = csv::parse(text, source);
    csv::expect_header(table, {"model_name", "training_size", "item_id", "correct"}, source);
    LearningCurveTable out;
    out.rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        const auto at = source + ":" + std::to_string(row.line) + ": ";
        LearningCurveRow r;
        r.model_name = csv::trim(row.fields[0]);
        if (r.model_name.empty()) throw ValidationError(at + "empty model_name");
        const auto size = csv::parse_integer(row.fields[1], row.line, source);
        if (size <= 0) throw ValidationError(at + "training_size must be positive");
        r.training_size = static_cast<std::uint64_t>(size);
        r.item_id = csv::trim(row.fields[2]);
        if (r.item_id.empty()) throw ValidationError(at + "empty item_id");
        const auto correct = csv::parse_integer(row.fields[3], row.line, source);
        if (correct != 0 && correct != 1) throw ValidationError(at + "correct must be 0 or 1");
        r.correct = static_cast<int>(correct);
        out.rows.push_back(std::move(r));
    }
    return out;
}

LearningCurveTable LearningCurveTable::read_file(const std::filesystem::path& path) {
    return parse_csv(read_text_file(path), path.string());
}

std::vector<std::string> LearningCurveTable::model_names() const {
    std::vector<std::string> names;
    std::unordered_set<std::string> seen;
    for (const auto& r : rows) {
        if (seen.insert(r.model_name).second) names.push_back(r.model_name);
    }
    return names;
}

}  // namespace irtkit
