#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace irtkit {

/// One observation: did `model_name`, trained on `training_size` examples,
/// answer `item_id` correctly.
struct LearningCurveRow {
    std::string model_name;
    std::uint64_t training_size = 0;
    std::string item_id;
    int correct = 0;
    /// Replication index for simulated learners. Not part of the CSV format.
    int replicate = 0;
};

struct LearningCurveTable {
    std::vector<LearningCurveRow> rows;

    /// `model_name,training_size,item_id,correct`
    void write_csv(std::ostream& out) const;
    static LearningCurveTable parse_csv(const std::string& text, const std::string& source);
    static LearningCurveTable read_file(const std::filesystem::path& path);

    /// Distinct model names in order of first appearance.
    std::vector<std::string> model_names() const;
};

}  // namespace irtkit
