#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace irtkit {

/// Respondents x items table of graded responses: 1 correct, 0 incorrect,
/// or missing.
class ResponseMatrix {
public:
    static constexpr std::int8_t kMissing = -1;

    ResponseMatrix() = default;
    /// All cells start missing. Identifiers must be unique within each axis.
    ResponseMatrix(std::vector<std::string> respondent_ids, std::vector<std::string> item_ids);

    std::size_t respondents() const noexcept { return respondent_ids_.size(); }
    std::size_t items() const noexcept { return item_ids_.size(); }
    const std::vector<std::string>& respondent_ids() const noexcept { return respondent_ids_; }
    const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }

    std::int8_t at(std::size_t respondent, std::size_t item) const { return cells_[respondent * items() + item]; }
    void set(std::size_t respondent, std::size_t item, std::int8_t value);

    std::optional<std::size_t> item_index(const std::string& item_id) const;
    std::optional<std::size_t> respondent_index(const std::string& respondent_id) const;

    /// Appends a respondent whose cells are all missing; returns its row.
    std::size_t add_respondent(const std::string& respondent_id);

    /// Same data with the item axis reordered; `order[k]` is the old column of new column k.
    ResponseMatrix with_item_order(const std::vector<std::size_t>& order) const;

    /// Items whose observed responses are all 0 or all 1 (or that have none).
    std::vector<std::string> degenerate_items() const;

    /// Throws ValidationError for fewer than 2 items or respondents and
    /// DegenerateItemsError listing every all-correct/all-incorrect item.
    void validate_for_calibration() const;

    /// Long CSV `respondent_id,item_id,response`; absent pairs are missing.
    static ResponseMatrix read_long_csv(const std::filesystem::path& path);
    /// Wide CSV: first column respondent_id, one column per item, cells 0/1/empty.
    static ResponseMatrix read_wide_csv(const std::filesystem::path& path);
    static ResponseMatrix parse_long_csv(const std::string& text, const std::string& source);
    static ResponseMatrix parse_wide_csv(const std::string& text, const std::string& source);

    void write_long_csv(std::ostream& out) const;
    void write_wide_csv(std::ostream& out) const;

    friend bool operator==(const ResponseMatrix&, const ResponseMatrix&) = default;

private:
    void rebuild_indexes();

    std::vector<std::string> respondent_ids_;
    std::vector<std::string> item_ids_;
    std::vector<std::int8_t> cells_;
    std::unordered_map<std::string, std::size_t> respondent_lookup_;
    std::unordered_map<std::string, std::size_t> item_lookup_;
};

}  // namespace irtkit
