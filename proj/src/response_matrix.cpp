#include "irtkit/response_matrix.hpp"

#include <ostream>

#include "irtkit/csv.hpp"
#include "irtkit/error.hpp"
#include "irtkit/io.hpp"

namespace irtkit {

ResponseMatrix::ResponseMatrix(std::vector<std::string> respondent_ids, std::vector<std::string> item_ids)
    : respondent_ids_(std::move(respondent_ids)),
      item_ids_(std::move(item_ids)),
      cells_(respondent_ids_.size() * item_ids_.size(), kMissing) {
    rebuild_indexes();
}

void ResponseMatrix::rebuild_indexes() {
    respondent_lookup_.clear();
    item_lookup_.clear();
    for (std::size_t j = 0; j < respondent_ids_.size(); ++j) {
        if (!respondent_lookup_.emplace(respondent_ids_[j], j).second) {
            throw ValidationError("duplicate respondent_id '" + respondent_ids_[j] + "'");
        }
    }
    for (std::size_t i = 0; i < item_ids_.size(); ++i) {
        if (!item_lookup_.emplace(item_ids_[i], i).second) {
            throw ValidationError("duplicate item_id '" + item_ids_[i] + "'");
        }
    }
}

void ResponseMatrix::set(std::size_t respondent, std::size_t item, std::int8_t value) {
    if (value != 0 && value != 1 && value != kMissing) throw ValidationError("response must be 0, 1 or missing");
    cells_.at(respondent * items() + item) = value;
}

std::optional<std::size_t> ResponseMatrix::item_index(const std::string& item_id) const {
    const auto it = item_lookup_.find(item_id);
    if (it == item_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> ResponseMatrix::respondent_index(const std::string& respondent_id) const {
    const auto it = respondent_lookup_.find(respondent_id);
    if (it == respondent_lookup_.end()) return std::nullopt;
    return it->second;
}

std::size_t ResponseMatrix::add_respondent(const std::string& respondent_id) {
    if (respondent_lookup_.count(respondent_id)) {
        throw ValidationError("duplicate respondent_id '" + respondent_id + "'");
    }
    respondent_ids_.push_back(respondent_id);
    respondent_lookup_.emplace(respondent_id, respondent_ids_.size() - 1);
    cells_.resize(cells_.size() + items(), kMissing);
    return respondent_ids_.size() - 1;
}

ResponseMatrix ResponseMatrix::with_item_order(const std::vector<std::size_t>& order) const {
    if (order.size() != items()) throw ValidationError("item order has wrong length");
    std::vector<std::string> ids;
    ids.reserve(order.size());
    for (std::size_t k : order) ids.push_back(item_ids_.at(k));
    ResponseMatrix out(respondent_ids_, std::move(ids));
    for (std::size_t j = 0; j < respondents(); ++j) {
        for (std::size_t k = 0; k < order.size(); ++k) out.cells_[j * items() + k] = at(j, order[k]);
    }
    return out;
}

std::vector<std::string> ResponseMatrix::degenerate_items() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < items(); ++i) {
        bool zero = false;
        bool one = false;
        for (std::size_t j = 0; j < respondents(); ++j) {
            const auto v = at(j, i);
            zero |= v == 0;
            one |= v == 1;
        }
        if (!(zero && one)) out.push_back(item_ids_[i]);
    }
    return out;
}

void ResponseMatrix::validate_for_calibration() const {
    if (items() < 2) throw ValidationError("calibration needs at least 2 items");
    if (respondents() < 2) throw ValidationError("calibration needs at least 2 respondents");
    auto bad = degenerate_items();
    if (!bad.empty()) throw DegenerateItemsError(std::move(bad));
}

ResponseMatrix ResponseMatrix::parse_long_csv(const std::string& text, const std::string& source) {
    const auto table = csv::parse(text, source);
    csv::expect_header(table, {"respondent_id", "item_id", "response"}, source);
    std::vector<std::string> respondents;
    std::vector<std::string> items;
    std::unordered_map<std::string, std::size_t> rseen;
    std::unordered_map<std::string, std::size_t> iseen;
    for (const auto& row : table.rows) {
        const auto r = csv::trim(row.fields[0]);
        const auto i = csv::trim(row.fields[1]);
        if (r.empty() || i.empty()) {
            throw ValidationError(source + ":" + std::to_string(row.line) + ": empty identifier");
        }
        if (rseen.emplace(r, respondents.size()).second) respondents.push_back(r);
        if (iseen.emplace(i, items.size()).second) items.push_back(i);
    }
    ResponseMatrix m(std::move(respondents), std::move(items));
    std::vector<bool> filled(m.cells_.size(), false);
    for (const auto& row : table.rows) {
        const auto j = rseen.at(csv::trim(row.fields[0]));
        const auto i = iseen.at(csv::trim(row.fields[1]));
        const auto v = csv::parse_integer(row.fields[2], row.line, source);
        if (v != 0 && v != 1) {
            throw ValidationError(source + ":" + std::to_string(row.line) + ": response must be 0 or 1");
        }
        const auto idx = j * m.items() + i;
        if (filled[idx]) {
            throw ValidationError(source + ":" + std::to_string(row.line) + ": duplicate (respondent_id, item_id) pair");
        }
        filled[idx] = true;
        m.cells_[idx] = static_cast<std::int8_t>(v);
    }
    return m;
}

ResponseMatrix ResponseMatrix::parse_wide_csv(const std::string& text, const std::string& source) {
    const auto table = csv::parse(text, source);
    if (table.header.empty() || table.header[0] != "respondent_id") {
        throw ValidationError(source + ":1: wide format must start with a respondent_id column");
    }
    std::vector<std::string> items(table.header.begin() + 1, table.header.end());
    std::vector<std::string> respondents;
    for (const auto& row : table.rows) respondents.push_back(csv::trim(row.fields[0]));
    ResponseMatrix m(std::move(respondents), std::move(items));
    for (std::size_t j = 0; j < table.rows.size(); ++j) {
        const auto& row = table.rows[j];
        for (std::size_t i = 0; i < m.items(); ++i) {
            const auto cell = csv::trim(row.fields[i + 1]);
            if (cell.empty()) continue;
            if (cell != "0" && cell != "1") {
                throw ValidationError(source + ":" + std::to_string(row.line) + ": cell must be 0, 1 or empty");
            }
            m.cells_[j * m.items() + i] = cell == "1" ? 1 : 0;
        }
    }
    return m;
}

ResponseMatrix ResponseMatrix::read_long_csv(const std::filesystem::path& path) {
    return parse_long_csv(read_text_file(path), path.string());
}

ResponseMatrix ResponseMatrix::read_wide_csv(const std::filesystem::path& path) {
    return parse_wide_csv(read_text_file(path), path.string());
}

void ResponseMatrix::write_long_csv(std::ostream& out) const {
    out << "respondent_id,item_id,response\n";
    for (std::size_t j = 0; j < respondents(); ++j) {
        for (std::size_t i = 0; i < items(); ++i) {
            const auto v = at(j, i);
            if (v == kMissing) continue;
            csv::write_row(out, {respondent_ids_[j], item_ids_[i], v == 1 ? "1" : "0"});
        }
    }
}

void ResponseMatrix::write_wide_csv(std::ostream& out) const {
    std::vector<std::string> header{"respondent_id"};
    header.insert(header.end(), item_ids_.begin(), item_ids_.end());
    csv::write_row(out, header);
    for (std::size_t j = 0; j < respondents(); ++j) {
        std::vector<std::string> row{respondent_ids_[j]};
        for (std::size_t i = 0; i < items(); ++i) {
            const auto v = at(j, i);
            row.push_back(v == kMissing ? "" : (v == 1 ? "1" : "0"));
        }
        csv::write_row(out, row);
    }
}

}  // namespace irtkit
