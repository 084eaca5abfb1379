#pragma once

// Parameter files (JSON) and difficulty tables (CSV).

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "irtkit/item_model.hpp"

namespace irtkit {

/// One row of a difficulty table: `item_id,b`.
struct ItemDifficulty {
    std::string item_id;
    double b = 0.0;
};

/// JSON array of {"item_id", "a", "b", "c"} objects.
std::string to_json_text(const std::vector<NamedItem>& items);
std::vector<NamedItem> parse_params_json(const std::string& text, const std::string& source);
std::vector<NamedItem> read_params_file(const std::filesystem::path& path);
void write_params_file(const std::filesystem::path& path, const std::vector<NamedItem>& items);

void write_difficulties_csv(std::ostream& out, const std::vector<ItemDifficulty>& rows);
std::vector<ItemDifficulty> parse_difficulties_csv(const std::string& text, const std::string& source);
std::vector<ItemDifficulty> read_difficulties_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
/// Creates parent directories as needed and overwrites the file.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace irtkit
