#include "irtkit/io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "irtkit/csv.hpp"
#include "irtkit/error.hpp"

namespace irtkit {

using nlohmann::json;

std::string to_json_text(const std::vector<NamedItem>& items) {
    json arr = json::array();
    for (const auto& item : items) {
        json o;
        o["item_id"] = item.item_id;
        o["a"] = item.params.a;
        o["b"] = item.params.b;
        o["c"] = item.params.c;
        arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
}

std::vector<NamedItem> parse_params_json(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(source + ": invalid JSON: " + e.what());
    }
    if (!doc.is_array()) throw ValidationError(source + ": parameter file must be a JSON array");
    std::vector<NamedItem> out;
    std::unordered_set<std::string> seen;
    for (const auto& o : doc) {
        if (!o.is_object() || !o.contains("item_id") || !o["item_id"].is_string()) {
            throw ValidationError(source + ": every entry needs a string item_id");
        }
        NamedItem item;
        item.item_id = o["item_id"].get<std::string>();
        for (const char* key : {"a", "b", "c"}) {
            if (!o.contains(key) || !o[key].is_number()) {
                throw ValidationError(source + ": item '" + item.item_id + "' lacks numeric '" + key + "'");
            }
        }
        item.params = {o["a"].get<double>(), o["b"].get<double>(), o["c"].get<double>()};
        try {
            validate(item.params);
        } catch (const ValidationError& e) {
            throw ValidationError(source + ": item '" + item.item_id + "': " + e.what());
        }
        if (!seen.insert(item.item_id).second) {
            throw ValidationError(source + ": duplicate item_id '" + item.item_id + "'");
        }
        out.push_back(std::move(item));
    }
    return out;
}

std::vector<NamedItem> read_params_file(const std::filesystem::path& path) {
    return parse_params_json(read_text_file(path), path.string());
}

void write_params_file(const std::filesystem::path& path, const std::vector<NamedItem>& items) {
    write_text_file(path, to_json_text(items));
}

void write_difficulties_csv(std::ostream& out, const std::vector<ItemDifficulty>& rows) {
    out << "item_id,b\n";
    for (const auto& r : rows) csv::write_row(out, {r.item_id, csv::format_double(r.b)});
}

std::vector<ItemDifficulty> parse_difficulties_csv(const std::string& text, const std::string& source) {
    const auto table = csv::parse(text, source);
    csv::expect_header(table, {"item_id", "b"}, source);
    std::vector<ItemDifficulty> out;
    std::unordered_set<std::string> seen;
    for (const auto& row : table.rows) {
        ItemDifficulty d{csv::trim(row.fields[0]), csv::parse_double(row.fields[1], row.line, source)};
        if (!seen.insert(d.item_id).second) {
            throw ValidationError(source + ":" + std::to_string(row.line) + ": duplicate item_id '" + d.item_id + "'");
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<ItemDifficulty> read_difficulties_file(const std::filesystem::path& path) {
    return parse_difficulties_csv(read_text_file(path), path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
    if (!out) throw ValidationError("failed writing " + path.string());
}

}  // namespace irtkit
