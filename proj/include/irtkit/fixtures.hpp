#pragma once

// Readers for the shipped example-item tables (premise/hypothesis pairs and
// sentiment phrases with reference difficulties).

#include <filesystem>
#include <string>
#include <vector>

#include "irtkit/io.hpp"

namespace irtkit {

struct FixtureItem {
    std::string item_id;
    /// "premise / hypothesis" for NLI pairs, the phrase for sentiment items.
    std::string text;
    std::string gold_label;
    double b = 0.0;
};

/// `item_id,premise,hypothesis,gold_label,b`
std::vector<FixtureItem> read_nli_fixture(const std::filesystem::path& path);
/// `item_id,phrase,gold_label,b`
std::vector<FixtureItem> read_sa_fixture(const std::filesystem::path& path);

std::vector<ItemDifficulty> fixture_difficulties(const std::vector<FixtureItem>& items);

}  // namespace irtkit
