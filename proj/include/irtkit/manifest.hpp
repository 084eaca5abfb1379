#pragma once

// Run manifests: everything needed to reproduce one CLI invocation.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace irtkit {

struct ManifestFile {
    std::string path;  // absolute
    std::string sha256;
};

struct RunManifest {
    std::string subcommand;  // e.g. "calibrate" or "simulate population"
    /// Every option of the invocation with defaults materialized. Flags are
    /// booleans, everything else the string passed on the command line.
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::map<std::string, ManifestFile> inputs;  // keyed by option name
    std::map<std::string, std::string> outputs;  // option name -> absolute path
    std::string tool_version;
    std::uint64_t seed = 0;

    std::string to_json_text() const;
    static RunManifest parse(const std::string& text, const std::string& source);
};

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& bytes);

}  // namespace irtkit
