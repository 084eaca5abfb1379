#include "irtkit/manifest.hpp"

#include <array>
#include <cstdio>
#include <memory>

#include <openssl/evp.h>

#include "irtkit/error.hpp"
#include "irtkit/io.hpp"

namespace irtkit {

using nlohmann::ordered_json;

std::string sha256_text(const std::string& bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
        throw std::runtime_error("SHA-256 computation failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < length; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_text(read_text_file(path)); }

std::string RunManifest::to_json_text() const {
    ordered_json doc;
    doc["tool"] = "irtkit";
    doc["tool_version"] = tool_version;
    doc["subcommand"] = subcommand;
    doc["seed"] = seed;
    doc["config"] = config;
    doc["inputs"] = ordered_json::object();
    for (const auto& [name, file] : inputs) doc["inputs"][name] = {{"path", file.path}, {"sha256", file.sha256}};
    doc["outputs"] = ordered_json::object();
    for (const auto& [name, path] : outputs) doc["outputs"][name] = path;
    return doc.dump(2) + "\n";
}

RunManifest RunManifest::parse(const std::string& text, const std::string& source) {
    RunManifest m;
    try {
        const auto doc = ordered_json::parse(text);
        m.subcommand = doc.at("subcommand").get<std::string>();
        m.tool_version = doc.at("tool_version").get<std::string>();
        m.seed = doc.at("seed").get<std::uint64_t>();
        m.config = doc.at("config");
        for (const auto& [name, file] : doc.at("inputs").items()) {
            m.inputs[name] = {file.at("path").get<std::string>(), file.at("sha256").get<std::string>()};
        }
        for (const auto& [name, path] : doc.at("outputs").items()) m.outputs[name] = path.get<std::string>();
    } catch (const ordered_json::exception& e) {
        throw ValidationError(source + ": malformed manifest: " + e.what());
    }
    return m;
}

}  // namespace irtkit
