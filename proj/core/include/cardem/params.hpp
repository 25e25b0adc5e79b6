#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace cardem {

// Flat key = value parameter dataset. One parameter per line, '#' starts a
// comment (used for units and provenance). Values are doubles except for a
// few string-valued keys (dataset.version).
class ParameterSet {
public:
    static ParameterSet load(const std::filesystem::path& path);
    static ParameterSet from_string(const std::string& text, std::string origin = "<memory>");

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    double get(const std::string& key) const;
    double get_or(const std::string& key, double fallback) const;
    std::string get_string(const std::string& key) const;

    // FNV-1a over the raw file bytes; recorded in every run manifest.
    std::uint64_t checksum() const { return checksum_; }
    const std::string& version() const { return version_; }
    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::string> values_;
    std::uint64_t checksum_ = 0;
    std::string version_ = "unversioned";
    std::string origin_;
};

std::uint64_t fnv1a64(const std::string& bytes);

} // namespace cardem
