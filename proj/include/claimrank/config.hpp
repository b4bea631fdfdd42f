#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace claimrank {

/// Flat key/value settings read from a TOML-like text file.
///
/// Lines are `key = value`; `#` starts a comment; `[section]` prefixes the
/// following keys with `section.`; values may be wrapped in double quotes.
/// Later assignments overwrite earlier ones, which is how flag overrides win.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text, const std::string& source = "<config>");
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(std::string key, std::string value);
    /// Applies a `key=value` override string.
    void apply_override(std::string_view assignment);

    bool contains(std::string_view key) const;
    std::optional<std::string> get(std::string_view key) const;
    std::string get_or(std::string_view key, std::string fallback) const;
    double get_double(std::string_view key, double fallback) const;
    std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
    bool get_bool(std::string_view key, bool fallback) const;
    /// Comma-separated list; empty entries are dropped.
    std::vector<std::string> get_list(std::string_view key, std::vector<std::string> fallback) const;

    const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }
    /// Directory of the file this config was loaded from (empty when parsed from text).
    const std::filesystem::path& base_dir() const { return base_dir_; }
    /// Resolves a path value relative to base_dir().
    std::filesystem::path resolve_path(const std::string& value) const;

private:
    std::map<std::string, std::string, std::less<>> entries_;
    std::filesystem::path base_dir_;
};

std::vector<std::string> split_list(std::string_view text, char sep = ',');
std::string trim(std::string_view text);

}  // namespace claimrank
