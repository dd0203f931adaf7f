#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emfi/types.hpp"

namespace emfi {

// Line-oriented key-value format shared by calibration and campaign config
// files: optional bare version tag on the first line, '#' comments,
// [section] headers, `key = value` entries (repeatable).
class KeyValueFile {
public:
    struct Entry {
        std::string section;
        std::string key;
        std::string value;
        int line = 0;
    };

    static KeyValueFile parse(std::string_view text, std::string origin);
    static KeyValueFile parse_file(const std::string& path);

    const std::string& version_tag() const { return version_tag_; }
    const std::string& origin() const { return origin_; }
    const std::string& text() const { return text_; }

    std::optional<std::string> get(std::string_view section, std::string_view key) const;
    std::string get_or(std::string_view section, std::string_view key,
                       std::string_view fallback) const;
    std::vector<const Entry*> get_all(std::string_view section, std::string_view key) const;
    const std::vector<Entry>& entries() const { return entries_; }

    double get_double(std::string_view section, std::string_view key, double fallback) const;
    int64_t get_int(std::string_view section, std::string_view key, int64_t fallback) const;

    [[noreturn]] void fail(const Entry& e, const std::string& message) const;

private:
    std::string origin_;
    std::string text_;
    std::string version_tag_;
    std::vector<Entry> entries_;
};

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s, char sep = ',');
double parse_double(std::string_view s, const std::string& context);
int64_t parse_int(std::string_view s, const std::string& context);
uint64_t parse_u64(std::string_view s, const std::string& context);

}  // namespace emfi
