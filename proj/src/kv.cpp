#include "emfi/kv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace emfi {

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(s.substr(start)));
            break;
        }
        out.push_back(trim(s.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s, const std::string& context) {
    const std::string str = trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(str.data(), str.data() + str.size(), v);
    if (ec != std::errc() || ptr != str.data() + str.size())
        throw ConfigError(context + ": not a number: '" + str + "'");
    return v;
}

int64_t parse_int(std::string_view s, const std::string& context) {
    const std::string str = trim(s);
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(str.data(), str.data() + str.size(), v);
    if (ec != std::errc() || ptr != str.data() + str.size())
        throw ConfigError(context + ": not an integer: '" + str + "'");
    return v;
}

uint64_t parse_u64(std::string_view s, const std::string& context) {
    const std::string str = trim(s);
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(str.data(), str.data() + str.size(), v);
    if (ec != std::errc() || ptr != str.data() + str.size())
        throw ConfigError(context + ": not an unsigned integer: '" + str + "'");
    return v;
}

KeyValueFile KeyValueFile::parse(std::string_view text, std::string origin) {
    KeyValueFile kv;
    kv.origin_ = std::move(origin);
    kv.text_ = std::string(text);

    std::string section;
    int line_no = 0;
    size_t pos = 0;
    bool saw_content = false;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string_view raw =
            eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;

        if (line.front() == '[' && line.back() == ']') {
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            saw_content = true;
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (!saw_content && kv.version_tag_.empty()) {
                kv.version_tag_ = line;
                saw_content = true;
                continue;
            }
            throw ConfigError(kv.origin_ + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        }
        Entry e;
        e.section = section;
        e.key = trim(std::string_view(line).substr(0, eq));
        e.value = trim(std::string_view(line).substr(eq + 1));
        e.line = line_no;
        if (e.key.empty())
            throw ConfigError(kv.origin_ + ":" + std::to_string(line_no) + ": empty key");
        kv.entries_.push_back(std::move(e));
        saw_content = true;
    }
    return kv;
}

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse(os.str(), path);
}

std::optional<std::string> KeyValueFile::get(std::string_view section, std::string_view key) const {
    std::optional<std::string> found;
    for (const auto& e : entries_)
        if (e.section == section && e.key == key) found = e.value;
    return found;
}

std::string KeyValueFile::get_or(std::string_view section, std::string_view key,
                                 std::string_view fallback) const {
    auto v = get(section, key);
    return v ? *v : std::string(fallback);
}

std::vector<const KeyValueFile::Entry*> KeyValueFile::get_all(std::string_view section,
                                                              std::string_view key) const {
    std::vector<const Entry*> out;
    for (const auto& e : entries_)
        if (e.section == section && e.key == key) out.push_back(&e);
    return out;
}

double KeyValueFile::get_double(std::string_view section, std::string_view key,
                                double fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    return parse_double(*v, origin_ + " [" + std::string(section) + "] " + std::string(key));
}

int64_t KeyValueFile::get_int(std::string_view section, std::string_view key,
                              int64_t fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    return parse_int(*v, origin_ + " [" + std::string(section) + "] " + std::string(key));
}

void KeyValueFile::fail(const Entry& e, const std::string& message) const {
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": " + message);
}

}  // namespace emfi
