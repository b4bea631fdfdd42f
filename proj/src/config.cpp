#include "claimrank/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "claimrank/error.hpp"

namespace claimrank {

std::string trim(std::string_view text) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_space(text[begin])) ++begin;
    while (end > begin && is_space(text[end - 1])) --end;
    return std::string(text.substr(begin, end - begin));
}

std::vector<std::string> split_list(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find(sep, start);
        if (pos == std::string_view::npos) pos = text.size();
        auto item = trim(text.substr(start, pos - start));
        if (!item.empty()) out.push_back(std::move(item));
        start = pos + 1;
    }
    return out;
}

namespace {

std::string unquote(std::string value) {
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        return value.substr(1, value.size() - 2);
    return value;
}

std::string strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
    }
    return std::string(line);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& source) {
    KeyValueConfig cfg;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        auto line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(source, line_no, "unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(source, line_no, "expected key = value");
        auto key = trim(std::string_view(line).substr(0, eq));
        if (key.empty()) throw ParseError(source, line_no, "empty key");
        auto value = unquote(trim(std::string_view(line).substr(eq + 1)));
        cfg.set(section.empty() ? key : section + "." + key, std::move(value));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto cfg = parse(buf.str(), path.string());
    cfg.base_dir_ = path.parent_path();
    return cfg;
}

void KeyValueConfig::set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }

void KeyValueConfig::apply_override(std::string_view assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ParseError("<override>", 0, "expected key=value: " + std::string(assignment));
    auto key = trim(assignment.substr(0, eq));
    if (key.empty()) throw ParseError("<override>", 0, "empty key");
    set(std::move(key), unquote(trim(assignment.substr(eq + 1))));
}

bool KeyValueConfig::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValueConfig::get_or(std::string_view key, std::string fallback) const {
    auto v = get(key);
    return v ? *v : std::move(fallback);
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    char* end = nullptr;
    errno = 0;
    double out = std::strtod(v->c_str(), &end);
    if (end == v->c_str() || *end != '\0' || errno == ERANGE)
        throw ParseError("<config>", 0, "key '" + std::string(key) + "' is not a number: " + *v);
    return out;
}

std::int64_t KeyValueConfig::get_int(std::string_view key, std::int64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size())
        throw ParseError("<config>", 0, "key '" + std::string(key) + "' is not an integer: " + *v);
    return out;
}

bool KeyValueConfig::get_bool(std::string_view key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw ParseError("<config>", 0, "key '" + std::string(key) + "' is not a boolean: " + *v);
}

std::vector<std::string> KeyValueConfig::get_list(std::string_view key, std::vector<std::string> fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    return split_list(*v);
}

std::filesystem::path KeyValueConfig::resolve_path(const std::string& value) const {
    std::filesystem::path p(value);
    if (p.is_absolute() || base_dir_.empty()) return p;
    return base_dir_ / p;
}

}  // namespace claimrank
