#include "bsg/config.hpp"

#include "bsg/error.hpp"
#include "text.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace bsg {

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

KeyValueConfig KeyValueConfig::parse_string(std::string_view text, const std::string& origin) {
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    std::size_t lineno = 0;
    for (auto raw : detail::split_on(text, '\n')) {
        ++lineno;
        auto line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(origin, lineno, "expected 'key = value'");
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (key.empty()) throw ParseError(origin, lineno, "empty key");
        if (!cfg.values_.emplace(key, value).second) throw ParseError(origin, lineno, "duplicate key '" + key + "'");
    }
    return cfg;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string KeyValueConfig::require_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) throw Error(origin_ + ": missing required key '" + key + "'");
    return it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    auto v = detail::parse_double(it->second);
    if (!v) throw Error(origin_ + ": key '" + key + "' expects a number, got '" + it->second + "'");
    return *v;
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const {
    return static_cast<std::size_t>(get_u64(key, fallback));
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    auto v = detail::parse_uint(it->second);
    if (!v) throw Error(origin_ + ": key '" + key + "' expects a non-negative integer, got '" + it->second + "'");
    return *v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const auto& v = it->second;
    if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
    if (v == "off" || v == "false" || v == "no" || v == "0") return false;
    throw Error(origin_ + ": key '" + key + "' expects on/off, got '" + v + "'");
}

void KeyValueConfig::reject_unknown(const std::set<std::string>& allowed,
                                    const std::vector<std::string>& allowed_prefixes) const {
    for (const auto& [key, value] : values_) {
        if (allowed.count(key)) continue;
        bool ok = false;
        for (const auto& prefix : allowed_prefixes) ok = ok || key.rfind(prefix, 0) == 0;
        if (!ok) throw Error(origin_ + ": unknown key '" + key + "'");
    }
}

std::string KeyValueConfig::dump() const {
    std::ostringstream out;
    for (const auto& [key, value] : values_) out << key << " = " << value << '\n';
    return out.str();
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace bsg
