#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace bsg {

/// Flat `key = value` document. Blank lines and `#` comments are ignored;
/// repeated keys are an error. Values stay strings until read.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_string(std::string_view text, const std::string& origin = "<string>");

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    /// on/off, true/false, yes/no, 1/0.
    bool get_bool(const std::string& key, bool fallback) const;

    /// Throws on any key not in `allowed` and not starting with one of
    /// `allowed_prefixes`.
    void reject_unknown(const std::set<std::string>& allowed,
                        const std::vector<std::string>& allowed_prefixes = {}) const;

    /// Keys in sorted order, one `key = value` per line.
    std::string dump() const;

private:
    std::string origin_ = "<config>";
    std::map<std::string, std::string> values_;
};

/// 64-bit FNV-1a, used to content-address stage outputs.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace bsg
