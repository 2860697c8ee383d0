#pragma once

#include <map>
#include <string>
#include <vector>

#include "softrl/util.hpp"

namespace softrl::config {

struct KeySpec {
    std::string key;  // "section.name"
    std::string default_value;
    std::string doc;
};

/// Flat INI-backed run configuration. Every key has a documented default;
/// unknown keys are rejected at parse time.
class RunConfig {
public:
    static const std::vector<KeySpec>& schema();
    static RunConfig defaults();
    /// Parses `[section]` / `key = value` lines; '#' and ';' start comments.
    static RunConfig from_file(const std::string& path);

    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    long long get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    /// Sorted key=value dump; hashed into run metadata.
    std::string canonical_string() const;
    std::uint64_t hash() const { return fnv1a(canonical_string()); }

    /// One line per key: key = default  # doc
    static std::string documented_defaults();

private:
    std::map<std::string, std::string> values_;
};

}  // namespace softrl::config
