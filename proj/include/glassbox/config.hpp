#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "glassbox/csv.hpp"
#include "glassbox/error.hpp"

namespace glassbox {

/// Flat `key = value` document. `#` starts a comment; blank lines are ignored.
/// Lookups are recorded so leftover (misspelled) keys can be reported.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::string_view text) {
        KeyValueConfig cfg;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto eol = text.find('\n', pos);
            std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
            pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = csv::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
            const auto key = csv::trim(line.substr(0, eq));
            const auto value = csv::trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
            cfg.values_[std::string(key)] = std::string(value);
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        const auto v = csv::parse_number(it->second);
        if (!v) throw ConfigError("config key '" + key + "': '" + it->second + "' is not a number");
        return *v;
    }

    long long get_int(const std::string& key, long long fallback) const {
        const double v = get_double(key, static_cast<double>(fallback));
        if (v != static_cast<double>(static_cast<long long>(v)))
            throw ConfigError("config key '" + key + "' must be an integer");
        return static_cast<long long>(v);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto s = get_string(key, fallback ? "true" : "false");
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw ConfigError("config key '" + key + "': '" + s + "' is not a boolean");
    }

    /// Keys under `prefix` that no lookup has touched.
    std::vector<std::string> unused(std::string_view prefix = {}) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (k.rfind(prefix, 0) == 0 && !used_.count(k)) out.push_back(k);
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

}  // namespace glassbox
