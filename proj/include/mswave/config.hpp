#pragma once

// Experiment configuration: flat "section.key = value" text with [section]
// headers, or the equivalent JSON object. Values stay strings until read.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace mswave {

inline constexpr const char* code_version = "0.3.1";

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::string json_scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    if (v.is_array()) {
        std::string s;
        for (const auto& e : v) {
            if (!s.empty()) s += ",";
            s += json_scalar(e);
        }
        return s;
    }
    throw ConfigurationError("config: unsupported JSON value " + v.dump());
}

}  // namespace detail

class Config {
public:
    static Config parse_text(const std::string& text) {
        Config c;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
            line = detail::trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigurationError("config line " + std::to_string(lineno) + ": bad section");
                section = detail::trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigurationError("config line " + std::to_string(lineno) + ": expected key = value");
            std::string key = detail::trim(line.substr(0, eq));
            if (key.empty()) throw ConfigurationError("config line " + std::to_string(lineno) + ": empty key");
            c.set(section.empty() ? key : section + "." + key, detail::trim(line.substr(eq + 1)));
        }
        return c;
    }

    static Config parse_json(const std::string& text) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigurationError(std::string("config: invalid JSON: ") + e.what());
        }
        if (!j.is_object()) throw ConfigurationError("config: JSON root must be an object");
        Config c;
        for (const auto& [k, v] : j.items()) {
            if (v.is_object()) {
                for (const auto& [k2, v2] : v.items()) c.set(k + "." + k2, detail::json_scalar(v2));
            } else {
                c.set(k, detail::json_scalar(v));
            }
        }
        return c;
    }

    /// JSON if the first non-blank character is '{', key-value text otherwise.
    static Config parse(const std::string& text) {
        for (char ch : text) {
            if (std::isspace(static_cast<unsigned char>(ch))) continue;
            return ch == '{' ? parse_json(text) : parse_text(text);
        }
        return {};
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigurationError("config: cannot read " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    void merge(const Config& over) {
        for (const auto& [k, v] : over.kv_) kv_[k] = v;
    }

    std::string str(const std::string& key, const std::string& def) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? def : it->second;
    }
    std::string require(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end() || it->second.empty()) throw ConfigurationError("config: missing required field '" + key + "'");
        return it->second;
    }
    double num(const std::string& key, double def) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? def : to_double(key, it->second);
    }
    double require_num(const std::string& key) const { return to_double(key, require(key)); }
    long long integer(const std::string& key, long long def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        try {
            std::size_t used = 0;
            long long v = std::stoll(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigurationError("config: '" + key + "' is not an integer: " + it->second);
        }
    }
    bool flag(const std::string& key, bool def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ConfigurationError("config: '" + key + "' is not a boolean: " + v);
    }
    std::vector<std::string> list(const std::string& key) const {
        std::vector<std::string> out;
        std::stringstream ss(str(key, ""));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = detail::trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }
    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        for (const auto& s : list(key)) out.push_back(to_double(key, s));
        return out;
    }

    /// Nested object, one member per section.
    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : kv_) {
            const auto dot = k.find('.');
            if (dot == std::string::npos)
                j[k] = v;
            else
                j[k.substr(0, dot)][k.substr(dot + 1)] = v;
        }
        return j;
    }

    std::string canonical() const {
        std::string s;
        for (const auto& [k, v] : kv_) s += k + "=" + v + "\n";
        return s;
    }

    /// FNV-1a over the canonical text; keys restricted to `prefixes` if given.
    std::string hash(const std::vector<std::string>& prefixes = {}) const {
        std::uint64_t h = 14695981039346656037ull;
        for (const auto& [k, v] : kv_) {
            bool keep = prefixes.empty();
            for (const auto& p : prefixes) keep = keep || k.rfind(p, 0) == 0;
            if (!keep) continue;
            for (char ch : k + "=" + v + "\n") {
                h ^= static_cast<unsigned char>(ch);
                h *= 1099511628211ull;
            }
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    static double to_double(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument("trailing");
            return d;
        } catch (const std::exception&) {
            throw ConfigurationError("config: '" + key + "' is not a number: " + v);
        }
    }

    std::map<std::string, std::string> kv_;
};

// ---------------------------------------------------------------------------
// Presets

struct Preset {
    const char* name;
    const char* command;
    const char* text;
};

inline const std::vector<Preset>& presets() {
    static const std::vector<Preset> table{
        {"golden-simulate", "simulate",
         "[data]\nfamily = paper-bump\nepsilon = 0.05\n[system]\nc = 2\n"
         "[grid]\nnx = 1024\nhorizon = 8\n"},
        {"picard-contraction", "iterate",
         "[data]\nfamily = paper-bump\nepsilon = 0.2\n[system]\nc = 2\n"
         "[grid]\ndx = 0.0625\nhorizon = 16\n[iterate]\nj_max = 8\nk_used = 2\n"},
        {"ghost-weight-audit", "verify",
         "[verify]\nfamily = paper-bump:0.5, bump-w0.75:0.5, bump-w0.5:0.5, pessimal:0.5, paper-bump:0.5:linear\n"
         "estimates = all\nc = 2\ndx = 0.015625\nhorizon = 16\nstride = 2\n"},
        {"lifespan-sweep", "sweep",
         "[data]\nfamily = paper-bump\n[system]\nc = 2\n"
         "[sweep]\nepsilons = 8, 7, 6.5, 6, 5.5, 5, 4.75, 4.5, 4.25\nhorizon = 512\ndx = 0.03125\n"
         "blowup_factor = 1000\nconfirm = true\n"},
    };
    return table;
}

inline std::optional<Preset> find_preset(const std::string& name) {
    for (const auto& p : presets())
        if (name == p.name) return p;
    return std::nullopt;
}

}  // namespace mswave
