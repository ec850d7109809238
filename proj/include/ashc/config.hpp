// Copyright 2026 The ashc Authors.
// SPDX-License-Identifier: Apache-2.0

// Flat configuration files:
//
//   # comment
//   section.key = value        # trailing comment
//   list.key = 1.0, -2.5, 3
//
// Keys are dotted paths of [A-Za-z0-9_] segments. Each key may appear once.
// Values are trimmed; lists are comma separated. There is no quoting and no
// environment expansion.

#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ashc/errors.hpp"

namespace ashc {

class Config {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static Config parse(std::string_view text, std::string source = "<string>") {
        Config cfg;
        cfg.source_ = std::move(source);
        cfg.text_ = std::string(text);
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t nl = text.find('\n', pos);
            std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) cfg.fail(line_no, "expected 'key = value'");
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (!valid_key(key)) cfg.fail(line_no, "invalid key '" + key + "'");
            if (value.empty()) cfg.fail(line_no, "empty value for '" + key + "'");
            if (cfg.entries_.count(key)) cfg.fail(line_no, "duplicate key '" + key + "'");
            cfg.entries_.emplace(key, Entry{value, line_no});
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot read config file '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    /// Rejects keys outside the schema.
    void require_known(const std::set<std::string>& schema) const {
        for (const auto& [key, e] : entries_)
            if (!schema.count(key)) fail(e.line, "unknown key '" + key + "'");
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
    const std::string& source() const noexcept { return source_; }
    const std::string& text() const noexcept { return text_; }

    /// Replaces or inserts a value (command-line overrides).
    void set(const std::string& key, std::string value) {
        if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'");
        entries_[key] = Entry{std::move(value), 0};
    }

    std::string get_string(const std::string& key) const { return find(key).value; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? get_string(key) : fallback;
    }

    double get_double(const std::string& key) const {
        const Entry& e = find(key);
        return to_double(e.value, key, e.line);
    }

    double get_double(const std::string& key, double fallback) const { return has(key) ? get_double(key) : fallback; }

    long long get_int(const std::string& key) const {
        const Entry& e = find(key);
        long long out = 0;
        const char* first = e.value.data();
        const char* last = first + e.value.size();
        const auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc() || ptr != last) fail(e.line, "'" + key + "' expects an integer, got '" + e.value + "'");
        return out;
    }

    long long get_int(const std::string& key, long long fallback) const { return has(key) ? get_int(key) : fallback; }

    bool get_bool(const std::string& key) const {
        const Entry& e = find(key);
        if (e.value == "true") return true;
        if (e.value == "false") return false;
        fail(e.line, "'" + key + "' expects true or false, got '" + e.value + "'");
    }

    bool get_bool(const std::string& key, bool fallback) const { return has(key) ? get_bool(key) : fallback; }

    std::vector<double> get_list(const std::string& key) const {
        const Entry& e = find(key);
        std::vector<double> out;
        std::string_view rest = e.value;
        while (true) {
            const auto comma = rest.find(',');
            const std::string item(trim(rest.substr(0, comma)));
            if (item.empty()) fail(e.line, "'" + key + "' has an empty list element");
            out.push_back(to_double(item, key, e.line));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        return out;
    }

    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const {
        return has(key) ? get_list(key) : fallback;
    }

private:
    static std::string_view trim(std::string_view s) {
        const auto ws = " \t\r\f\v";
        const auto b = s.find_first_not_of(ws);
        if (b == std::string_view::npos) return {};
        return s.substr(b, s.find_last_not_of(ws) - b + 1);
    }

    static bool valid_key(const std::string& key) {
        if (key.empty() || key.front() == '.' || key.back() == '.') return false;
        char prev = 0;
        for (char c : key) {
            const bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
            if (!word && c != '.') return false;
            if (c == '.' && prev == '.') return false;
            prev = c;
        }
        return true;
    }

    [[noreturn]] void fail(int line, const std::string& msg) const {
        std::ostringstream os;
        os << source_;
        if (line > 0) os << ':' << line;
        os << ": " << msg;
        throw ConfigError(os.str());
    }

    const Entry& find(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
        return it->second;
    }

    double to_double(const std::string& s, const std::string& key, int line) const {
        std::string_view v = s;
        if (!v.empty() && v.front() == '+') v.remove_prefix(1);
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
            fail(line, "'" + key + "' expects a finite number, got '" + s + "'");
        return out;
    }

    std::string source_;
    std::string text_;
    std::map<std::string, Entry> entries_;
};

}  // namespace ashc
