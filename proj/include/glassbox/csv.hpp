#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "glassbox/error.hpp"

namespace glassbox::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column_index(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

/// Parses RFC-4180 text. Unquoted fields are whitespace-trimmed; blank lines are skipped.
inline std::vector<std::vector<std::string>> parse_records(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;      // inside a quoted section
    bool was_quoted = false;  // current field contained quotes (keep whitespace)
    bool any = false;         // current record has content

    auto end_field = [&] {
        record.push_back(was_quoted ? field : std::string(trim(field)));
        field.clear();
        was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        if (any || record.size() > 1 || !record.front().empty()) records.push_back(std::move(record));
        record.clear();
        any = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                was_quoted = true;
                any = true;
                if (!trim(field).empty()) throw DataError("malformed CSV: quote inside unquoted field");
                field.clear();
                break;
            case ',':
                end_field();
                any = true;
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                break;
            default:
                field.push_back(c);
                if (c != ' ' && c != '\t') any = true;
        }
    }
    if (quoted) throw DataError("malformed CSV: unterminated quoted field");
    if (!field.empty() || !record.empty() || any) end_record();
    return records;
}

inline Table read_table(const std::string& path, bool has_header = true,
                        const std::vector<std::string>& column_names = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);  // UTF-8 BOM
    auto records = parse_records(text);

    Table t;
    std::size_t start = 0;
    if (has_header) {
        if (records.empty()) throw DataError("'" + path + "' has no header row");
        t.header = std::move(records[0]);
        start = 1;
    }
    if (!column_names.empty()) t.header = column_names;
    if (t.header.empty() && !records.empty()) {
        for (std::size_t i = 0; i < records[start].size(); ++i) t.header.push_back("c" + std::to_string(i));
    }
    for (std::size_t r = start; r < records.size(); ++r) {
        if (records[r].size() != t.header.size())
            throw DataError("'" + path + "' line " + std::to_string(r + 1) + ": expected " +
                            std::to_string(t.header.size()) + " fields, found " +
                            std::to_string(records[r].size()));
        t.rows.push_back(std::move(records[r]));
    }
    return t;
}

inline std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string join_row(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line.push_back(',');
        line += quote(fields[i]);
    }
    return line;
}

/// Parses the whole string as a finite double.
inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Shortest text that parses back to exactly `v`.
inline std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace glassbox::csv
