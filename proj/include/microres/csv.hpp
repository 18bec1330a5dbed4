#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "microres/error.hpp"

namespace microres::csv {

/// Splits one delimiter-separated record; double quotes protect delimiters ("" escapes).
inline std::vector<std::string> split_record(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline std::string quote_if_needed(std::string_view field, char delim) {
    if (field.find(delim) == std::string_view::npos && field.find('"') == std::string_view::npos)
        return std::string(field);
    std::string s = "\"";
    for (char c : field) {
        if (c == '"') s.push_back('"');
        s.push_back(c);
    }
    s.push_back('"');
    return s;
}

/// Header-addressed table read fully into memory.
class Table {
public:
    static Table read(std::istream& in, char delim) {
        Table t;
        t.delim_ = delim;
        std::string line;
        std::size_t lineno = 0;
        bool have_header = false;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line == "\r") continue;
            auto fields = split_record(line, delim);
            if (!have_header) {
                t.header_ = std::move(fields);
                for (std::size_t i = 0; i < t.header_.size(); ++i) t.index_[t.header_[i]] = i;
                have_header = true;
                continue;
            }
            if (fields.size() != t.header_.size())
                throw ParseError(lineno, "expected " + std::to_string(t.header_.size()) +
                                             " fields, found " + std::to_string(fields.size()));
            t.rows_.push_back(std::move(fields));
            t.lines_.push_back(lineno);
        }
        return t;
    }

    const std::vector<std::string>& header() const noexcept { return header_; }
    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }
    bool has(std::string_view col) const { return index_.count(std::string(col)) > 0; }
    std::optional<std::size_t> column(std::string_view col) const {
        auto it = index_.find(std::string(col));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    std::size_t require(std::string_view col) const {
        auto c = column(col);
        if (!c) throw ParseError(1, "missing column '" + std::string(col) + "'");
        return *c;
    }
    const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }
    std::size_t line(std::size_t i) const { return lines_[i]; }

private:
    char delim_ = ',';
    std::vector<std::string> header_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::size_t> lines_;
};

class Writer {
public:
    Writer(std::ostream& out, char delim) : out_(out), delim_(delim) {}

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << delim_;
            out_ << quote_if_needed(fields[i], delim_);
        }
        out_ << '\n';
    }

private:
    std::ostream& out_;
    char delim_;
};

}  // namespace microres::csv
