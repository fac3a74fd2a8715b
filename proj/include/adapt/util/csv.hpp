#pragma once

#include <adapt/error.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace adapt::util {

[[nodiscard]] inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

[[nodiscard]] inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

[[nodiscard]] inline double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw ParseError("cannot parse '" + std::string(s) + "' as a number for " + std::string(what));
    return v;
}

/// Comma-separated table with a header line; columns are looked up by name.
class CsvTable {
public:
    static CsvTable parse(std::istream& in) {
        CsvTable t;
        std::string line;
        bool header = true;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty())
                continue;
            auto fields = split(line, ',');
            if (header) {
                for (std::size_t i = 0; i < fields.size(); ++i)
                    t.columns_[std::string(fields[i])] = i;
                t.width_ = fields.size();
                header = false;
                continue;
            }
            if (fields.size() != t.width_)
                throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.width_) +
                                 " fields, found " + std::to_string(fields.size()));
            std::vector<std::string> row;
            row.reserve(fields.size());
            for (auto f : fields)
                row.emplace_back(f);
            t.rows_.push_back(std::move(row));
        }
        if (header)
            throw ParseError("CSV has no header line");
        return t;
    }

    static CsvTable load(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open " + path);
        return parse(in);
    }

    [[nodiscard]] std::size_t column(const std::string& name) const {
        const auto it = columns_.find(name);
        if (it == columns_.end())
            throw ParseError("missing column '" + name + "'");
        return it->second;
    }

    [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

private:
    std::map<std::string, std::size_t> columns_;
    std::size_t width_ = 0;
    std::vector<std::vector<std::string>> rows_;
};

/// Shortest round-trip decimal for a double.
[[nodiscard]] inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace adapt::util
