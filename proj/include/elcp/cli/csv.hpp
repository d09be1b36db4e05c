#pragma once

// Single-column ingestion from comma-separated text.
//
// Dialect: comma separator, '.' decimal point, optional header row (detected when the
// first row has a field that is neither numeric nor a missing-value marker), optional
// UTF-8 byte-order mark. Fields may be wrapped in double quotes.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "elcp/errors.hpp"

namespace elcp::cli {

enum class CsvFailure { Unreadable, NonNumeric, MissingValues, BadColumn };

/// Ingestion failure; `kind` selects the process exit code.
class CsvError : public InputError {
public:
    CsvError(CsvFailure kind, const std::string& what) : InputError(what), kind_(kind) {}

    CsvFailure kind() const noexcept { return kind_; }

private:
    CsvFailure kind_;
};

struct ColumnData {
    std::vector<double> values;
    std::string column_name;    ///< header name, or the index as text when there is no header
    std::size_t column_index = 0;
    bool has_header = false;
    std::size_t rows_read = 0;  ///< data rows, excluding the header
    std::size_t dropped = 0;    ///< rows removed by the missing-value policy
};

struct CsvOptions {
    std::string column;         ///< header name or 0-based index; empty selects column 0
    bool drop_missing = false;  ///< remove rows with missing values instead of aborting
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    for (auto& f : fields) {
        const auto b = f.find_first_not_of(" \t\r");
        const auto e = f.find_last_not_of(" \t\r");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return fields;
}

inline bool is_missing(std::string_view s) {
    return s.empty() || s == "NA" || s == "na" || s == "N/A" || s == "NaN" || s == "nan" || s == "null";
}

inline std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<std::size_t> parse_index(std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace detail

inline ColumnData read_column(std::istream& in, const CsvOptions& options = {}) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        first = false;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        rows.push_back(detail::split_csv_line(line));
    }
    if (in.bad()) throw CsvError(CsvFailure::Unreadable, "read error");
    if (rows.empty()) throw CsvError(CsvFailure::NonNumeric, "input contains no rows");

    ColumnData out;
    for (const auto& f : rows.front())
        if (!detail::is_missing(f) && !detail::parse_double(f)) out.has_header = true;

    if (options.column.empty()) {
        out.column_index = 0;
    } else if (out.has_header) {
        const auto& header = rows.front();
        std::optional<std::size_t> found;
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == options.column) found = i;
        if (!found) found = detail::parse_index(options.column);
        if (!found) throw CsvError(CsvFailure::BadColumn, "no column named '" + options.column + "'");
        out.column_index = *found;
    } else {
        const auto idx = detail::parse_index(options.column);
        if (!idx)
            throw CsvError(CsvFailure::BadColumn,
                           "input has no header row; select the column by 0-based index, not '" + options.column + "'");
        out.column_index = *idx;
    }
    if (out.has_header) {
        if (out.column_index >= rows.front().size())
            throw CsvError(CsvFailure::BadColumn, "column index " + std::to_string(out.column_index) +
                                                      " is out of range (header has " +
                                                      std::to_string(rows.front().size()) + " fields)");
        out.column_name = rows.front()[out.column_index];
    } else {
        out.column_name = std::to_string(out.column_index);
    }

    const std::size_t start = out.has_header ? 1 : 0;
    std::vector<std::size_t> missing_rows;
    for (std::size_t i = start; i < rows.size(); ++i) {
        const std::size_t line_no = i + 1;
        ++out.rows_read;
        const std::string field = out.column_index < rows[i].size() ? rows[i][out.column_index] : std::string();
        if (detail::is_missing(field)) {
            missing_rows.push_back(line_no);
            continue;
        }
        const auto v = detail::parse_double(field);
        if (!v)
            throw CsvError(CsvFailure::NonNumeric, "line " + std::to_string(line_no) + ": column '" +
                                                       out.column_name + "' holds non-numeric value '" + field + "'");
        out.values.push_back(*v);
    }
    if (!missing_rows.empty() && !options.drop_missing)
        throw CsvError(CsvFailure::MissingValues,
                       std::to_string(missing_rows.size()) + " missing value(s) in column '" + out.column_name +
                           "' (first at line " + std::to_string(missing_rows.front()) +
                           "); pass --drop-missing to remove those rows");
    out.dropped = missing_rows.size();
    if (out.values.empty()) throw CsvError(CsvFailure::NonNumeric, "column '" + out.column_name + "' has no values");
    return out;
}

inline ColumnData read_column(const std::string& path, const CsvOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw CsvError(CsvFailure::Unreadable, "cannot open '" + path + "'");
    return read_column(in, options);
}

/// One value per line under header `name`, written with round-trip precision.
inline std::string write_column(const std::vector<double>& values, const std::string& name = "x") {
    std::ostringstream os;
    os.precision(17);
    os << name << '\n';
    for (double v : values) os << v << '\n';
    return os.str();
}

}  // namespace elcp::cli
