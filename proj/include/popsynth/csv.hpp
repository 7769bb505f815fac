#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "popsynth/errors.hpp"
#include "popsynth/survey.hpp"

namespace popsynth {

/// Shortest exact decimal rendering of a double ("35" for 35.0, "-0.3", ...).
inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& s, bool& ok) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    ok = res.ec == std::errc{} && res.ptr == s.data() + s.size();
    return v;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && (s[begin] == ' ' || s[begin] == '\t' || s[begin] == '\r')) ++begin;
    while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) --end;
    return s.substr(begin, end - begin);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

}  // namespace detail

/// Reads a comma-separated dataset. The header must match the schema column
/// names in order; category labels are unquoted; numerics parse as decimal
/// reals and are bounds-checked against the schema.
inline SurveyTable load_csv(const std::string& path, const SurveySchema& schema) {
    schema.validate();
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoFailure, "cannot open " + path);

    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::MissingColumn,
            path + ": missing header line");
    const auto header = detail::split_csv_line(line);
    require(header.size() == schema.columns.size(), ErrorCode::MissingColumn,
            path + ": header has " + std::to_string(header.size()) + " columns, schema expects " +
                std::to_string(schema.columns.size()));
    for (std::size_t c = 0; c < header.size(); ++c)
        require(header[c] == schema.columns[c].name, ErrorCode::MissingColumn,
                path + ": header column " + std::to_string(c) + " is '" + header[c] +
                    "', expected '" + schema.columns[c].name + "'");

    SurveyTable table(schema);
    std::vector<double> cells(schema.columns.size());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() && in.peek() == std::ifstream::traits_type::eof()) break;
        const auto fields = detail::split_csv_line(line);
        require(fields.size() == schema.columns.size(), ErrorCode::BadValue,
                path + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                    " fields");
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const ColumnSpec& spec = schema.columns[c];
            if (spec.is_numeric()) {
                bool ok = false;
                const double v = parse_number(fields[c], ok);
                require(ok, ErrorCode::BadValue,
                        path + ": row " + std::to_string(row) + ", column '" + spec.name +
                            "': unparseable number '" + fields[c] + "'");
                require(v >= spec.numeric_min && v <= spec.numeric_max, ErrorCode::OutOfRange,
                        path + ": row " + std::to_string(row) + ", column '" + spec.name +
                            "': value " + fields[c] + " out of bounds");
                cells[c] = v;
            } else {
                const int idx = spec.category_index(fields[c]);
                require(idx >= 0, ErrorCode::BadValue,
                        path + ": row " + std::to_string(row) + ", column '" + spec.name +
                            "': unknown category '" + fields[c] + "'");
                cells[c] = static_cast<double>(idx);
            }
        }
        table.append_row(cells);
        ++row;
    }
    return table;
}

/// Writes header plus one line per record. load_csv(save_csv(t)) == t.
inline void save_csv(const SurveyTable& table, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoFailure, "cannot write " + path);
    std::string line;
    const auto& cols = table.schema().columns;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) line += ',';
        line += cols[c].name;
    }
    out << line << '\n';
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        line.clear();
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) line += ',';
            if (cols[c].is_numeric())
                line += format_number(table.numeric_at(r, c));
            else
                line += table.label_at(r, c);
        }
        out << line << '\n';
    }
    require(out.good(), ErrorCode::IoFailure, "write failed for " + path);
}

}  // namespace popsynth
