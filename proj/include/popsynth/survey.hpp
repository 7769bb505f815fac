#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "popsynth/errors.hpp"
#include "popsynth/rng.hpp"

namespace popsynth {

enum class ColumnKind { numeric, binary, categorical };

inline const char* column_kind_name(ColumnKind k) {
    switch (k) {
        case ColumnKind::numeric: return "numeric";
        case ColumnKind::binary: return "binary";
        case ColumnKind::categorical: return "categorical";
    }
    return "unknown";
}

inline ColumnKind column_kind_from_name(const std::string& s) {
    if (s == "numeric") return ColumnKind::numeric;
    if (s == "binary") return ColumnKind::binary;
    if (s == "categorical") return ColumnKind::categorical;
    fail(ErrorCode::BadValue, "unknown column kind '" + s + "'");
}

/// One survey attribute. Category labels are restricted to [A-Za-z0-9_] so
/// the CSV dialect never needs quoting.
struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::vector<std::string> categories;  // empty for numeric
    double numeric_min = 0.0;
    double numeric_max = 0.0;
    bool integer_valued = false;  // numeric only: decoded values round to integers

    std::size_t category_count() const { return categories.size(); }

    bool is_numeric() const { return kind == ColumnKind::numeric; }

    int category_index(const std::string& label) const {
        for (std::size_t i = 0; i < categories.size(); ++i)
            if (categories[i] == label) return static_cast<int>(i);
        return -1;
    }
};

/// Bin index for a numeric value under equal-width binning over [min, max];
/// the top edge folds into the last bin. Shared by eval vectors and the
/// analytic surrogate marginals so the two are always comparable.
inline std::size_t numeric_bin(double v, double min, double max, std::size_t bins) {
    if (v <= min) return 0;
    if (v >= max) return bins - 1;
    const auto idx = static_cast<std::size_t>((v - min) / (max - min) * static_cast<double>(bins));
    return idx >= bins ? bins - 1 : idx;
}

inline bool valid_label(const std::string& s) {
    if (s.empty()) return false;
    for (unsigned char c : s)
        if (!std::isalnum(c) && c != '_') return false;
    return true;
}

inline void validate_column(const ColumnSpec& col) {
    require(valid_label(col.name), ErrorCode::BadValue,
            "column name '" + col.name + "' must match [A-Za-z0-9_]+");
    switch (col.kind) {
        case ColumnKind::numeric:
            require(col.categories.empty(), ErrorCode::BadValue,
                    "numeric column '" + col.name + "' must not list categories");
            require(col.numeric_min < col.numeric_max, ErrorCode::BadValue,
                    "numeric column '" + col.name + "' needs min < max");
            break;
        case ColumnKind::binary:
            require(col.categories.size() == 2, ErrorCode::BadValue,
                    "binary column '" + col.name + "' needs exactly 2 categories");
            break;
        case ColumnKind::categorical:
            require(col.categories.size() >= 2, ErrorCode::BadValue,
                    "categorical column '" + col.name + "' needs at least 2 categories");
            break;
    }
    std::unordered_set<std::string> seen;
    for (const auto& label : col.categories) {
        require(valid_label(label), ErrorCode::BadValue,
                "category label '" + label + "' in '" + col.name + "' must match [A-Za-z0-9_]+");
        require(seen.insert(label).second, ErrorCode::BadValue,
                "duplicate category '" + label + "' in column '" + col.name + "'");
    }
}

/// Ordered list of columns; order is fixed for the life of a dataset.
struct SurveySchema {
    std::vector<ColumnSpec> columns;

    std::size_t column_count() const { return columns.size(); }

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i].name == name) return static_cast<int>(i);
        return -1;
    }

    void validate() const {
        std::unordered_set<std::string> names;
        for (const auto& col : columns) {
            validate_column(col);
            require(names.insert(col.name).second, ErrorCode::BadValue,
                    "duplicate column name '" + col.name + "'");
        }
    }

    bool operator==(const SurveySchema& other) const {
        if (columns.size() != other.columns.size()) return false;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            const auto& a = columns[i];
            const auto& b = other.columns[i];
            if (a.name != b.name || a.kind != b.kind || a.categories != b.categories ||
                a.numeric_min != b.numeric_min || a.numeric_max != b.numeric_max ||
                a.integer_valued != b.integer_valued)
                return false;
        }
        return true;
    }
};

inline nlohmann::json schema_to_json(const SurveySchema& schema) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& col : schema.columns) {
        nlohmann::json j;
        j["name"] = col.name;
        j["kind"] = column_kind_name(col.kind);
        if (col.is_numeric()) {
            j["min"] = col.numeric_min;
            j["max"] = col.numeric_max;
            if (col.integer_valued) j["integer"] = true;
        } else {
            j["categories"] = col.categories;
        }
        cols.push_back(std::move(j));
    }
    return nlohmann::json{{"columns", std::move(cols)}};
}

inline SurveySchema schema_from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("columns") && j["columns"].is_array(),
            ErrorCode::CorruptFile, "schema JSON needs a 'columns' array");
    SurveySchema schema;
    for (const auto& c : j["columns"]) {
        ColumnSpec col;
        col.name = c.at("name").get<std::string>();
        col.kind = column_kind_from_name(c.at("kind").get<std::string>());
        if (col.kind == ColumnKind::numeric) {
            col.numeric_min = c.at("min").get<double>();
            col.numeric_max = c.at("max").get<double>();
            col.integer_valued = c.value("integer", false);
        } else {
            col.categories = c.at("categories").get<std::vector<std::string>>();
        }
        schema.columns.push_back(std::move(col));
    }
    schema.validate();
    return schema;
}

inline SurveySchema load_schema(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoFailure, "cannot open schema file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::CorruptFile, "schema JSON parse error in " + path + ": " + e.what());
    }
    return schema_from_json(j);
}

inline void save_schema(const SurveySchema& schema, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoFailure, "cannot write schema file " + path);
    out << schema_to_json(schema).dump(2) << "\n";
}

/// Fingerprint of a schema used by checkpoints: FNV-1a of the canonical
/// (compact) JSON rendering.
inline std::uint64_t schema_fingerprint(const SurveySchema& schema) {
    return fnv1a64(schema_to_json(schema).dump());
}

/// Mixed-type table. Cells are stored as doubles: the value itself for
/// numeric columns, the category index for categorical/binary columns.
class SurveyTable {
public:
    SurveyTable() = default;
    explicit SurveyTable(SurveySchema schema) : schema_(std::move(schema)) {
        schema_.validate();
    }

    const SurveySchema& schema() const { return schema_; }
    std::size_t row_count() const { return rows_; }
    std::size_t column_count() const { return schema_.columns.size(); }
    bool empty() const { return rows_ == 0; }

    double numeric_at(std::size_t row, std::size_t col) const { return cell(row, col); }
    int category_at(std::size_t row, std::size_t col) const {
        return static_cast<int>(cell(row, col));
    }
    const std::string& label_at(std::size_t row, std::size_t col) const {
        return schema_.columns[col].categories[static_cast<std::size_t>(category_at(row, col))];
    }

    /// Appends a row of raw cells (numeric value or category index per
    /// column) after validating it against the schema.
    void append_row(const std::vector<double>& cells) {
        require(cells.size() == schema_.columns.size(), ErrorCode::SchemaMismatch,
                "row width does not match schema");
        for (std::size_t c = 0; c < cells.size(); ++c) validate_cell(c, cells[c]);
        cells_.insert(cells_.end(), cells.begin(), cells.end());
        ++rows_;
    }

    /// Row extraction used by splits and bootstrap draws; indices may repeat.
    SurveyTable select_rows(const std::vector<std::size_t>& indices) const {
        SurveyTable out(schema_);
        out.cells_.reserve(indices.size() * schema_.columns.size());
        for (std::size_t idx : indices) {
            require(idx < rows_, ErrorCode::OutOfRange, "row index out of range");
            const double* row = cells_.data() + idx * schema_.columns.size();
            out.cells_.insert(out.cells_.end(), row, row + schema_.columns.size());
        }
        out.rows_ = indices.size();
        return out;
    }

    bool operator==(const SurveyTable& other) const {
        return schema_ == other.schema_ && rows_ == other.rows_ && cells_ == other.cells_;
    }

private:
    double cell(std::size_t row, std::size_t col) const {
        return cells_[row * schema_.columns.size() + col];
    }

    void validate_cell(std::size_t col, double value) const {
        const ColumnSpec& spec = schema_.columns[col];
        if (spec.is_numeric()) {
            require(std::isfinite(value), ErrorCode::BadValue,
                    "non-finite numeric value in column '" + spec.name + "'");
            require(value >= spec.numeric_min && value <= spec.numeric_max, ErrorCode::OutOfRange,
                    "value " + std::to_string(value) + " outside [" +
                        std::to_string(spec.numeric_min) + ", " + std::to_string(spec.numeric_max) +
                        "] in column '" + spec.name + "'");
        } else {
            const int idx = static_cast<int>(value);
            require(value == static_cast<double>(idx) && idx >= 0 &&
                        idx < static_cast<int>(spec.categories.size()),
                    ErrorCode::BadValue, "bad category index in column '" + spec.name + "'");
        }
    }

    SurveySchema schema_;
    std::vector<double> cells_;
    std::size_t rows_ = 0;
};

}  // namespace popsynth
