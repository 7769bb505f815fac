#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "popsynth/errors.hpp"
#include "popsynth/survey.hpp"

namespace popsynth {

/// Concatenated per-attribute relative frequencies of a table: one entry per
/// category for categorical columns, one per equal-width bin for numeric
/// columns. In joint mode there is a single block over the full
/// cross-product of (binned) attributes.
struct EvalVector {
    std::vector<double> values;
    std::vector<std::pair<std::string, std::size_t>> blocks;  // (attribute, width)
    std::string provenance;

    std::size_t size() const { return values.size(); }
};

enum class EvalMode { marginal, joint };

inline std::size_t column_cell_count(const ColumnSpec& col, std::size_t numeric_bins) {
    return col.is_numeric() ? numeric_bins : col.category_count();
}

inline std::size_t column_cell_index(const SurveyTable& table, std::size_t row, std::size_t col,
                                     std::size_t numeric_bins) {
    const ColumnSpec& spec = table.schema().columns[col];
    if (spec.is_numeric())
        return numeric_bin(table.numeric_at(row, col), spec.numeric_min, spec.numeric_max,
                           numeric_bins);
    return static_cast<std::size_t>(table.category_at(row, col));
}

inline EvalVector eval_vector(const SurveyTable& table, std::size_t numeric_bins = 10,
                              EvalMode mode = EvalMode::marginal,
                              std::string provenance = {}) {
    require(!table.empty(), ErrorCode::EmptyTable, "eval_vector needs rows");
    require(numeric_bins >= 1, ErrorCode::BadValue, "need at least one numeric bin");
    EvalVector out;
    out.provenance = std::move(provenance);
    const auto& cols = table.schema().columns;
    const double n = static_cast<double>(table.row_count());

    if (mode == EvalMode::marginal) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const std::size_t width = column_cell_count(cols[c], numeric_bins);
            std::vector<double> counts(width, 0.0);
            for (std::size_t r = 0; r < table.row_count(); ++r)
                counts[column_cell_index(table, r, c, numeric_bins)] += 1.0;
            out.blocks.emplace_back(cols[c].name, width);
            for (double count : counts) out.values.push_back(count / n);
        }
    } else {
        std::size_t total = 1;
        for (const auto& col : cols) total *= column_cell_count(col, numeric_bins);
        std::vector<double> counts(total, 0.0);
        for (std::size_t r = 0; r < table.row_count(); ++r) {
            std::size_t cell = 0;
            for (std::size_t c = 0; c < cols.size(); ++c)
                cell = cell * column_cell_count(cols[c], numeric_bins) +
                       column_cell_index(table, r, c, numeric_bins);
            counts[cell] += 1.0;
        }
        out.blocks.emplace_back("joint", total);
        out.values.reserve(total);
        for (double count : counts) out.values.push_back(count / n);
    }
    return out;
}

/// Builds the marginal-mode EvalVector a table drawn exactly from
/// `marginals` would converge to; comparable against eval_vector output.
inline EvalVector eval_vector_from_marginals(const SurveySchema& schema,
                                             const std::vector<std::vector<double>>& marginals,
                                             std::string provenance = {}) {
    require(marginals.size() == schema.columns.size(), ErrorCode::LengthMismatch,
            "one marginal vector per column required");
    EvalVector out;
    out.provenance = std::move(provenance);
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        out.blocks.emplace_back(schema.columns[c].name, marginals[c].size());
        out.values.insert(out.values.end(), marginals[c].begin(), marginals[c].end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Error metrics over frequency vectors
// ---------------------------------------------------------------------------

inline double mae(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), ErrorCode::LengthMismatch, "mae length mismatch");
    require(!x.empty(), ErrorCode::EmptyInput, "mae of empty vectors");
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) total += std::abs(x[i] - y[i]);
    return total / static_cast<double>(x.size());
}

inline double mse(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), ErrorCode::LengthMismatch, "mse length mismatch");
    require(!x.empty(), ErrorCode::EmptyInput, "mse of empty vectors");
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        total += d * d;
    }
    return total / static_cast<double>(x.size());
}

inline double rmse(const std::vector<double>& x, const std::vector<double>& y) {
    return std::sqrt(mse(x, y));
}

inline double mae(const EvalVector& x, const EvalVector& y) { return mae(x.values, y.values); }
inline double mse(const EvalVector& x, const EvalVector& y) { return mse(x.values, y.values); }
inline double rmse(const EvalVector& x, const EvalVector& y) { return rmse(x.values, y.values); }

/// MAE/MSE/RMSE bundle; rmse == sqrt(mse) by construction.
struct ErrorTriple {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
};

inline ErrorTriple error_triple(const EvalVector& x, const EvalVector& y) {
    ErrorTriple t;
    t.mae = mae(x, y);
    t.mse = mse(x, y);
    t.rmse = std::sqrt(t.mse);
    return t;
}

/// Half the L1 distance between two probability vectors.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    require(p.size() == q.size(), ErrorCode::LengthMismatch, "total_variation length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
    return 0.5 * total;
}

}  // namespace popsynth
