#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "popsynth/errors.hpp"
#include "popsynth/matrix.hpp"
#include "popsynth/rng.hpp"
#include "popsynth/survey.hpp"

namespace popsynth {

enum class BlockKind { one_hot, scaled_numeric };

struct Block {
    std::string column;
    BlockKind kind = BlockKind::one_hot;
    std::size_t offset = 0;
    std::size_t width = 0;
    double numeric_min = 0.0;  // scaled_numeric only
    double numeric_max = 0.0;
    bool integer_valued = false;
};

/// Contiguous tiling of the encoded row: one block per schema column, in
/// schema order. Retains the schema so decoding can rebuild labeled tables.
struct BlockLayout {
    SurveySchema schema;
    std::vector<Block> blocks;
    std::size_t total_width = 0;

    bool empty() const { return blocks.empty(); }
};

inline BlockLayout build_layout(const SurveySchema& schema) {
    schema.validate();
    BlockLayout layout;
    layout.schema = schema;
    std::size_t offset = 0;
    for (const auto& col : schema.columns) {
        Block block;
        block.column = col.name;
        block.offset = offset;
        if (col.is_numeric()) {
            block.kind = BlockKind::scaled_numeric;
            block.width = 1;
            block.numeric_min = col.numeric_min;
            block.numeric_max = col.numeric_max;
            block.integer_valued = col.integer_valued;
        } else {
            block.kind = BlockKind::one_hot;
            block.width = col.category_count();
        }
        offset += block.width;
        layout.blocks.push_back(std::move(block));
    }
    layout.total_width = offset;
    return layout;
}

/// Dense real encoding of a table plus the layout needed to invert it.
/// Rows of encoded real data are exact one-hots; rows of model output are
/// soft (probabilities within one-hot blocks).
struct EncodedMatrix {
    BlockLayout layout;
    Matrix data;
};

inline double scale_numeric(double v, double min, double max) {
    return 2.0 * (v - min) / (max - min) - 1.0;
}

inline double unscale_numeric(double e, double min, double max) {
    return min + (e + 1.0) * 0.5 * (max - min);
}

inline EncodedMatrix encode(const SurveyTable& table, const BlockLayout& layout) {
    require(table.schema() == layout.schema, ErrorCode::SchemaMismatch,
            "table schema does not match layout");
    EncodedMatrix out{layout, Matrix(table.row_count(), layout.total_width)};
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        for (std::size_t c = 0; c < layout.blocks.size(); ++c) {
            const Block& block = layout.blocks[c];
            if (block.kind == BlockKind::scaled_numeric) {
                out.data(r, block.offset) =
                    scale_numeric(table.numeric_at(r, c), block.numeric_min, block.numeric_max);
            } else {
                const auto j = static_cast<std::size_t>(table.category_at(r, c));
                out.data(r, block.offset + j) = 1.0;
            }
        }
    }
    return out;
}

/// Debug dump of the raw encoded reals, one CSV column per encoded
/// dimension (block name suffixed with the within-block index).
inline void dump_encoded_csv(const EncodedMatrix& matrix, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoFailure, "cannot write " + path);
    std::string line;
    for (const Block& block : matrix.layout.blocks) {
        for (std::size_t j = 0; j < block.width; ++j) {
            if (!line.empty()) line += ',';
            line += block.column;
            if (block.width > 1) line += "_" + std::to_string(j);
        }
    }
    out << line << '\n';
    char buf[64];
    for (std::size_t r = 0; r < matrix.data.rows(); ++r) {
        line.clear();
        for (std::size_t c = 0; c < matrix.data.cols(); ++c) {
            if (c) line += ',';
            auto res = std::to_chars(buf, buf + sizeof buf, matrix.data(r, c));
            line.append(buf, res.ptr);
        }
        out << line << '\n';
    }
}

enum class DecodeMode { argmax, sample };

/// Inverts an encoding back into a schema-valid table. Soft one-hot blocks
/// resolve by argmax (ties to the lowest index) or by sampling after
/// renormalizing the nonnegative entries; numeric entries are clamped to
/// [-1, 1] before the inverse affine map, and integer-valued columns round
/// half up.
inline SurveyTable decode(const EncodedMatrix& matrix, DecodeMode mode, std::uint64_t seed) {
    const BlockLayout& layout = matrix.layout;
    SurveyTable table(layout.schema);
    CounterRng rng(derive_seed(seed, fnv1a64("decode")));
    std::vector<double> row(layout.blocks.size());
    std::vector<double> weights;

    for (std::size_t r = 0; r < matrix.data.rows(); ++r) {
        for (std::size_t c = 0; c < layout.blocks.size(); ++c) {
            const Block& block = layout.blocks[c];
            const double* cell = matrix.data.row_ptr(r) + block.offset;
            if (block.kind == BlockKind::scaled_numeric) {
                double e = *cell;
                if (e < -1.0) e = -1.0;
                if (e > 1.0) e = 1.0;
                double v = unscale_numeric(e, block.numeric_min, block.numeric_max);
                if (block.integer_valued) v = std::floor(v + 0.5);
                if (v < block.numeric_min) v = block.numeric_min;
                if (v > block.numeric_max) v = block.numeric_max;
                row[c] = v;
            } else if (mode == DecodeMode::argmax) {
                std::size_t best = 0;
                for (std::size_t j = 1; j < block.width; ++j)
                    if (cell[j] > cell[best]) best = j;
                row[c] = static_cast<double>(best);
            } else {
                weights.assign(block.width, 0.0);
                double total = 0.0;
                for (std::size_t j = 0; j < block.width; ++j) {
                    if (cell[j] > 0.0) {
                        weights[j] = cell[j];
                        total += cell[j];
                    }
                }
                require(total > 0.0, ErrorCode::DegenerateBlock,
                        "no positive mass in block '" + block.column + "' at row " +
                            std::to_string(r));
                row[c] = static_cast<double>(rng.next_categorical(weights));
            }
        }
        table.append_row(row);
    }
    return table;
}

}  // namespace popsynth
