#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "popsynth/popsynth.hpp"

namespace testutil {

using namespace popsynth;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

/// Unique scratch directory per test, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("popsynth_test_" + tag + "_" + std::to_string(counter++) + "_" +
                 std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string dir() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

/// Random schema with a mix of numeric (some integer-valued), binary and
/// categorical columns.
inline SurveySchema random_schema(CounterRng& rng) {
    SurveySchema schema;
    const std::size_t columns = 1 + rng.next_below(5);
    for (std::size_t c = 0; c < columns; ++c) {
        ColumnSpec col;
        col.name = "col" + std::to_string(c);
        const auto pick = rng.next_below(3);
        if (pick == 0) {
            col.kind = ColumnKind::numeric;
            col.numeric_min = std::floor(rng.next_uniform(-50.0, 0.0));
            col.numeric_max = col.numeric_min + std::floor(rng.next_uniform(1.0, 100.0)) + 1.0;
            col.integer_valued = rng.next_below(2) == 0;
        } else if (pick == 1) {
            col.kind = ColumnKind::binary;
            col.categories = {"a0", "a1"};
        } else {
            col.kind = ColumnKind::categorical;
            const std::size_t cats = 2 + rng.next_below(5);
            for (std::size_t k = 0; k < cats; ++k)
                col.categories.push_back("v" + std::to_string(k));
        }
        schema.columns.push_back(std::move(col));
    }
    schema.validate();
    return schema;
}

inline SurveyTable random_table(const SurveySchema& schema, std::size_t rows, CounterRng& rng) {
    SurveyTable table(schema);
    std::vector<double> cells(schema.columns.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < schema.columns.size(); ++c) {
            const ColumnSpec& col = schema.columns[c];
            if (col.is_numeric()) {
                double v = rng.next_uniform(col.numeric_min, col.numeric_max);
                if (col.integer_valued) v = std::floor(v + 0.5);
                if (v > col.numeric_max) v = col.numeric_max;
                cells[c] = v;
            } else {
                cells[c] = static_cast<double>(rng.next_below(col.categories.size()));
            }
        }
        table.append_row(cells);
    }
    return table;
}

/// Single 2-category column with class weights [p, 1-p]; the toy training
/// distribution.
inline SurveyTable toy_table(double p_first, std::size_t rows, std::uint64_t seed) {
    SurveySchema schema;
    ColumnSpec col;
    col.name = "cls";
    col.kind = ColumnKind::binary;
    col.categories = {"heavy", "light"};
    schema.columns.push_back(col);
    SurveyTable table(schema);
    CounterRng rng(seed);
    for (std::size_t r = 0; r < rows; ++r)
        table.append_row({rng.next_double() < p_first ? 0.0 : 1.0});
    return table;
}

inline std::vector<double> category_frequencies(const SurveyTable& table, std::size_t col) {
    std::vector<double> freq(table.schema().columns[col].category_count(), 0.0);
    for (std::size_t r = 0; r < table.row_count(); ++r)
        freq[static_cast<std::size_t>(table.category_at(r, col))] +=
            1.0 / static_cast<double>(table.row_count());
    return freq;
}

}  // namespace testutil
