#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "popsynth/errors.hpp"
#include "popsynth/rng.hpp"
#include "popsynth/survey.hpp"

namespace popsynth {

using IndexList = std::vector<std::size_t>;

/// Rounding rule for all sample-size computations: round half up.
inline std::size_t round_count(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

/// A train/test partition of a table's row indices.
struct SplitHandle {
    IndexList train_indices;
    IndexList test_indices;
    std::uint64_t seed = 0;
};

/// Deterministic shuffled holdout split; |test| = round(test_fraction * n).
inline SplitHandle split_holdout(const SurveyTable& table, double test_fraction,
                                 std::uint64_t seed) {
    require(!table.empty(), ErrorCode::EmptyTable, "cannot split an empty table");
    require(test_fraction > 0.0 && test_fraction < 1.0, ErrorCode::BadValue,
            "test_fraction must be in (0, 1)");
    const std::size_t n = table.row_count();
    IndexList order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(derive_seed(seed, fnv1a64("split_holdout")));
    shuffle(order, rng);

    const std::size_t n_test = round_count(test_fraction * static_cast<double>(n));
    SplitHandle split;
    split.seed = seed;
    split.test_indices.assign(order.begin(), order.begin() + n_test);
    split.train_indices.assign(order.begin() + n_test, order.end());
    return split;
}

/// Uniform without-replacement draw of round(fraction * |indices|) indices.
/// fraction == 1 returns the input unchanged.
inline IndexList subsample(const IndexList& indices, double fraction, std::uint64_t seed) {
    require(!indices.empty(), ErrorCode::EmptyInput, "cannot subsample an empty index list");
    require(fraction > 0.0 && fraction <= 1.0, ErrorCode::BadValue,
            "fraction must be in (0, 1]");
    if (fraction == 1.0) return indices;

    const std::size_t k = round_count(fraction * static_cast<double>(indices.size()));
    IndexList work = indices;
    CounterRng rng(derive_seed(seed, fnv1a64("subsample")));
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(work.size() - i));
        std::swap(work[i], work[j]);
    }
    work.resize(k);
    return work;
}

/// k disjoint folds covering all indices; fold sizes differ by at most one.
/// Each pair is (train portion, validation fold).
inline std::vector<std::pair<IndexList, IndexList>> kfold(const IndexList& indices, int k,
                                                          std::uint64_t seed) {
    require(k >= 2 && static_cast<std::size_t>(k) <= indices.size(), ErrorCode::BadK,
            "k must satisfy 2 <= k <= |indices|");
    IndexList order = indices;
    CounterRng rng(derive_seed(seed, fnv1a64("kfold")));
    shuffle(order, rng);

    const std::size_t n = order.size();
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);

    std::vector<std::pair<IndexList, IndexList>> folds;
    folds.reserve(static_cast<std::size_t>(k));
    std::size_t start = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
        IndexList validation(order.begin() + start, order.begin() + start + len);
        IndexList train;
        train.reserve(n - len);
        train.insert(train.end(), order.begin(), order.begin() + start);
        train.insert(train.end(), order.begin() + start + len, order.end());
        folds.emplace_back(std::move(train), std::move(validation));
        start += len;
    }
    return folds;
}

}  // namespace popsynth
