#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "popsynth/errors.hpp"
#include "popsynth/rng.hpp"
#include "popsynth/sampling.hpp"

namespace popsynth {

/// Percentile interval around the mean of a bootstrapped statistic.
struct ConfidenceInterval {
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    int rounds = 0;
};

struct BootstrapSample {
    IndexList sample;       // n draws with replacement
    IndexList out_of_bag;   // input entries never drawn, in input order
};

/// n draws with replacement from the index list; out-of-bag entries are the
/// positions never drawn.
inline BootstrapSample bootstrap_resample(const IndexList& indices, std::uint64_t seed) {
    require(!indices.empty(), ErrorCode::EmptyInput, "bootstrap_resample needs indices");
    const std::size_t n = indices.size();
    BootstrapSample out;
    out.sample.reserve(n);
    std::vector<bool> drawn(n, false);
    CounterRng rng(derive_seed(seed, fnv1a64("bootstrap")));
    for (std::size_t i = 0; i < n; ++i) {
        const auto pos = static_cast<std::size_t>(rng.next_below(n));
        drawn[pos] = true;
        out.sample.push_back(indices[pos]);
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!drawn[i]) out.out_of_bag.push_back(indices[i]);
    return out;
}

inline double mean_error(const std::vector<double>& values) {
    require(!values.empty(), ErrorCode::EmptyList, "mean of empty list");
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(values.size());
}

/// Empirical quantile with linear interpolation at p * (n - 1) over the
/// sorted values.
inline double percentile(std::vector<double> values, double p) {
    require(!values.empty(), ErrorCode::EmptyList, "percentile of empty list");
    require(p >= 0.0 && p <= 1.0, ErrorCode::BadValue, "percentile p must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

inline ConfidenceInterval percentile_ci(const std::vector<double>& errors, double level = 0.95) {
    require(errors.size() >= 2, ErrorCode::TooFewSamples,
            "percentile_ci needs at least 2 values");
    require(level > 0.0 && level < 1.0, ErrorCode::BadValue, "level must be in (0, 1)");
    ConfidenceInterval ci;
    ci.level = level;
    ci.rounds = static_cast<int>(errors.size());
    ci.mean = mean_error(errors);
    const double alpha = (1.0 - level) / 2.0;
    ci.lower = percentile(errors, alpha);
    ci.upper = percentile(errors, 1.0 - alpha);
    return ci;
}

}  // namespace popsynth
