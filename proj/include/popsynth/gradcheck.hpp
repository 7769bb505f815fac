#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "popsynth/errors.hpp"

namespace popsynth {

struct GradCheckEntry {
    std::size_t parameter = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    std::vector<GradCheckEntry> worst;  // sorted, largest error first

    bool passed() const { return max_rel_error < tolerance; }
};

/// Central-difference check of an analytic gradient. `loss_fn` must be a
/// deterministic function of the parameter vector.
template <typename LossFn>
GradCheckReport gradient_check(LossFn&& loss_fn, std::vector<double> params,
                               const std::vector<double>& analytic_grad, double epsilon = 1e-5,
                               double tolerance = 1e-4, std::size_t keep_worst = 8) {
    require(params.size() == analytic_grad.size(), ErrorCode::LengthMismatch,
            "gradient length does not match parameter length");
    GradCheckReport report;
    report.tolerance = tolerance;
    std::vector<GradCheckEntry> entries(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + epsilon;
        const double up = loss_fn(params);
        params[i] = saved - epsilon;
        const double down = loss_fn(params);
        params[i] = saved;

        const double numeric = (up - down) / (2.0 * epsilon);
        const double analytic = analytic_grad[i];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        entries[i] = {i, analytic, numeric, std::abs(analytic - numeric) / denom};
        report.max_rel_error = std::max(report.max_rel_error, entries[i].rel_error);
    }
    std::sort(entries.begin(), entries.end(),
              [](const GradCheckEntry& a, const GradCheckEntry& b) {
                  return a.rel_error > b.rel_error;
              });
    if (entries.size() > keep_worst) entries.resize(keep_worst);
    report.worst = std::move(entries);
    return report;
}

}  // namespace popsynth
