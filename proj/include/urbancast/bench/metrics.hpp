#pragma once

#include <span>

namespace urbancast {

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
    // 1 - SS_res / SS_tot. When the labels have zero variance: 1 for a
    // perfect fit, otherwise -infinity, which reports treat as a failure.
    double r2 = 0.0;
};

// Throws DimensionError on empty or unequal input.
Metrics compute_metrics(std::span<const double> predictions, std::span<const double> labels);

}  // namespace urbancast
