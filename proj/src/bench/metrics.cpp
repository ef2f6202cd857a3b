#include "urbancast/bench/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "urbancast/errors.hpp"

namespace urbancast {

Metrics compute_metrics(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size()) {
        throw DimensionError("metrics: " + std::to_string(predictions.size()) + " predictions for " +
                             std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) throw DimensionError("metrics: empty input");
    const double n = static_cast<double>(labels.size());
    double mean = 0.0;
    for (double y : labels) mean += y;
    mean /= n;

    double ss_res = 0.0;
    double abs_sum = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double r = labels[i] - predictions[i];
        ss_res += r * r;
        abs_sum += std::abs(r);
        ss_tot += (labels[i] - mean) * (labels[i] - mean);
    }
    Metrics m{ss_res / n, abs_sum / n, 0.0};
    if (ss_tot == 0.0) {
        m.r2 = ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    } else {
        m.r2 = 1.0 - ss_res / ss_tot;
    }
    return m;
}

}  // namespace urbancast
