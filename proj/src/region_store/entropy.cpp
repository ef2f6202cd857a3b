#include "urbancast/region_store/entropy.hpp"

#include <algorithm>
#include <cmath>

#include "urbancast/errors.hpp"

namespace urbancast {

namespace {

template <typename T>
double softmax_entropy(std::span<const T> z) {
    if (z.empty()) throw DimensionError("region_entropy: empty embedding");
    double top = -INFINITY;
    for (T v : z) {
        if (!std::isfinite(static_cast<double>(v))) {
            throw InputError("region_entropy: non-finite embedding component");
        }
        top = std::max(top, static_cast<double>(v));
    }
    // H = ln S - sum_i e_i (z_i - max) / S with e_i = exp(z_i - max).
    double sum = 0.0;
    double weighted = 0.0;
    for (T v : z) {
        const double shifted = static_cast<double>(v) - top;
        const double e = std::exp(shifted);
        sum += e;
        weighted += e * shifted;
    }
    const double h = std::log(sum) - weighted / sum;
    return std::clamp(h, 0.0, std::log(static_cast<double>(z.size())));
}

}  // namespace

double region_entropy(std::span<const double> embedding) { return softmax_entropy(embedding); }

double region_entropy(std::span<const float> embedding) { return softmax_entropy(embedding); }

}  // namespace urbancast
