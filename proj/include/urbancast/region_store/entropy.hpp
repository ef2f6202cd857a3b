#pragma once

#include <span>

namespace urbancast {

// Shannon entropy (nats) of softmax(embedding). The softmax is evaluated with
// max-subtraction, so the result is invariant to adding a constant to every
// component. Range is [0, ln D].
//
// Throws DimensionError on an empty vector and InputError on a non-finite
// component.
double region_entropy(std::span<const double> embedding);
double region_entropy(std::span<const float> embedding);

// Tolerance used when checking a cached entropy against a recomputation.
inline constexpr double kEntropyTolerance = 1e-9;

}  // namespace urbancast
