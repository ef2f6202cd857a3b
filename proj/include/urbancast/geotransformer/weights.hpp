#pragma once

#include <Eigen/Dense>

namespace urbancast {

// W_S_j = 1 - d_j / max(d); all ones when max(d) < 1e-12.
// Throws InputError on negative or non-finite distances.
Eigen::VectorXd spatial_weights(const Eigen::VectorXd& distances);

// W_E_j = H_j / max(H); all ones when max(H) < 1e-12.
// Throws InputError on negative or non-finite entropies.
Eigen::VectorXd entropy_weights(const Eigen::VectorXd& entropies);

// alpha * W_S + (1 - alpha) * W_E. Throws DimensionError on a length
// mismatch and InputError for alpha outside [0, 1].
Eigen::VectorXd combined_weights(const Eigen::VectorXd& spatial, const Eigen::VectorXd& entropy, double alpha);

}  // namespace urbancast
