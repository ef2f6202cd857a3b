#include "urbancast/geotransformer/weights.hpp"

#include <cmath>
#include <string>

#include "urbancast/errors.hpp"

namespace urbancast {

namespace {

constexpr double kDegenerateMax = 1e-12;

Eigen::VectorXd ratio_to_max(const Eigen::VectorXd& v, const char* what) {
    double mx = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (!std::isfinite(v(j))) throw InputError(std::string(what) + ": non-finite value at slot " + std::to_string(j));
        if (v(j) < 0.0) throw InputError(std::string(what) + ": negative value at slot " + std::to_string(j));
        mx = std::max(mx, v(j));
    }
    if (mx < kDegenerateMax) return Eigen::VectorXd::Ones(v.size());
    return v / mx;
}

}  // namespace

Eigen::VectorXd spatial_weights(const Eigen::VectorXd& distances) {
    Eigen::VectorXd r = ratio_to_max(distances, "spatial_weights");
    if (r.size() > 0 && distances.maxCoeff() < kDegenerateMax) return r;
    return Eigen::VectorXd::Ones(r.size()) - r;
}

Eigen::VectorXd entropy_weights(const Eigen::VectorXd& entropies) {
    return ratio_to_max(entropies, "entropy_weights");
}

Eigen::VectorXd combined_weights(const Eigen::VectorXd& spatial, const Eigen::VectorXd& entropy, double alpha) {
    if (spatial.size() != entropy.size()) {
        throw DimensionError("combined_weights: lengths " + std::to_string(spatial.size()) + " and " +
                             std::to_string(entropy.size()));
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("combined_weights: alpha must lie in [0, 1]");
    if (alpha == 1.0) return spatial;
    if (alpha == 0.0) return entropy;
    return (alpha * spatial + (1.0 - alpha) * entropy).cwiseMin(1.0);
}

}  // namespace urbancast
