#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace urbancast {

struct LassoOptions {
    double tolerance = 1e-8;       // stop when the largest coefficient change is below this
    std::size_t max_sweeps = 10000;
};

struct LassoResult {
    Eigen::VectorXd coefficients;  // original column scale
    std::size_t sweeps = 0;
    bool converged = false;
    // Objective in the standardised problem: before the first sweep, then
    // after every sweep.
    std::vector<double> objective;
};

// Cyclic coordinate-descent lasso with soft-thresholding.
//
// `design` is D x m (one candidate per column) and `response` has length D.
// Columns and the response are scaled to unit root-mean-square internally
// (no centering, no intercept), the problem
//
//     min_w (1/2D) |y~ - X~ w|^2 + lambda |w|_1
//
// is solved in that scale, and coefficients are mapped back so that
// design * coefficients approximates response. All-zero columns get a zero
// coefficient. Throws InputError on non-finite input or negative lambda and
// DimensionError when shapes disagree.
LassoResult lasso_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response, double lambda,
                      const LassoOptions& options = {});

}  // namespace urbancast
