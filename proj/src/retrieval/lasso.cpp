#include "urbancast/retrieval/lasso.hpp"

#include <cmath>

#include "urbancast/errors.hpp"

namespace urbancast {

namespace {

double soft_threshold(double rho, double lambda) {
    if (rho > lambda) return rho - lambda;
    if (rho < -lambda) return rho + lambda;
    return 0.0;
}

}  // namespace

LassoResult lasso_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& response, double lambda,
                      const LassoOptions& options) {
    const Eigen::Index rows = design.rows();
    const Eigen::Index cols = design.cols();
    if (response.size() != rows) {
        throw DimensionError("lasso_fit: response length " + std::to_string(response.size()) +
                             " != design rows " + std::to_string(rows));
    }
    if (rows == 0) throw DimensionError("lasso_fit: empty design");
    if (!design.allFinite() || !response.allFinite() || !std::isfinite(lambda)) {
        throw InputError("lasso_fit: non-finite input");
    }
    if (lambda < 0.0) throw InputError("lasso_fit: negative lambda");

    const double n = static_cast<double>(rows);
    LassoResult result;
    result.coefficients = Eigen::VectorXd::Zero(cols);

    const double y_scale = std::sqrt(response.squaredNorm() / n);
    if (y_scale == 0.0 || cols == 0) {
        result.converged = true;
        result.objective.push_back(0.0);
        return result;
    }
    const Eigen::VectorXd y = response / y_scale;

    Eigen::VectorXd col_scale(cols);
    Eigen::MatrixXd x(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        col_scale(j) = std::sqrt(design.col(j).squaredNorm() / n);
        if (col_scale(j) > 0.0) {
            x.col(j) = design.col(j) / col_scale(j);
        } else {
            x.col(j).setZero();
        }
    }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(cols);
    Eigen::VectorXd residual = y;
    auto objective = [&] { return residual.squaredNorm() / (2.0 * n) + lambda * w.lpNorm<1>(); };
    result.objective.push_back(objective());

    for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (col_scale(j) == 0.0) continue;
            // Columns have (1/D)|x_j|^2 = 1, so the coordinate minimiser is a
            // plain soft-threshold of the partial correlation.
            const double rho = x.col(j).dot(residual) / n + w(j);
            const double updated = soft_threshold(rho, lambda);
            const double delta = updated - w(j);
            if (delta != 0.0) {
                residual -= delta * x.col(j);
                w(j) = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        result.sweeps = sweep + 1;
        result.objective.push_back(objective());
        if (max_change < options.tolerance) {
            result.converged = true;
            break;
        }
    }

    for (Eigen::Index j = 0; j < cols; ++j) {
        if (col_scale(j) > 0.0) result.coefficients(j) = w(j) * y_scale / col_scale(j);
    }
    return result;
}

}  // namespace urbancast
