#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Accelerated proximal gradient (FISTA) on the same unit-RMS-scaled lasso
// problem that lasso_fit solves, written independently of it. Returns
// coefficients on the original column scale.
inline Eigen::VectorXd lasso_proximal(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                                      double lambda, int max_iter = 200000, double tol = 1e-15) {
    const double n = static_cast<double>(design.rows());
    const Eigen::Index m = design.cols();
    const double ys = std::sqrt(response.squaredNorm() / n);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
    if (ys == 0.0) return out;

    Eigen::VectorXd scale(m);
    Eigen::MatrixXd x = design;
    for (Eigen::Index j = 0; j < m; ++j) {
        scale(j) = std::sqrt(design.col(j).squaredNorm() / n);
        if (scale(j) > 0.0) x.col(j) /= scale(j); else x.col(j).setZero();
    }
    const Eigen::VectorXd y = response / ys;
    const Eigen::MatrixXd gram = x.transpose() * x / n;
    const Eigen::VectorXd xty = x.transpose() * y / n;
    const double lipschitz = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().maxCoeff();
    const double step = 1.0 / std::max(lipschitz, 1e-12);

    auto prox = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd r(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double t = step * lambda;
            r(i) = v(i) > t ? v(i) - t : (v(i) < -t ? v(i) + t : 0.0);
        }
        return r;
    };

    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd z = w;
    double t = 1.0;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd grad = gram * z - xty;
        const Eigen::VectorXd next = prox(z - step * grad);
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = next + ((t - 1.0) / tn) * (next - w);
        const double change = (next - w).lpNorm<Eigen::Infinity>();
        w = next;
        t = tn;
        if (change < tol && it > 10) break;
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        if (scale(j) > 0.0) out(j) = w(j) * ys / scale(j);
    }
    return out;
}

}  // namespace oracle
