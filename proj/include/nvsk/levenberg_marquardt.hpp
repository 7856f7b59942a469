#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace nvsk {

/// Residual (and optionally Jacobian) callback for least squares:
/// minimize sum r_i(x)^2. When jacobian is non-null it must be filled with
/// d r_i / d x_j (rows = residuals).
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian)>;

/// Rejects trial parameter vectors outside the model's domain; rejected
/// steps are treated like cost increases (damping grows).
using ParameterGuard = std::function<bool(const Eigen::VectorXd& x)>;

struct LevenbergMarquardtOptions {
    int max_iterations = 200;
    double relative_step_tolerance = 1e-8;
    double initial_lambda = 1e-3;
};

struct LevenbergMarquardtResult {
    Eigen::VectorXd x;
    Eigen::MatrixXd covariance;  // s^2 (J^T J)^-1, s^2 = RSS / (m - n)
    double cost = 0.0;           // RSS
    double residual_rms = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling. Converged when the
/// accepted step satisfies |dx| <= tol * (|x| + tol), or the cost stops
/// decreasing at the damping limit. Does not throw on non-convergence:
/// callers inspect `converged` and decide.
LevenbergMarquardtResult levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd x0,
                                             int n_residuals,
                                             const LevenbergMarquardtOptions& options = {},
                                             const ParameterGuard& guard = {});

}  // namespace nvsk
