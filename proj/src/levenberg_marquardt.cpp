#include "nvsk/levenberg_marquardt.hpp"

#include <cmath>
#include <limits>

#include "nvsk/numfmt.hpp"

namespace nvsk {

LevenbergMarquardtResult levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd x0,
                                             int n_residuals,
                                             const LevenbergMarquardtOptions& options,
                                             const ParameterGuard& guard) {
    const Eigen::Index n = x0.size();
    const Eigen::Index m = n_residuals;
    LevenbergMarquardtResult out;
    out.x = std::move(x0);

    Eigen::VectorXd r(m);
    Eigen::MatrixXd jac(m, n);
    f(out.x, r, &jac);
    double cost = r.squaredNorm();
    double lambda = options.initial_lambda;

    Eigen::VectorXd trial_r(m);
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        Eigen::VectorXd diag = jtj.diagonal();
        for (Eigen::Index i = 0; i < n; ++i)
            if (!(diag(i) > 0.0)) diag(i) = 1e-30;

        bool accepted = false;
        Eigen::VectorXd step;
        while (lambda < 1e16) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * diag;
            step = a.ldlt().solve(-g);
            const Eigen::VectorXd trial = out.x + step;
            if (step.allFinite() && (!guard || guard(trial))) {
                f(trial, trial_r, nullptr);
                const double trial_cost = trial_r.squaredNorm();
                if (std::isfinite(trial_cost) && trial_cost <= cost) {
                    out.x = trial;
                    r = trial_r;
                    cost = trial_cost;
                    lambda = std::max(lambda * 0.3, 1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No descent at any damping: the current point is a stationary
            // point to working precision.
            out.converged = true;
            out.message = "no further descent";
            break;
        }
        f(out.x, r, &jac);
        const double tol = options.relative_step_tolerance;
        if (step.norm() <= tol * (out.x.norm() + tol)) {
            out.converged = true;
            out.message = "relative step below tolerance";
            ++it;
            break;
        }
    }
    if (!out.converged)
        out.message = "iteration limit reached after " + std::to_string(it) +
                      " iterations (cost " + format_g9(cost) + ", lambda " + format_g9(lambda) + ")";

    out.iterations = it;
    out.cost = cost;
    out.residual_rms = std::sqrt(cost / static_cast<double>(m));
    const double dof = static_cast<double>(std::max<Eigen::Index>(m - n, 1));
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
    out.covariance = (cost / dof) * cod.pseudoInverse();
    return out;
}

}  // namespace nvsk
