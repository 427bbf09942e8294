#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "sawres/errors.hpp"

namespace sawres
{

struct LmOptions
{
    int max_iter = 200;
    /// Stop when the RMS model change of an accepted step is below this.
    double step_tolerance = 1e-10;
    /// Stop when an accepted step lowers the cost by less than this fraction.
    double cost_tolerance = 1e-15;
    /// Stop when every Jacobian column is this close to orthogonal to the residual.
    double gradient_tolerance = 1e-12;
    double initial_damping = 1e-3;
    double damping_up = 10.0;
    double damping_down = 0.3;
};

enum class LmStop
{
    step,
    cost,
    gradient,
    max_iter,
    damping_overflow,
};

struct LmSummary
{
    Eigen::VectorXd x;
    Eigen::VectorXd residual;
    Eigen::MatrixXd jacobian;
    double cost = 0.0; // 0.5 |r|^2
    int iterations = 0;
    LmStop stop = LmStop::max_iter;
    std::vector<double> cost_history; // one entry per accepted step, plus the start

    /// A damping overflow counts as converged when no column of J has a
    /// meaningful projection on r: no step can lower the cost any further.
    bool converged(double stall_gradient_tolerance = 1e-6) const
    {
        if (stop == LmStop::max_iter)
            return false;
        return stop != LmStop::damping_overflow || gradient_cosine() <= stall_gradient_tolerance;
    }

    /// max_j |J_j . r| / (|J_j| |r|); 0 for an exact fit.
    double gradient_cosine() const
    {
        const double rnorm = residual.norm();
        if (rnorm == 0.0)
            return 0.0;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < jacobian.cols(); ++j)
        {
            const double cnorm = jacobian.col(j).norm();
            if (cnorm > 0.0)
                worst = std::max(worst, std::abs(jacobian.col(j).dot(residual)) / (cnorm * rnorm));
        }
        return worst;
    }
};

/// Damped Gauss-Newton with Marquardt's diagonal scaling.
///
/// `evaluate(x, r, J)` fills the residual vector and, when `J` is non-null,
/// the Jacobian dr/dx. Columns are scaled by the running maximum of their
/// norms, so parameters of very different magnitude share one damping.
template <typename Evaluate>
LmSummary levenberg_marquardt(Evaluate &&evaluate, Eigen::VectorXd x0, const LmOptions &options = {})
{
    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    LmSummary out;
    out.x = std::move(x0);
    evaluate(out.x, out.residual, &out.jacobian);
    if (!out.residual.allFinite() || !out.jacobian.allFinite())
        throw DegenerateFitError("non-finite residual or Jacobian at the starting point");

    const Eigen::Index n = out.x.size();
    const double rows = static_cast<double>(std::max<Eigen::Index>(out.residual.size(), 1));
    VectorXd col_scale = out.jacobian.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < n; ++j)
        if (!(col_scale[j] > 0.0))
            throw DegenerateFitError("parameter " + std::to_string(j) + " does not influence the residual");

    out.cost = 0.5 * out.residual.squaredNorm();
    out.cost_history.push_back(out.cost);
    double lambda = options.initial_damping;
    VectorXd r_trial;

    for (out.iterations = 0; out.iterations < options.max_iter; ++out.iterations)
    {
        if (out.gradient_cosine() <= options.gradient_tolerance)
        {
            out.stop = LmStop::gradient;
            return out;
        }

        col_scale = col_scale.cwiseMax(out.jacobian.colwise().norm().transpose());
        const VectorXd inv_scale = col_scale.cwiseInverse();
        const MatrixXd js = out.jacobian * inv_scale.asDiagonal();
        const MatrixXd normal = js.transpose() * js;
        const VectorXd rhs = -(js.transpose() * out.residual);

        bool accepted = false;
        while (!accepted)
        {
            if (lambda > 1e20)
            {
                out.stop = LmStop::damping_overflow;
                return out;
            }
            MatrixXd damped = normal;
            damped.diagonal().array() += lambda;
            Eigen::LDLT<MatrixXd> ldlt(damped);
            const VectorXd y = ldlt.solve(rhs);
            if (ldlt.info() != Eigen::Success || !y.allFinite())
            {
                lambda *= options.damping_up;
                continue;
            }
            const VectorXd x_trial = out.x + inv_scale.cwiseProduct(y);
            evaluate(x_trial, r_trial, nullptr);
            const double cost_trial = r_trial.allFinite() ? 0.5 * r_trial.squaredNorm() : HUGE_VAL;
            if (!(cost_trial < out.cost))
            {
                lambda *= options.damping_up;
                continue;
            }

            accepted = true;
            const double reduction = (out.cost - cost_trial) / out.cost;
            const double model_change = (js * y).norm() / std::sqrt(rows);
            out.x = x_trial;
            out.cost = cost_trial;
            evaluate(out.x, out.residual, &out.jacobian);
            out.cost_history.push_back(out.cost);
            lambda = std::max(lambda * options.damping_down, 1e-15);

            if (model_change <= options.step_tolerance)
            {
                out.stop = LmStop::step;
                ++out.iterations;
                return out;
            }
            if (reduction <= options.cost_tolerance)
            {
                out.stop = LmStop::cost;
                ++out.iterations;
                return out;
            }
        }
    }
    out.stop = LmStop::max_iter;
    return out;
}

/// Linearised covariance s^2 (J^T J)^-1 with s^2 = |r|^2 / (m - n).
/// Throws DegenerateFitError if J^T J is singular.
inline Eigen::MatrixXd linearized_covariance(const Eigen::MatrixXd &jacobian, const Eigen::VectorXd &residual)
{
    const Eigen::Index m = jacobian.rows();
    const Eigen::Index n = jacobian.cols();
    const double dof = static_cast<double>(m - n);
    const double s2 = dof > 0 ? residual.squaredNorm() / dof : 0.0;

    Eigen::VectorXd scale = jacobian.colwise().norm().transpose();
    if ((scale.array() <= 0.0).any())
        throw DegenerateFitError("singular normal equations: a parameter has zero sensitivity");
    const Eigen::VectorXd inv_scale = scale.cwiseInverse();
    const Eigen::MatrixXd js = jacobian * inv_scale.asDiagonal();
    const Eigen::MatrixXd normal = js.transpose() * js;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 1e-14 * normal.diagonal().maxCoeff()).all())
        throw DegenerateFitError("singular normal equations");
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
    return s2 * inv_scale.asDiagonal() * inv * inv_scale.asDiagonal();
}

} // namespace sawres
