#pragma once

// Dense Levenberg-Marquardt for small problems (a handful of parameters,
// up to a few thousand residuals). The Jacobian is taken by central
// differences unless the caller supplies one.
//
// Each iteration solves (J^T J + lambda diag(J^T J)) dx = -J^T r. A trial
// step is accepted only if it lowers the cost 1/2 |r|^2; otherwise lambda is
// raised and the step retried, so accepted iterates are strictly decreasing.

#include "jjcircuit/error.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

namespace jjcircuit::lsq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;

struct Options {
    int max_iterations = 500;
    double x_tol = 1e-8;          // relative step size
    double rms_change_tol = 0.0;  // absolute change of rms residual between accepted steps
    double g_tol = 1e-15;         // inf-norm of J^T r, scaled
    double initial_lambda = 1e-3;
    double fd_step = 1e-6;        // relative central-difference step
    double rank_tol = 1e-10;      // relative pivot threshold for rank detection
};

enum class Status { converged_x, converged_rms, converged_gradient, zero_residual, max_iterations };

inline const char* to_string(Status s) {
    switch (s) {
    case Status::converged_x: return "relative step below x_tol";
    case Status::converged_rms: return "rms change below tolerance";
    case Status::converged_gradient: return "gradient below g_tol";
    case Status::zero_residual: return "zero residual";
    case Status::max_iterations: return "iteration cap reached";
    }
    return "unknown";
}

struct Result {
    Vector x;
    Vector residuals;
    Matrix jacobian;      // at x
    double cost = 0.0;    // 1/2 |r|^2
    int iterations = 0;   // outer iterations, accepted or not
    int accepted_steps = 0;
    Status status = Status::max_iterations;

    bool converged() const { return status != Status::max_iterations; }
    double rms() const {
        return residuals.size() ? std::sqrt(2.0 * cost / static_cast<double>(residuals.size())) : 0.0;
    }
};

inline Matrix numeric_jacobian(const ResidualFn& f, const Vector& x, const Vector& r0, double rel_step) {
    Matrix j(r0.size(), x.size());
    Vector xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = rel_step * std::max(std::abs(x(i)), 1.0);
        xp(i) = x(i) + h;
        const Vector rp = f(xp);
        xp(i) = x(i) - h;
        const Vector rm = f(xp);
        xp(i) = x(i);
        // One-sided near a wall.
        if (rp.allFinite() && rm.allFinite()) {
            j.col(i) = (rp - rm) / (2.0 * h);
        } else if (rm.allFinite()) {
            j.col(i) = (r0 - rm) / h;
        } else {
            j.col(i) = (rp - r0) / h;
        }
    }
    return j;
}

inline int jacobian_rank(const Matrix& j, double rel_tol) {
    Eigen::ColPivHouseholderQR<Matrix> qr(j);
    qr.setThreshold(rel_tol);
    return static_cast<int>(qr.rank());
}

// Throws singular_jacobian_error when J loses rank at the start point or at
// any accepted iterate.
inline Result levenberg_marquardt(const ResidualFn& residual, Vector x0, const Options& opt = {},
                                  const JacobianFn& jacobian = {}) {
    auto jac = [&](const Vector& x, const Vector& r) {
        return jacobian ? jacobian(x) : numeric_jacobian(residual, x, r, opt.fd_step);
    };
    const Eigen::Index p = x0.size();

    Result res;
    res.x = std::move(x0);
    res.residuals = residual(res.x);
    if (res.residuals.size() < p) {
        throw singular_jacobian_error("fewer residuals than parameters");
    }
    res.cost = 0.5 * res.residuals.squaredNorm();
    if (res.cost == 0.0) {
        res.jacobian = jac(res.x, res.residuals);
        res.status = Status::zero_residual;
        return res;
    }
    res.jacobian = jac(res.x, res.residuals);
    if (jacobian_rank(res.jacobian, opt.rank_tol) < p) {
        throw singular_jacobian_error("Jacobian is rank deficient at the initial point");
    }

    Matrix jtj = res.jacobian.transpose() * res.jacobian;
    Vector grad = res.jacobian.transpose() * res.residuals;
    double lambda = opt.initial_lambda;
    double nu = 2.0;

    for (res.iterations = 1; res.iterations <= opt.max_iterations; ++res.iterations) {
        if (grad.lpNorm<Eigen::Infinity>() <= opt.g_tol * std::max(1.0, res.cost)) {
            res.status = Status::converged_gradient;
            return res;
        }
        Matrix a = jtj;
        for (Eigen::Index i = 0; i < p; ++i) {
            a(i, i) += lambda * std::max(jtj(i, i), 1e-300);
        }
        const Vector dx = a.ldlt().solve(-grad);
        if (!dx.allFinite()) {
            lambda *= nu;
            nu *= 2.0;
            continue;
        }
        const Vector x_new = res.x + dx;
        const Vector r_new = residual(x_new);
        const double cost_new = r_new.allFinite() ? 0.5 * r_new.squaredNorm()
                                                  : std::numeric_limits<double>::infinity();
        if (cost_new < res.cost) {
            // Gain ratio against the linear model decides how fast lambda falls.
            const double predicted = -(dx.dot(grad) + 0.5 * dx.dot(jtj * dx));
            const double rho = predicted > 0.0 ? (res.cost - cost_new) / predicted : 1.0;
            lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
            nu = 2.0;

            const double rms_old = std::sqrt(2.0 * res.cost / static_cast<double>(r_new.size()));
            const double rms_new = std::sqrt(2.0 * cost_new / static_cast<double>(r_new.size()));
            res.x = x_new;
            res.residuals = r_new;
            res.cost = cost_new;
            ++res.accepted_steps;
            res.jacobian = jac(res.x, res.residuals);
            if (jacobian_rank(res.jacobian, opt.rank_tol) < p) {
                throw singular_jacobian_error("Jacobian became rank deficient during iteration");
            }
            jtj = res.jacobian.transpose() * res.jacobian;
            grad = res.jacobian.transpose() * res.residuals;

            if (res.cost == 0.0) {
                res.status = Status::zero_residual;
                return res;
            }
            if (dx.norm() <= opt.x_tol * (res.x.norm() + opt.x_tol)) {
                res.status = Status::converged_x;
                return res;
            }
            if (opt.rms_change_tol > 0.0 && std::abs(rms_old - rms_new) < opt.rms_change_tol) {
                res.status = Status::converged_rms;
                return res;
            }
        } else {
            // A rejected step this small means we sit at the minimum to
            // working precision.
            if (dx.norm() <= opt.x_tol * (res.x.norm() + opt.x_tol) * 1e-3) {
                res.status = Status::converged_x;
                return res;
            }
            lambda *= nu;
            nu *= 2.0;
        }
    }
    res.iterations = opt.max_iterations;
    res.status = Status::max_iterations;
    return res;
}

// Parameter covariance s^2 (J^T J)^-1 with s^2 = |r|^2 / (m - p). For
// residuals already divided by their sigma pass scale_by_residual = false.
inline Matrix covariance(const Result& r, bool scale_by_residual = true) {
    const Eigen::Index m = r.residuals.size();
    const Eigen::Index p = r.x.size();
    Matrix jtj = r.jacobian.transpose() * r.jacobian;
    Matrix cov = jtj.ldlt().solve(Matrix::Identity(p, p));
    if (scale_by_residual) {
        const double dof = static_cast<double>(std::max<Eigen::Index>(m - p, 1));
        cov *= 2.0 * r.cost / dof;
    }
    return cov;
}

} // namespace jjcircuit::lsq
