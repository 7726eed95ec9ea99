#pragma once

// Normal modes of the linearized array and ground-capacitance extraction.

#include "jjcircuit/circuit.hpp"
#include "jjcircuit/constants.hpp"
#include "jjcircuit/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace jjcircuit {

inline constexpr double default_zero_mode_threshold = two_pi * 1.0 * units::MHz; // rad/s

struct ModeSpectrum {
    std::vector<double> frequencies; // rad/s, ascending, zero modes removed
    Eigen::MatrixXd mode_vectors;    // column k belongs to frequencies[k]; v_i^T C v_j = delta_ij
    int n_zero_modes = 0;
};

namespace detail {

// Cholesky reduction of K v = w^2 C v to the standard problem A y = w^2 y,
// A = L^-1 K L^-T with C = L L^T.
struct ReducedProblem {
    Eigen::MatrixXd a;
    Eigen::MatrixXd l; // lower Cholesky factor of C
};

inline ReducedProblem reduce_generalized(const Eigen::MatrixXd& c, const Eigen::MatrixXd& k) {
    if (c.rows() != c.cols() || k.rows() != k.cols() || c.rows() != k.rows()) {
        throw input_error("capacitance and inverse-inductance matrices must be square and equal size");
    }
    if (c.rows() == 0) {
        throw input_error("empty circuit matrices");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) {
        throw numerical_error("capacitance matrix not SPD");
    }
    ReducedProblem r;
    r.l = llt.matrixL();
    const auto lower = r.l.triangularView<Eigen::Lower>();
    Eigen::MatrixXd x = lower.solve(k);                  // L^-1 K
    r.a = lower.solve(x.transpose()).transpose();        // L^-1 K L^-T
    r.a = 0.5 * (r.a + r.a.transpose()).eval();
    return r;
}

inline int count_zero_modes(const Eigen::VectorXd& omega_sq, double threshold) {
    const double cut = threshold * threshold;
    return static_cast<int>(std::count_if(omega_sq.begin(), omega_sq.end(),
                                          [cut](double v) { return v < cut; }));
}

} // namespace detail

// Solves K v = w^2 C v. Eigenvalues with w < zero_mode_threshold are counted
// and dropped. More than one zero mode means the circuit splits into
// disconnected pieces and is rejected.
inline ModeSpectrum solve_modes(const Eigen::MatrixXd& c_matrix, const Eigen::MatrixXd& l_inv_matrix,
                                double zero_mode_threshold = default_zero_mode_threshold) {
    const auto reduced = detail::reduce_generalized(c_matrix, l_inv_matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced.a);
    if (eig.info() != Eigen::Success) {
        throw numerical_error("symmetric eigensolver failed");
    }
    const Eigen::VectorXd& w2 = eig.eigenvalues(); // ascending
    ModeSpectrum out;
    out.n_zero_modes = detail::count_zero_modes(w2, zero_mode_threshold);
    if (out.n_zero_modes > 1) {
        throw numerical_error("degenerate circuit: " + std::to_string(out.n_zero_modes) + " zero modes");
    }
    const Eigen::Index first = out.n_zero_modes;
    const Eigen::Index count = w2.size() - first;
    out.frequencies.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index i = first; i < w2.size(); ++i) {
        out.frequencies.push_back(std::sqrt(w2(i)));
    }
    // v = L^-T y keeps v^T C v = y^T y = 1.
    out.mode_vectors = reduced.l.transpose().triangularView<Eigen::Upper>().solve(
        eig.eigenvectors().rightCols(count));
    return out;
}

// Closed-form dispersion of a chain with both ends grounded:
// w_k = w_0 sqrt[(1 - cos(pi k/N)) / (1 - cos(pi k/N) + C_0/(2 C_J))].
inline double analytic_dispersion(int k, const ArrayCircuitSpec& spec) {
    validate(spec);
    if (k < 0 || k > spec.n_junctions) {
        throw input_error("mode index k must be in [0, N]");
    }
    const double omega_0 = 1.0 / std::sqrt(spec.l_j * spec.c_j);
    const double x = 1.0 - std::cos(std::numbers::pi * k / spec.n_junctions);
    if (x == 0.0) {
        return 0.0;
    }
    return omega_0 * std::sqrt(x / (x + spec.c_0 / (2.0 * spec.c_j)));
}

// Numeric modes of the grounded chain (ends removed), rad/s ascending.
inline ModeSpectrum solve_grounded_modes(const ArrayCircuitSpec& spec,
                                         double zero_mode_threshold = default_zero_mode_threshold) {
    const auto g = grounded_chain_matrices(spec);
    return solve_modes(g.capacitance, g.inverse_inductance, zero_mode_threshold);
}

// Lowest nonzero mode of the full paddle circuit, Hz.
inline double forward_fundamental(const ArrayCircuitSpec& spec,
                                  double zero_mode_threshold = default_zero_mode_threshold) {
    const auto reduced = detail::reduce_generalized(build_capacitance_matrix(spec),
                                                    build_inverse_inductance_matrix(spec));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced.a, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw numerical_error("symmetric eigensolver failed");
    }
    const Eigen::VectorXd& w2 = eig.eigenvalues();
    const int zeros = detail::count_zero_modes(w2, zero_mode_threshold);
    if (zeros > 1) {
        throw numerical_error("degenerate circuit: " + std::to_string(zeros) + " zero modes");
    }
    if (zeros >= w2.size()) {
        throw numerical_error("circuit has no nonzero mode");
    }
    return rad_to_hz(std::sqrt(w2(zeros)));
}

struct C0FitOptions {
    double bracket_low = 1.0 * units::aF;
    double bracket_high = 10.0 * units::fF;
    double tolerance_hz = 1.0 * units::kHz;
    int max_iterations = 200;
    double zero_mode_threshold = default_zero_mode_threshold;
};

struct C0FitResult {
    double c_0 = 0.0;           // farad
    double residual_hz = 0.0;   // model minus measured at c_0
    int iterations = 0;
    double bracket_low = 0.0;   // final bracket, contains c_0
    double bracket_high = 0.0;
};

// Bisection on c_0 against the measured fundamental. The fundamental falls
// monotonically with c_0, so a straddling bracket always converges. Midpoints
// are geometric since the bracket spans several decades.
inline C0FitResult fit_c0(double measured_f1_hz, ArrayCircuitSpec spec, const C0FitOptions& opt = {}) {
    if (!(opt.bracket_low > 0.0) || !(opt.bracket_high > opt.bracket_low)) {
        throw input_error("c_0 bracket must satisfy 0 < low < high");
    }
    if (!(opt.tolerance_hz > 0.0)) {
        throw input_error("c_0 fit tolerance must be > 0");
    }
    auto model = [&](double c0) {
        spec.c_0 = c0;
        return forward_fundamental(spec, opt.zero_mode_threshold);
    };
    double lo = opt.bracket_low;
    double hi = opt.bracket_high;
    const double f_lo = model(lo);
    const double f_hi = model(hi);
    if (!(f_hi <= measured_f1_hz && measured_f1_hz <= f_lo)) {
        throw numerical_error("bracket error: f1 = " + std::to_string(measured_f1_hz * 1e-9) +
                              " GHz outside [" + std::to_string(f_hi * 1e-9) + ", " +
                              std::to_string(f_lo * 1e-9) + "] GHz spanned by c_0 in [" +
                              std::to_string(lo / units::aF) + ", " + std::to_string(hi / units::aF) +
                              "] aF; widen the bracket");
    }
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const double mid = std::sqrt(lo * hi);
        const double f_mid = model(mid);
        const double residual = f_mid - measured_f1_hz;
        if (f_mid > measured_f1_hz) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (std::abs(residual) < opt.tolerance_hz) {
            return C0FitResult{mid, residual, it, lo, hi};
        }
        if (!(lo < hi)) {
            break;
        }
    }
    throw numerical_error("no convergence: c_0 bisection did not reach " +
                          std::to_string(opt.tolerance_hz) + " Hz");
}

// (after - before) / before, e.g. the change in c_0 from etching.
inline double relative_change(double before, double after) {
    if (before == 0.0) {
        throw input_error("relative change undefined for a zero reference");
    }
    return (after - before) / before;
}

} // namespace jjcircuit
