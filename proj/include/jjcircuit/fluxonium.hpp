#pragma once

// Fluxonium spectrum and the readout/coherence quantities derived from it.
//
// H = 4 E_C n^2 - E_J cos(phi - phi_ext) + E_L phi^2 / 2, all energies E/h in
// GHz. Moving the external flux into the cosine is a shift phi -> phi -
// phi_ext away from the form with (phi + phi_ext)^2 and leaves the spectrum
// unchanged; the harmonic part then never moves with flux.
//
// Basis: eigenstates of 4 E_C n^2 + E_L phi^2 / 2, frequency sqrt(8 E_L E_C),
//   phi = (2 E_C / E_L)^(1/4) (a + a^+),   n = i (E_L / 32 E_C)^(1/4) (a^+ - a).
// cos(phi - phi_ext) comes from the eigendecomposition of the truncated phi
// matrix, so it stays bounded by one whatever the truncation.

#include "jjcircuit/circuit.hpp"
#include "jjcircuit/constants.hpp"
#include "jjcircuit/error.hpp"
#include "jjcircuit/least_squares.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace jjcircuit::fluxonium {

inline constexpr int min_dim = 10;
inline constexpr int default_dim_cap = 400;
inline constexpr int auto_dim_start = 40;
inline constexpr int convergence_dim_step = 40;
inline constexpr int convergence_levels = 6;
inline constexpr double default_convergence_ghz = 1e-6; // 1 kHz

struct FluxoniumSolution {
    std::vector<double> energies; // GHz, ascending, energies[0] == 0
    Eigen::MatrixXd n_matrix;     // |<i|n|j>| over the kept levels
    int dim_used = 0;
    bool converged = false;
};

namespace detail {

struct Operators {
    Eigen::MatrixXd hamiltonian;
    Eigen::MatrixXd a_dag_minus_a; // n = i n_zpf (a^+ - a)
    double n_zpf = 0.0;
};

inline Operators build_operators(const FluxoniumParams& p, int dim) {
    validate(p);
    if (dim < min_dim) {
        throw input_error("fluxonium basis dimension must be >= " + std::to_string(min_dim));
    }
    const Eigen::Index d = dim;
    const double phi_zpf = std::pow(2.0 * p.e_c / p.e_l, 0.25);
    const double plasma = std::sqrt(8.0 * p.e_l * p.e_c);

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d); // annihilation
    for (Eigen::Index k = 1; k < d; ++k) {
        a(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    const Eigen::MatrixXd phi = phi_zpf * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> phi_eig(phi);
    const Eigen::VectorXd shifted_cos =
        (phi_eig.eigenvalues().array() - p.phi_ext).cos().matrix();
    const Eigen::MatrixXd& u = phi_eig.eigenvectors();
    const Eigen::MatrixXd cos_op = u * shifted_cos.asDiagonal() * u.transpose();

    Operators ops;
    ops.hamiltonian = -p.e_j * cos_op;
    for (Eigen::Index k = 0; k < d; ++k) {
        ops.hamiltonian(k, k) += plasma * (static_cast<double>(k) + 0.5);
    }
    ops.hamiltonian = 0.5 * (ops.hamiltonian + ops.hamiltonian.transpose()).eval();
    ops.a_dag_minus_a = a.transpose() - a;
    ops.n_zpf = std::pow(p.e_l / (32.0 * p.e_c), 0.25);
    return ops;
}

inline Eigen::VectorXd energies_only(const FluxoniumParams& p, int dim) {
    const auto ops = build_operators(p, dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ops.hamiltonian, Eigen::EigenvaluesOnly);
    Eigen::VectorXd e = eig.eigenvalues();
    return e.array() - e(0);
}

inline bool energies_agree(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tol) {
    const Eigen::Index n = std::min<Eigen::Index>({a.size(), b.size(), convergence_levels});
    for (Eigen::Index k = 0; k < n; ++k) {
        if (std::abs(a(k) - b(k)) >= tol) {
            return false;
        }
    }
    return true;
}

} // namespace detail

// Diagonalizes in a fixed basis of `dim` oscillator states and keeps the
// lowest dim/2 levels. With check_convergence the lowest six levels are
// compared against a basis 40 states larger.
inline FluxoniumSolution diagonalize(const FluxoniumParams& params, int dim, bool check_convergence = true,
                                     double tol_ghz = default_convergence_ghz) {
    const auto ops = detail::build_operators(params, dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ops.hamiltonian);
    if (eig.info() != Eigen::Success) {
        throw numerical_error("fluxonium eigensolver failed");
    }
    const Eigen::Index kept = dim / 2;
    const Eigen::VectorXd e = eig.eigenvalues();
    FluxoniumSolution sol;
    sol.dim_used = dim;
    sol.energies.resize(static_cast<std::size_t>(kept));
    for (Eigen::Index k = 0; k < kept; ++k) {
        sol.energies[static_cast<std::size_t>(k)] = e(k) - e(0);
    }
    const Eigen::MatrixXd v = eig.eigenvectors().leftCols(kept);
    sol.n_matrix = ops.n_zpf * (v.transpose() * ops.a_dag_minus_a * v).cwiseAbs();
    if (check_convergence) {
        const Eigen::VectorXd bigger = detail::energies_only(params, dim + convergence_dim_step);
        sol.converged = detail::energies_agree(e.array() - e(0), bigger, tol_ghz);
    }
    return sol;
}

// Basis size chosen by doubling from 40 until the lowest six levels move by
// less than tol_ghz when 40 states are added. Not converged at the cap is
// reported through the flag.
inline int converged_dim(const FluxoniumParams& params, double tol_ghz = default_convergence_ghz,
                         int dim_cap = default_dim_cap) {
    int dim = auto_dim_start;
    while (true) {
        const auto base = detail::energies_only(params, dim);
        const auto bigger = detail::energies_only(params, dim + convergence_dim_step);
        if (detail::energies_agree(base, bigger, tol_ghz) || dim >= dim_cap) {
            return dim;
        }
        dim = std::min(2 * dim, dim_cap);
    }
}

inline FluxoniumSolution diagonalize(const FluxoniumParams& params, double tol_ghz = default_convergence_ghz,
                                     int dim_cap = default_dim_cap) {
    return diagonalize(params, converged_dim(params, tol_ghz, dim_cap), true, tol_ghz);
}

// E_j - E_i in GHz.
inline double transition(const FluxoniumParams& params, int i, int j, int dim) {
    if (i < 0 || j < 0 || i >= dim / 2 || j >= dim / 2) {
        throw input_error("transition levels must lie below dim/2");
    }
    if (i == j) {
        return 0.0;
    }
    const auto e = detail::energies_only(params, dim);
    return e(j) - e(i);
}

struct SpectrumTable {
    std::vector<double> phi_ext;                   // rad
    std::vector<std::pair<int, int>> transitions;
    std::vector<std::vector<double>> freq_ghz;     // [phi index][transition index]
};

inline SpectrumTable spectrum_sweep(FluxoniumParams params, const std::vector<double>& phi_list,
                                    const std::vector<std::pair<int, int>>& transitions, int dim = 0) {
    if (dim == 0) {
        dim = converged_dim(params);
    }
    int top = 0;
    for (const auto& [i, j] : transitions) {
        if (i < 0 || j < 0) {
            throw input_error("transition levels must be non-negative");
        }
        top = std::max({top, i, j});
    }
    if (top >= dim / 2) {
        throw input_error("transition level " + std::to_string(top) + " above basis dim/2");
    }
    SpectrumTable table{phi_list, transitions, {}};
    table.freq_ghz.reserve(phi_list.size());
    for (double phi : phi_list) {
        params.phi_ext = phi;
        const auto e = detail::energies_only(params, dim);
        std::vector<double> row;
        row.reserve(transitions.size());
        for (const auto& [i, j] : transitions) {
            row.push_back(e(j) - e(i));
        }
        table.freq_ghz.push_back(std::move(row));
    }
    return table;
}

inline constexpr int default_level_cutoff = 15;
inline constexpr double resonance_guard_ghz = 1e-3;

struct DispersiveShift {
    double chi = 0.0;          // rad/s, signed
    double remainder = 0.0;    // rad/s, estimated size of the truncated tail
    int level_cutoff = default_level_cutoff;
    int dim_used = 0;
};

// Second-order dispersive shift of the 0-1 transition,
//   chi_01 = g^2 [ sum_{l!=0} |n_0l|^2 2 w_0l / (w_0l^2 - w_R^2)
//                - sum_{l!=1} |n_1l|^2 2 w_1l / (w_1l^2 - w_R^2) ],
// with w_il = w_l - w_i and the sums running over l <= level_cutoff.
// g and omega_r are angular (rad/s); the result is too.
inline DispersiveShift dispersive_shift(const FluxoniumParams& params, double g, double omega_r, int dim = 0,
                                        int level_cutoff = default_level_cutoff) {
    if (level_cutoff < 2) {
        throw input_error("level cutoff must be >= 2");
    }
    if (dim == 0) {
        dim = std::max(converged_dim(params), 4 * (level_cutoff + 1));
    }
    const auto sol = diagonalize(params, dim, false);
    if (static_cast<int>(sol.energies.size()) <= level_cutoff) {
        throw input_error("basis too small for level cutoff " + std::to_string(level_cutoff));
    }
    // Work in GHz (f = w / 2pi); chi/2pi = (g/2pi)^2 * sum(...) in the same units.
    const double g_ghz = rad_to_hz(g) / units::GHz;
    const double fr = rad_to_hz(omega_r) / units::GHz;
    std::vector<double> contribution(static_cast<std::size_t>(level_cutoff + 1), 0.0);
    for (int l = 0; l <= level_cutoff; ++l) {
        for (int i : {0, 1}) {
            if (l == i) {
                continue;
            }
            const double f = sol.energies[static_cast<std::size_t>(l)] - sol.energies[static_cast<std::size_t>(i)];
            if (std::abs(std::abs(f) - fr) < resonance_guard_ghz) {
                throw numerical_error("resonator within 1 MHz of transition " + std::to_string(i) + "-" +
                                      std::to_string(l) + " (" + std::to_string(std::abs(f)) + " GHz)");
            }
            const double n_il = sol.n_matrix(i, l);
            const double term = n_il * n_il * 2.0 * f / (f * f - fr * fr);
            contribution[static_cast<std::size_t>(l)] += (i == 0 ? term : -term);
        }
    }
    double sum = 0.0;
    for (double c : contribution) {
        sum += c;
    }
    // Tail: geometric continuation of the last two contributions.
    const double last = std::abs(contribution.back());
    const double prev = std::abs(contribution[contribution.size() - 2]);
    double tail = last + prev;
    if (prev > 0.0 && last < prev) {
        const double ratio = last / prev;
        tail = last * ratio / (1.0 - ratio);
    }
    DispersiveShift out;
    out.chi = hz_to_rad(g_ghz * g_ghz * sum * units::GHz);
    out.remainder = hz_to_rad(g_ghz * g_ghz * tail * units::GHz);
    out.level_cutoff = level_cutoff;
    out.dim_used = dim;
    return out;
}

struct DephasingInputs {
    double kappa_r = 0.0; // rad/s
    double chi_01 = 0.0;  // rad/s
    double n_th = 0.0;
};

struct DephasingRate {
    double gamma_phi = 0.0; // rad/s
    double t_phi = 0.0;     // s, +inf when gamma_phi == 0
};

// Gamma = kappa/2 Re[ sqrt((1 + i chi/kappa)^2 + 4 i chi n_th / kappa) - 1 ],
// evaluated as Re[d / (sqrt(w^2 + d) + w)] with w = 1 + i chi/kappa and
// d = 4 i chi n_th / kappa, which equals the above on the principal branch
// and is free of cancellation at small n_th.
inline DephasingRate thermal_dephasing(const DephasingInputs& in) {
    if (!(in.kappa_r > 0.0)) {
        throw input_error("kappa_r must be > 0");
    }
    if (!(in.n_th >= 0.0)) {
        throw input_error("n_th must be >= 0");
    }
    using cd = std::complex<double>;
    const cd w{1.0, in.chi_01 / in.kappa_r};
    const cd d{0.0, 4.0 * in.chi_01 * in.n_th / in.kappa_r};
    const cd root = std::sqrt(w * w + d);
    const double gamma = 0.5 * in.kappa_r * (d / (root + w)).real();
    DephasingRate r;
    r.gamma_phi = gamma;
    r.t_phi = gamma > 0.0 ? 1.0 / gamma : std::numeric_limits<double>::infinity();
    return r;
}

inline double quality_factor(double f_hz, double t1_s) {
    if (!(f_hz > 0.0) || !(t1_s >= 0.0)) {
        throw input_error("quality factor needs f > 0 and t1 >= 0");
    }
    return two_pi * f_hz * t1_s;
}

struct SpectroscopyPoint {
    double phi_ext = 0.0; // rad
    int level_i = 0;
    int level_j = 1;
    double freq_ghz = 0.0;
};

struct FitOptions {
    int dim = 0; // 0: converged basis at the initial guess, plus one step of margin
    int max_iterations = 500;
    double x_tol = 1e-8;
    double rms_change_tol_ghz = 1e-9; // 1 Hz
};

struct ParameterFit {
    FluxoniumParams params;            // phi_ext left at the guess value
    Eigen::Matrix3d covariance;        // (e_j, e_c, e_l), GHz^2
    std::vector<double> residuals_ghz; // model - measured, per point
    double rms_ghz = 0.0;
    int iterations = 0;
    int accepted_steps = 0;
    int dim_used = 0;
    std::string status;
};

// Least-squares fit of (E_J, E_C, E_L) to measured transitions. Parameters are
// scaled by the initial guess; non-positive energies are rejected as
// infinite-cost steps.
inline ParameterFit fit_params(const std::vector<SpectroscopyPoint>& points, const FluxoniumParams& guess,
                               const FitOptions& opt = {}) {
    validate(guess);
    if (!(guess.e_j > 0.0)) {
        throw input_error("fit guess: e_j must be > 0");
    }
    std::set<double> fluxes;
    int top = 0;
    for (const auto& pt : points) {
        fluxes.insert(pt.phi_ext);
        if (pt.level_i < 0 || pt.level_j <= pt.level_i) {
            throw input_error("spectroscopy transitions must have 0 <= i < j");
        }
        top = std::max(top, pt.level_j);
    }
    if (points.size() < 4 || fluxes.size() < 2) {
        throw numerical_error("unidentifiable from provided points: need >= 4 points at >= 2 distinct phi_ext");
    }
    int dim = opt.dim;
    if (dim == 0) {
        dim = converged_dim(guess) + convergence_dim_step;
    }
    dim = std::max(dim, 2 * (top + 1) + 2);

    // Group by flux so each distinct phi_ext is diagonalized once.
    std::vector<double> flux_list(fluxes.begin(), fluxes.end());
    std::vector<std::size_t> flux_index(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        flux_index[k] = static_cast<std::size_t>(
            std::lower_bound(flux_list.begin(), flux_list.end(), points[k].phi_ext) - flux_list.begin());
    }
    const Eigen::Vector3d scale{guess.e_j, guess.e_c, guess.e_l};
    auto model = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(points.size()));
        if ((x.array() <= 0.0).any()) {
            r.setConstant(std::numeric_limits<double>::infinity());
            return r;
        }
        FluxoniumParams p{x(0) * scale(0), x(1) * scale(1), x(2) * scale(2), 0.0};
        std::vector<Eigen::VectorXd> levels;
        levels.reserve(flux_list.size());
        for (double phi : flux_list) {
            p.phi_ext = phi;
            levels.push_back(detail::energies_only(p, dim));
        }
        for (std::size_t k = 0; k < points.size(); ++k) {
            const auto& e = levels[flux_index[k]];
            r(static_cast<Eigen::Index>(k)) = e(points[k].level_j) - e(points[k].level_i) - points[k].freq_ghz;
        }
        return r;
    };

    lsq::Options lm;
    lm.max_iterations = opt.max_iterations;
    lm.x_tol = opt.x_tol;
    lm.rms_change_tol = opt.rms_change_tol_ghz;
    lsq::Result res;
    try {
        res = lsq::levenberg_marquardt(model, Eigen::Vector3d::Ones(), lm);
    } catch (const singular_jacobian_error& e) {
        throw numerical_error(std::string("unidentifiable from provided points: ") + e.what());
    }
    if (!res.converged()) {
        throw numerical_error("fluxonium fit did not converge in " + std::to_string(opt.max_iterations) +
                              " iterations (rms " + std::to_string(res.rms() * 1e6) + " kHz)");
    }
    ParameterFit fit;
    fit.params = FluxoniumParams{res.x(0) * scale(0), res.x(1) * scale(1), res.x(2) * scale(2), guess.phi_ext};
    const Eigen::Matrix3d d = scale.asDiagonal();
    fit.covariance = d * lsq::covariance(res) * d;
    fit.residuals_ghz.assign(res.residuals.data(), res.residuals.data() + res.residuals.size());
    fit.rms_ghz = res.rms();
    fit.iterations = res.iterations;
    fit.accepted_steps = res.accepted_steps;
    fit.dim_used = dim;
    fit.status = lsq::to_string(res.status);
    return fit;
}

} // namespace jjcircuit::fluxonium
