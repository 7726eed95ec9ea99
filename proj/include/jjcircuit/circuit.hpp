#pragma once

// Lumped-element model of a capacitively shunted Josephson-junction array.
//
// Node fluxes Phi_0 .. Phi_N sit on the N+1 islands between N junctions.
// Nodes 0 and N are the capacitor paddles; nodes 1 .. N-1 are array islands.
// The kinetic part of the Lagrangian is 1/2 Phidot^T C Phidot and the
// harmonic expansion of the junction cosines gives 1/2 Phi^T L^-1 Phi.

#include "jjcircuit/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace jjcircuit {

// All fields SI (henry, farad).
struct ArrayCircuitSpec {
    int n_junctions = 0;
    double l_j = 0.0;       // per-junction inductance
    double c_j = 0.0;       // per-junction capacitance
    double c_0 = 0.0;       // island-to-ground capacitance
    double c_s = 0.0;       // paddle-to-paddle shunt
    double c_g_left = 0.0;  // paddle to ground
    double c_g_right = 0.0;
    double c_c_left = 0.0;  // paddle to transmission line
    double c_c_right = 0.0;
};

// Fluxonium energies as E/h in GHz; phi_ext in radians.
struct FluxoniumParams {
    double e_j = 0.0;
    double e_c = 0.0;
    double e_l = 0.0;
    double phi_ext = 0.0;
};

inline void validate(const ArrayCircuitSpec& spec) {
    if (spec.n_junctions < 1) {
        throw input_error("n_junctions: must be >= 1, got " + std::to_string(spec.n_junctions));
    }
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw input_error(std::string(name) + ": must be > 0");
        }
    };
    auto non_negative = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw input_error(std::string(name) + ": must be >= 0");
        }
    };
    positive(spec.l_j, "l_j");
    positive(spec.c_j, "c_j");
    non_negative(spec.c_0, "c_0");
    non_negative(spec.c_s, "c_s");
    non_negative(spec.c_g_left, "c_g_left");
    non_negative(spec.c_g_right, "c_g_right");
    non_negative(spec.c_c_left, "c_c_left");
    non_negative(spec.c_c_right, "c_c_right");
}

inline void validate(const FluxoniumParams& p) {
    // e_j = 0 is the harmonic limit and stays allowed.
    if (!(p.e_j >= 0.0) || !std::isfinite(p.e_j)) {
        throw input_error("e_j: must be >= 0");
    }
    if (!(p.e_c > 0.0) || !std::isfinite(p.e_c)) {
        throw input_error("e_c: must be > 0");
    }
    if (!(p.e_l > 0.0) || !std::isfinite(p.e_l)) {
        throw input_error("e_l: must be > 0");
    }
    if (!std::isfinite(p.phi_ext)) {
        throw input_error("phi_ext must be finite");
    }
}

namespace detail {

// Adds a two-terminal element of value v between nodes a and b.
inline void stamp(Eigen::MatrixXd& m, Eigen::Index a, Eigen::Index b, double v) {
    m(a, a) += v;
    m(b, b) += v;
    m(a, b) -= v;
    m(b, a) -= v;
}

} // namespace detail

// Returns the (N+1)x(N+1) capacitance matrix in farad. Throws numerical_error
// when the result is not positive definite (a floating or degenerate circuit).
inline Eigen::MatrixXd build_capacitance_matrix(const ArrayCircuitSpec& spec) {
    validate(spec);
    const Eigen::Index n = spec.n_junctions;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (Eigen::Index k = 0; k < n; ++k) {
        detail::stamp(c, k, k + 1, spec.c_j);
    }
    for (Eigen::Index k = 1; k < n; ++k) {
        c(k, k) += spec.c_0;
    }
    c(0, 0) += spec.c_g_left + spec.c_c_left;
    c(n, n) += spec.c_g_right + spec.c_c_right;
    detail::stamp(c, 0, n, spec.c_s);

    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) {
        throw numerical_error("capacitance matrix not SPD (degenerate circuit: no path to ground?)");
    }
    return c;
}

// (1/l_j) times the path-graph Laplacian over nodes 0..N, in 1/henry.
inline Eigen::MatrixXd build_inverse_inductance_matrix(const ArrayCircuitSpec& spec) {
    validate(spec);
    const Eigen::Index n = spec.n_junctions;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
    const double inv_l = 1.0 / spec.l_j;
    for (Eigen::Index k = 0; k < n; ++k) {
        detail::stamp(m, k, k + 1, inv_l);
    }
    return m;
}

// Matrices of the same chain with both end nodes tied to ground. Paddle
// capacitances drop out; what remains is the N-1 interior islands.
struct GroundedChain {
    Eigen::MatrixXd capacitance;
    Eigen::MatrixXd inverse_inductance;
};

inline GroundedChain grounded_chain_matrices(const ArrayCircuitSpec& spec) {
    validate(spec);
    if (spec.n_junctions < 2) {
        throw input_error("grounded chain needs n_junctions >= 2 (at least one interior island)");
    }
    const Eigen::Index n = spec.n_junctions;
    const Eigen::Index m = n - 1;
    GroundedChain g{Eigen::MatrixXd::Zero(m, m), Eigen::MatrixXd::Zero(m, m)};
    for (Eigen::Index i = 0; i < m; ++i) {
        g.capacitance(i, i) = 2.0 * spec.c_j + spec.c_0;
        g.inverse_inductance(i, i) = 2.0 / spec.l_j;
        if (i + 1 < m) {
            g.capacitance(i, i + 1) = g.capacitance(i + 1, i) = -spec.c_j;
            g.inverse_inductance(i, i + 1) = g.inverse_inductance(i + 1, i) = -1.0 / spec.l_j;
        }
    }
    return g;
}

} // namespace jjcircuit
