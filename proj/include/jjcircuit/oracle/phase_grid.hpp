#pragma once

// Brute-force fluxonium spectrum on a uniform phase grid, used to check the
// oscillator-basis diagonalization. Shares no code with it: the potential is
// written in the form -E_J cos(phi) + E_L (phi + phi_ext)^2 / 2, the kinetic
// term 4 E_C n^2 = -4 E_C d^2/dphi^2 is an 8th-order central difference with
// Dirichlet walls, and the banded matrix goes to LAPACK dsbevx.

#include "jjcircuit/circuit.hpp"
#include "jjcircuit/error.hpp"

#include <lapacke.h>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace jjcircuit::oracle {

struct PhaseGrid {
    int points = 4096;
    double half_width = 12.0 * std::numbers::pi;
};

// Lowest n_levels eigenenergies in GHz, shifted so the first is zero.
inline std::vector<double> phase_grid_energies(const FluxoniumParams& p, int n_levels, PhaseGrid grid = {}) {
    validate(p);
    constexpr int bandwidth = 4;
    // d^2/dx^2 weights at offsets 0..4
    constexpr std::array<double, bandwidth + 1> stencil{-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0,
                                                        -1.0 / 560.0};
    const int n = grid.points;
    if (n_levels < 1 || n_levels > n) {
        throw input_error("phase grid: bad level count");
    }
    const double h = 2.0 * grid.half_width / (n - 1);
    const double kinetic = -4.0 * p.e_c / (h * h);

    // Column-major upper band storage: ab[(kd + i - j) + j * ldab] = A(i, j).
    const int ldab = bandwidth + 1;
    std::vector<double> ab(static_cast<std::size_t>(ldab) * n, 0.0);
    for (int j = 0; j < n; ++j) {
        const double phi = -grid.half_width + h * j;
        const double potential = -p.e_j * std::cos(phi) + 0.5 * p.e_l * (phi + p.phi_ext) * (phi + p.phi_ext);
        for (int off = 0; off <= bandwidth && off <= j; ++off) {
            const int i = j - off;
            double v = kinetic * stencil[static_cast<std::size_t>(off)];
            if (off == 0) {
                v += potential;
            }
            ab[static_cast<std::size_t>(bandwidth + i - j + j * ldab)] = v;
        }
    }
    std::vector<double> w(static_cast<std::size_t>(n));
    std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
    double q_dummy = 0.0;
    double z_dummy = 0.0;
    lapack_int found = 0;
    const double abstol = 2.0 * LAPACKE_dlamch('S');
    const lapack_int info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'N', 'I', 'U', n, bandwidth, ab.data(), ldab,
                                           &q_dummy, 1, 0.0, 0.0, 1, n_levels, abstol, &found, w.data(),
                                           &z_dummy, 1, ifail.data());
    if (info != 0 || found != n_levels) {
        throw numerical_error("phase grid: dsbevx failed, info = " + std::to_string(info));
    }
    std::vector<double> out(w.begin(), w.begin() + n_levels);
    const double ground = out.front();
    for (double& e : out) {
        e -= ground;
    }
    return out;
}

} // namespace jjcircuit::oracle
