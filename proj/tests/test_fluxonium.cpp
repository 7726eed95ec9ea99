#include "jjcircuit/fluxonium.hpp"
#include "jjcircuit/oracle/phase_grid.hpp"
#include "jjcircuit/presets.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

using namespace jjcircuit;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double khz_in_ghz = 1e-6;

const FluxoniumParams device_a = presets::fluxonium_devices[0].params;
const FluxoniumParams device_b = presets::fluxonium_devices[1].params;
const FluxoniumParams device_c = presets::fluxonium_devices[2].params;

// Dense phase-grid solve with fourth-order stencils, keeping eigenvectors so
// charge matrix elements <i| -i d/dphi |l> follow by differentiation.
struct GridSolution {
    std::vector<double> energies;
    Eigen::MatrixXd n;
};

GridSolution dense_grid(const FluxoniumParams& p, int levels, int points = 1600, double half_width = 6.0 * M_PI) {
    const double h = 2.0 * half_width / (points + 1);
    Eigen::MatrixXd hm = Eigen::MatrixXd::Zero(points, points);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(points, points);
    const double lap[] = {-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0};
    const double der[] = {0.0, 2.0 / 3.0, -1.0 / 12.0};
    for (int i = 0; i < points; ++i) {
        const double phi = -half_width + (i + 1) * h;
        hm(i, i) = -4.0 * p.e_c * lap[0] / (h * h) - p.e_j * std::cos(phi - p.phi_ext) + 0.5 * p.e_l * phi * phi;
        for (int o = 1; o <= 2; ++o) {
            if (i + o < points) {
                hm(i, i + o) = hm(i + o, i) = -4.0 * p.e_c * lap[o] / (h * h);
                d(i, i + o) = der[o] / h;
                d(i + o, i) = -der[o] / h;
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hm);
    GridSolution s;
    for (int k = 0; k < levels; ++k) {
        s.energies.push_back(eig.eigenvalues()(k) - eig.eigenvalues()(0));
    }
    const Eigen::MatrixXd v = eig.eigenvectors().leftCols(levels);
    s.n = (v.transpose() * d * v).cwiseAbs();
    return s;
}

double grid_chi_mhz(const FluxoniumParams& p, double g_ghz, double fr_ghz, int cutoff) {
    const auto s = dense_grid(p, cutoff + 1);
    double sum = 0.0;
    for (int l = 0; l <= cutoff; ++l) {
        if (l != 0) {
            const double f = s.energies[l] - s.energies[0];
            sum += s.n(0, l) * s.n(0, l) * 2.0 * f / (f * f - fr_ghz * fr_ghz);
        }
        if (l != 1) {
            const double f = s.energies[l] - s.energies[1];
            sum -= s.n(1, l) * s.n(1, l) * 2.0 * f / (f * f - fr_ghz * fr_ghz);
        }
    }
    return g_ghz * g_ghz * sum * 1e3;
}

double chi_mhz(const FluxoniumParams& p, double g_ghz, double fr_ghz) {
    return rad_to_hz(fluxonium::dispersive_shift(p, hz_to_rad(g_ghz * units::GHz), hz_to_rad(fr_ghz * units::GHz)).chi) /
           units::MHz;
}

} // namespace

TEST_CASE("harmonic limit has an equally spaced ladder", "[fluxonium]") {
    const double w = std::sqrt(8.0 * 0.42 * 1.01);
    CHECK_THAT(w, WithinAbs(1.842, 1e-3));
    for (double phi : {0.0, 1.0, M_PI}) {
        const FluxoniumParams p{0.0, 1.01, 0.42, phi};
        const int dim = fluxonium::converged_dim(p);
        const double f01 = fluxonium::transition(p, 0, 1, dim);
        CHECK_THAT(f01, WithinAbs(w, khz_in_ghz));
        CHECK_THAT(fluxonium::transition(p, 0, 2, dim), WithinRel(2.0 * f01, 1e-9));
        CHECK(fluxonium::transition(p, 3, 3, dim) == 0.0);
    }
}

TEST_CASE("oscillator basis agrees with the phase-grid oracle", "[fluxonium]") {
    for (const auto& dev : presets::fluxonium_devices) {
        for (double phi : {M_PI, 0.0}) {
            FluxoniumParams p = dev.params;
            p.phi_ext = phi;
            const auto sol = fluxonium::diagonalize(p);
            CHECK(sol.converged);
            const auto grid = oracle::phase_grid_energies(p, 6);
            for (int k = 1; k < 6; ++k) {
                INFO("device " << dev.name << " phi " << phi << " level " << k);
                CHECK_THAT(sol.energies[static_cast<std::size_t>(k)], WithinAbs(grid[static_cast<std::size_t>(k)], khz_in_ghz));
            }
        }
    }
}

TEST_CASE("device B transition pinned against the phase grid", "[fluxonium]") {
    const int dim = fluxonium::converged_dim(device_b);
    const auto grid = oracle::phase_grid_energies(device_b, 4);
    CHECK_THAT(fluxonium::transition(device_b, 0, 1, dim), WithinAbs(grid[1], khz_in_ghz));
    CHECK_THAT(fluxonium::transition(device_b, 1, 2, dim), WithinAbs(grid[2] - grid[1], khz_in_ghz));
}

TEST_CASE("spectrum is periodic and mirror symmetric in flux", "[fluxonium]") {
    const std::vector<std::pair<int, int>> tr{{0, 1}, {0, 2}, {0, 3}, {1, 2}};
    for (double d : {0.37, 1.1, 2.5}) {
        const auto t = fluxonium::spectrum_sweep(device_c, {M_PI + d, M_PI - d, M_PI + d + two_pi}, tr);
        for (std::size_t k = 0; k < tr.size(); ++k) {
            CHECK_THAT(t.freq_ghz[0][k], WithinAbs(t.freq_ghz[1][k], khz_in_ghz));
            CHECK_THAT(t.freq_ghz[0][k], WithinAbs(t.freq_ghz[2][k], khz_in_ghz));
        }
    }
}

TEST_CASE("device C sweep is mirror symmetric with low transitions monotone", "[fluxonium]") {
    std::vector<double> phi;
    for (int i = 0; i <= 100; ++i) {
        phi.push_back(two_pi * i / 100.0);
    }
    const auto t = fluxonium::spectrum_sweep(device_c, phi, {{0, 1}, {0, 2}, {0, 3}});
    for (std::size_t k = 0; k < 3; ++k) {
        std::vector<double> f;
        for (const auto& row : t.freq_ghz) {
            f.push_back(row[k]);
        }
        const auto lo = std::min_element(f.begin(), f.end()) - f.begin();
        const auto hi = std::max_element(f.begin(), f.end()) - f.begin();
        INFO("transition 0-" << k + 1);
        for (int i = 0; i <= 50; ++i) {
            CHECK_THAT(f[i], WithinRel(f[100 - i], 1e-9));
        }
        // 0-3 has level crossings in the half period.
        if (k == 2) {
            continue;
        }
        CHECK((lo == 0 || lo == 50 || lo == 100));
        CHECK((hi == 0 || hi == 50 || hi == 100));
        // Monotone on each half period.
        int sign_changes = 0;
        for (int i = 1; i < 50; ++i) {
            sign_changes += (f[i + 1] - f[i]) * (f[i] - f[i - 1]) < 0.0;
        }
        CHECK(sign_changes == 0);
    }
}

TEST_CASE("spectrum sweep rejects levels outside the basis", "[fluxonium]") {
    CHECK_THROWS_AS(fluxonium::spectrum_sweep(device_c, {M_PI}, {{0, 30}}, 40), input_error);
    CHECK_THROWS_AS(fluxonium::spectrum_sweep(device_c, {M_PI}, {{-1, 1}}), input_error);
}

TEST_CASE("dispersive shift scales as g squared", "[fluxonium]") {
    FluxoniumParams p = device_a;
    CHECK(fluxonium::dispersive_shift(p, 0.0, hz_to_rad(7.18e9)).chi == 0.0);
    const double one = fluxonium::dispersive_shift(p, hz_to_rad(0.1e9), hz_to_rad(7.18e9)).chi;
    const double two = fluxonium::dispersive_shift(p, hz_to_rad(0.2e9), hz_to_rad(7.18e9)).chi;
    CHECK_THAT(two, WithinRel(4.0 * one, 1e-10));
}

TEST_CASE("dispersive shift vanishes for a linear oscillator", "[fluxonium]") {
    const FluxoniumParams p{0.0, 1.01, 0.42, M_PI};
    const auto chi = fluxonium::dispersive_shift(p, hz_to_rad(0.1e9), hz_to_rad(7.18e9));
    CHECK(std::abs(rad_to_hz(chi.chi)) < 1.0);
}

TEST_CASE("dispersive shift agrees with a dense phase-grid evaluation", "[fluxonium]") {
    struct Case {
        FluxoniumParams p;
        double fr_ghz;
    };
    FluxoniumParams a0 = device_a;
    a0.phi_ext = 0.0;
    for (const auto& c : {Case{device_c, 7.18}, Case{device_a, 7.18}, Case{a0, 5.5}}) {
        const double ours = chi_mhz(c.p, 0.1, c.fr_ghz);
        const double grid = grid_chi_mhz(c.p, 0.1, c.fr_ghz, fluxonium::default_level_cutoff);
        INFO("e_j " << c.p.e_j << " phi " << c.p.phi_ext << ": " << ours << " vs " << grid);
        CHECK_THAT(ours, WithinRel(grid, 1e-3));
    }
}

TEST_CASE("dispersive shift reports its truncation", "[fluxonium]") {
    const auto chi = fluxonium::dispersive_shift(device_c, hz_to_rad(0.1e9), hz_to_rad(7.18e9));
    CHECK(chi.level_cutoff == fluxonium::default_level_cutoff);
    CHECK(chi.remainder >= 0.0);
    CHECK(chi.remainder < 0.05 * std::abs(chi.chi));
    CHECK_THROWS_AS(fluxonium::dispersive_shift(device_c, 1.0, 1.0, 0, 1), input_error);
}

TEST_CASE("thermal dephasing", "[fluxonium]") {
    const double kappa = hz_to_rad(0.8e6);
    const double chi = hz_to_rad(1.38e6);
    const auto zero = fluxonium::thermal_dephasing({kappa, chi, 0.0});
    CHECK(zero.gamma_phi == 0.0);
    CHECK(std::isinf(zero.t_phi));

    // Direct evaluation of the textbook form.
    using cd = std::complex<double>;
    const double n = 1e-2;
    const cd w{1.0, chi / kappa};
    const double direct = 0.5 * kappa * (std::sqrt(w * w + cd{0.0, 4.0 * chi * n / kappa}) - 1.0).real();
    const auto r = fluxonium::thermal_dephasing({kappa, chi, n});
    CHECK_THAT(r.gamma_phi, WithinRel(direct, 1e-9));
    CHECK(r.t_phi >= 10e-6);
    CHECK(r.t_phi <= 60e-6);

    // Small n_th: Gamma -> n chi^2 kappa / (kappa^2 + chi^2) without cancellation.
    const double tiny = 1e-12;
    CHECK_THAT(fluxonium::thermal_dephasing({kappa, chi, tiny}).gamma_phi,
               WithinRel(tiny * chi * chi * kappa / (kappa * kappa + chi * chi), 1e-9));

    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double g = fluxonium::thermal_dephasing({kappa, chi, i / 100.0}).gamma_phi;
        CHECK(g > prev);
        prev = g;
    }
    CHECK_THROWS_AS(fluxonium::thermal_dephasing({0.0, chi, n}), input_error);
    CHECK_THROWS_AS(fluxonium::thermal_dephasing({kappa, chi, -1.0}), input_error);
}

TEST_CASE("quality factor from T1", "[fluxonium]") {
    CHECK_THAT(fluxonium::quality_factor(1.38e9, 53e-6), WithinRel(4.6e5, 0.01));
    CHECK_THAT(fluxonium::quality_factor(868e6, 33e-6), WithinRel(1.8e5, 0.02));
    CHECK_THAT(fluxonium::quality_factor(459e6, 59e-6), WithinRel(1.7e5, 0.02));
    CHECK(fluxonium::quality_factor(1e9, 0.0) == 0.0);
}

namespace {

std::vector<fluxonium::SpectroscopyPoint> synthetic_points(const FluxoniumParams& truth, double noise_ghz,
                                                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_ghz > 0.0 ? noise_ghz : 1.0);
    std::vector<fluxonium::SpectroscopyPoint> pts;
    FluxoniumParams p = truth;
    const int dim = fluxonium::converged_dim(truth);
    for (double x : {0.5, 0.45, 0.4, 0.3}) {
        p.phi_ext = two_pi * x;
        for (int j : {1, 2, 3}) {
            const double f = fluxonium::transition(p, 0, j, dim);
            pts.push_back({p.phi_ext, 0, j, noise_ghz > 0.0 ? f + noise(rng) : f});
        }
    }
    return pts;
}

} // namespace

TEST_CASE("spectroscopy fit recovers the generator", "[fluxonium]") {
    const auto pts = synthetic_points(device_c, 100e-6, 17);
    REQUIRE(pts.size() == 12);
    const FluxoniumParams guess{device_c.e_j * 1.2, device_c.e_c * 0.8, device_c.e_l * 1.2, M_PI};
    const auto fit = fluxonium::fit_params(pts, guess);
    CHECK_THAT(fit.params.e_j, WithinRel(device_c.e_j, 0.01));
    CHECK_THAT(fit.params.e_c, WithinRel(device_c.e_c, 0.01));
    CHECK_THAT(fit.params.e_l, WithinRel(device_c.e_l, 0.01));
    CHECK(fit.rms_ghz < 300e-6);
    CHECK(fit.residuals_ghz.size() == 12);
}

TEST_CASE("spectroscopy fit from the exact answer takes no step", "[fluxonium]") {
    const auto pts = synthetic_points(device_c, 0.0, 0);
    fluxonium::FitOptions opt;
    opt.dim = fluxonium::converged_dim(device_c);
    const auto fit = fluxonium::fit_params(pts, device_c, opt);
    CHECK(fit.accepted_steps == 0);
    CHECK(fit.rms_ghz < 1e-12);
}

TEST_CASE("spectroscopy fit needs more than one flux point", "[fluxonium]") {
    std::vector<fluxonium::SpectroscopyPoint> pts;
    const int dim = fluxonium::converged_dim(device_c);
    for (int j : {1, 2, 3, 4}) {
        pts.push_back({M_PI, 0, j, fluxonium::transition(device_c, 0, j, dim)});
    }
    CHECK_THROWS_AS(fluxonium::fit_params(pts, device_c), numerical_error);
    CHECK_THROWS_WITH(fluxonium::fit_params(pts, device_c), ContainsSubstring("unidentifiable"));
    CHECK_THROWS_AS(fluxonium::fit_params(pts, FluxoniumParams{0.0, 1.0, 0.4, M_PI}), input_error);
}
