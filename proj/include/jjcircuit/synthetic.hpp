#pragma once

// Seeded generators for synthetic measurement data: hanger traces, power
// sweeps with a self-Kerr pull, and room-temperature probe datasets.

#include "jjcircuit/constants.hpp"
#include "jjcircuit/error.hpp"
#include "jjcircuit/probe.hpp"
#include "jjcircuit/resonator.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace jjcircuit::synthetic {

using resonator::complex;
using resonator::HangerFit;
using resonator::S21Trace;

struct TraceOptions {
    std::size_t points = 1601;
    double span_linewidths = 10.0; // full span in units of f0 / Q_t
    double snr_db = 20.0;          // dip depth over per-quadrature noise sigma, in dB; inf for no noise
};

inline std::vector<double> frequency_grid(const HangerFit& p, const TraceOptions& opt) {
    if (opt.points < 2) {
        throw input_error("synthetic trace needs at least 2 points");
    }
    const double half = 0.5 * opt.span_linewidths * p.f0 / p.q_total();
    std::vector<double> f(opt.points);
    for (std::size_t i = 0; i < opt.points; ++i) {
        f[i] = p.f0 - half + 2.0 * half * static_cast<double>(i) / static_cast<double>(opt.points - 1);
    }
    return f;
}

// Per-quadrature noise sigma for a given SNR: the dip depth is the circle
// diameter A Q_t / Q_e.
inline double noise_sigma(const HangerFit& p, double snr_db) {
    if (std::isinf(snr_db)) {
        return 0.0;
    }
    return p.amplitude * p.q_total() / p.q_e / std::pow(10.0, snr_db / 20.0);
}

inline S21Trace hanger_trace(const HangerFit& p, const TraceOptions& opt, std::mt19937_64& rng) {
    S21Trace t = resonator::synthesize(frequency_grid(p, opt), p);
    const double sigma = noise_sigma(p, opt.snr_db);
    if (sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma);
        for (auto& z : t.s21) {
            z += complex(noise(rng), noise(rng));
        }
    }
    return t;
}

inline S21Trace hanger_trace(const HangerFit& p, const TraceOptions& opt, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return hanger_trace(p, opt, rng);
}

// Random resonator: Q_i log-uniform in [1e4, 1e5], Q_e / Q_i log-uniform in
// [1 / coupling_spread, coupling_spread], f0 in [4, 8] GHz, small asymmetry,
// a cable delay up to 50 ns.
inline HangerFit random_hanger(std::mt19937_64& rng, double coupling_spread = 3.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(rng)); };
    HangerFit p;
    p.f0 = (4.0 + 4.0 * u(rng)) * units::GHz;
    p.q_i = log_uniform(1e4, 1e5);
    p.q_e = p.q_i * log_uniform(1.0 / coupling_spread, coupling_spread);
    p.phi_asym = 0.3 * (2.0 * u(rng) - 1.0);
    p.amplitude = 0.5 + u(rng);
    p.phase_offset = two_pi * u(rng) - std::numbers::pi;
    p.delay = 50e-9 * u(rng);
    return p;
}

struct PowerSweepOptions {
    double f_bare = 5.0 * units::GHz;          // n -> 0 frequency
    double k_self_khz = 15.0;                  // f = f_bare - k_self n
    double q_i = 3.6e4;
    double q_e = 5e4;
    double attenuation_db = 70.0;              // cold, source to device
    double power_start_dbm = -80.0;
    double power_stop_dbm = -55.0;
    double power_step_db = 1.0;
    double frequency_jitter_hz = 1.0 * units::kHz; // Gaussian scatter on each trace's f0
    TraceOptions trace{1601, 10.0, 40.0};
};

// One trace per drive power. The photon number of each trace follows the
// same calibration the analysis uses, evaluated at the pulled frequency.
inline std::vector<S21Trace> power_sweep(const PowerSweepOptions& opt, std::uint64_t seed) {
    if (!(opt.power_step_db > 0.0) || !(opt.power_stop_dbm >= opt.power_start_dbm)) {
        throw input_error("synthetic power sweep: bad power range");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::vector<S21Trace> out;
    const int steps = static_cast<int>(std::floor((opt.power_stop_dbm - opt.power_start_dbm) / opt.power_step_db + 1e-9));
    for (int s = 0; s <= steps; ++s) {
        const double p_dbm = opt.power_start_dbm + s * opt.power_step_db;
        HangerFit h;
        h.q_i = opt.q_i;
        h.q_e = opt.q_e;
        h.f0 = opt.f_bare;
        double n = 0.0;
        for (int it = 0; it < 5; ++it) {
            n = resonator::photons_from_power(p_dbm, opt.attenuation_db, h);
            h.f0 = opt.f_bare - opt.k_self_khz * units::kHz * n;
        }
        h.f0 += opt.frequency_jitter_hz * jitter(rng);
        S21Trace t = hanger_trace(h, opt.trace, rng);
        t.power_dbm = p_dbm;
        t.attenuation_db = opt.attenuation_db;
        out.push_back(std::move(t));
    }
    return out;
}

struct ProbeOptions {
    double r_junction = 782.0;
    double r_substrate = 670e3;
    std::vector<int> counts{100, 200, 300, 400, 500};
    int replicates = 32;
    double relative_noise = 0.02; // multiplicative Gaussian
};

inline probe::ProbeDataset probe_dataset(const ProbeOptions& opt, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, opt.relative_noise > 0.0 ? opt.relative_noise : 1.0);
    probe::ProbeDataset ds;
    for (int n : opt.counts) {
        probe::ProbeRecord rec{n, {}};
        const double r = probe::parallel_model(n, opt.r_junction, opt.r_substrate);
        for (int k = 0; k < opt.replicates; ++k) {
            rec.resistances.push_back(opt.relative_noise > 0.0 ? r * (1.0 + noise(rng)) : r);
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

} // namespace jjcircuit::synthetic
