#pragma once

// Physical constants (CODATA 2018 exact SI values) and unit conversions.
// Everything inside the library is SI; the helpers below exist only for I/O.

#include <cmath>
#include <numbers>

namespace jjcircuit {

struct PhysicalConstants {
    double planck_h = 6.62607015e-34;        // J s
    double hbar = 6.62607015e-34 / (2.0 * std::numbers::pi);
    double electron_charge = 1.602176634e-19; // C
    double flux_quantum = 6.62607015e-34 / (2.0 * 1.602176634e-19); // Wb, h / 2e
    double boltzmann = 1.380649e-23;          // J/K
};

inline constexpr PhysicalConstants constants{};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

namespace units {
inline constexpr double fF = 1e-15;
inline constexpr double aF = 1e-18;
inline constexpr double nH = 1e-9;
inline constexpr double GHz = 1e9;
inline constexpr double MHz = 1e6;
inline constexpr double kHz = 1e3;
inline constexpr double us = 1e-6;
inline constexpr double ueV = 1e-6; // in eV
} // namespace units

// P[W] = 1 mW * 10^(dBm / 10)
inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt / 1e-3); }

inline double hz_to_rad(double hz) { return two_pi * hz; }
inline double rad_to_hz(double rad) { return rad / two_pi; }

} // namespace jjcircuit
