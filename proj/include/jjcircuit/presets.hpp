#pragma once

// Published device parameters: simulated paddle capacitances per array,
// extracted ground capacitances, and fluxonium circuit parameters.
//
// The capacitance lists are given per array in the order of
// N = 500, 400, 300, 200, 100 junctions; position i of every list belongs to
// the array with chain_lengths[i] junctions.

#include "jjcircuit/circuit.hpp"
#include "jjcircuit/constants.hpp"
#include "jjcircuit/error.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

namespace jjcircuit::presets {

enum class Process { substrate, etched };

inline constexpr std::array<int, 5> chain_lengths{500, 400, 300, 200, 100};
inline constexpr double junction_capacitance = 20.0 * units::fF;

struct PaddleTable {
    double l_j;
    std::array<double, 5> c_s, c_c_left, c_c_right, c_g_left, c_g_right; // fF
};

inline constexpr PaddleTable substrate_table{
    0.91 * units::nH,
    {0.51, 0.51, 0.53, 0.53, 0.58},
    {0.99, 0.94, 0.95, 0.85, 0.93},
    {0.34, 0.32, 0.31, 0.29, 0.26},
    {5.89, 5.84, 6.29, 6.37, 7.72},
    {6.55, 6.43, 6.47, 6.49, 6.41},
};

inline constexpr PaddleTable etched_table{
    1.10 * units::nH,
    {0.48, 0.48, 0.50, 0.50, 0.55},
    {0.99, 0.94, 0.94, 0.85, 0.93},
    {0.34, 0.32, 0.30, 0.28, 0.26},
    {5.81, 5.80, 6.26, 6.34, 7.67},
    {6.46, 6.40, 6.43, 6.46, 6.46},
};

inline std::string_view to_string(Process p) {
    return p == Process::substrate ? "substrate" : "etched";
}

inline Process process_from_string(std::string_view s) {
    if (s == "substrate" || s == "on-substrate") {
        return Process::substrate;
    }
    if (s == "etched" || s == "suspended") {
        return Process::etched;
    }
    throw input_error("unknown process '" + std::string(s) + "' (expected substrate|etched)");
}

// Array circuit with the published paddle parameters and the given c_0.
inline ArrayCircuitSpec paddle_array(Process process, int n_junctions, double c_0 = 0.0) {
    const PaddleTable& t = process == Process::substrate ? substrate_table : etched_table;
    std::size_t idx = chain_lengths.size();
    for (std::size_t i = 0; i < chain_lengths.size(); ++i) {
        if (chain_lengths[i] == n_junctions) {
            idx = i;
        }
    }
    if (idx == chain_lengths.size()) {
        throw input_error("no paddle preset for n_junctions = " + std::to_string(n_junctions));
    }
    ArrayCircuitSpec s;
    s.n_junctions = n_junctions;
    s.l_j = t.l_j;
    s.c_j = junction_capacitance;
    s.c_0 = c_0;
    s.c_s = t.c_s[idx] * units::fF;
    s.c_c_left = t.c_c_left[idx] * units::fF;
    s.c_c_right = t.c_c_right[idx] * units::fF;
    s.c_g_left = t.c_g_left[idx] * units::fF;
    s.c_g_right = t.c_g_right[idx] * units::fF;
    return s;
}

// Extracted ground capacitances, aF. Missing entries were not measured.
struct GroundCapacitanceEntry {
    int n_junctions;
    std::optional<double> substrate_af;
    std::optional<double> etched_af;
};

inline constexpr std::array<GroundCapacitanceEntry, 4> ground_capacitances{{
    {400, std::nullopt, 15.0},
    {300, 118.0, 14.0},
    {200, 158.0, 60.0},
    {100, 293.0, 83.0},
}};

// Fluxonium devices: A conventionally cleaned, B on-substrate on the etched
// chip, C with the suspended array. Energies in GHz, quoted at half flux.
struct FluxoniumDevice {
    std::string_view name;
    FluxoniumParams params;
    double t1_us;
    double quality_factor;
};

inline constexpr std::array<FluxoniumDevice, 3> fluxonium_devices{{
    {"A", {1.32, 0.93, 0.73, std::numbers::pi}, 53.0, 4.6e5},
    {"B", {2.56, 0.96, 0.78, std::numbers::pi}, 33.0, 1.8e5},
    {"C", {2.59, 1.01, 0.42, std::numbers::pi}, 59.0, 1.7e5},
}};

// Readout resonator of device C.
inline constexpr double device_c_coupling_ghz = 0.100;   // g / 2pi
inline constexpr double device_c_resonator_ghz = 7.18;   // omega_R / 2pi
inline constexpr double device_c_linewidth_mhz = 0.8;    // kappa_R / 2pi
inline constexpr double device_c_chi_mhz = 1.38;         // |chi_01| / 2pi

// Parallel-resistance probe fits.
inline constexpr double probe_r_sub_substrate_ohm = 670e3;
inline constexpr double probe_r_sub_etched_ohm = 1000e3;

} // namespace jjcircuit::presets
