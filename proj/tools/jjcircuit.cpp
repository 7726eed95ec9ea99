// jjcircuit: command-line front end.
//
// Exit status: 0 success, 1 failed reproduction criteria, 2 bad input,
// 3 numerical or fit failure.

#include "jjcircuit/circuit.hpp"
#include "jjcircuit/error.hpp"
#include "jjcircuit/fluxonium.hpp"
#include "jjcircuit/io.hpp"
#include "jjcircuit/modes.hpp"
#include "jjcircuit/presets.hpp"
#include "jjcircuit/probe.hpp"
#include "jjcircuit/reproduce.hpp"
#include "jjcircuit/resonator.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace jjcircuit;
using io::json;
namespace fs = std::filesystem;

namespace {

constexpr int exit_input = 2;
constexpr int exit_numerical = 3;

// Shared by every subcommand.
struct Global {
    std::optional<std::string> config_path;
    io::RunConfig cfg;
};

std::string fmt_number(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        io::write_text(path, text);
    }
}

void emit_json(const json& j, const std::string& path = "") { emit(j.dump(2) + "\n", path); }

double parse_number(const std::string& s, const std::string& what) {
    return io::detail::to_double(s, what);
}

// Either a spec file or "process:N" with an optional c_0.
ArrayCircuitSpec load_spec(const std::string& file, const std::string& preset, std::optional<double> c0_af) {
    ArrayCircuitSpec spec;
    if (!preset.empty()) {
        const auto colon = preset.find(':');
        if (colon == std::string::npos) {
            throw input_error("--preset: expected PROCESS:N, e.g. etched:100");
        }
        const auto process = presets::process_from_string(preset.substr(0, colon));
        const double n = parse_number(preset.substr(colon + 1), "--preset junction count");
        spec = presets::paddle_array(process, static_cast<int>(n));
    } else if (!file.empty()) {
        spec = io::spec_from_json(io::read_json(file), file);
    } else {
        throw input_error("give a spec file or --preset PROCESS:N");
    }
    if (c0_af) {
        spec.c_0 = *c0_af * units::aF;
        validate(spec);
    }
    return spec;
}

FluxoniumParams load_fluxonium(const std::string& file, const std::string& device, std::optional<double> phi_over_2pi) {
    FluxoniumParams p;
    if (!device.empty()) {
        bool found = false;
        for (const auto& d : presets::fluxonium_devices) {
            if (d.name == device) {
                p = d.params;
                found = true;
            }
        }
        if (!found) {
            throw input_error("--device: unknown device '" + device + "' (expected A, B or C)");
        }
    } else if (!file.empty()) {
        p = io::fluxonium_from_json(io::read_json(file), file);
    } else {
        throw input_error("give a fluxonium parameter file or --device A|B|C");
    }
    if (phi_over_2pi) {
        p.phi_ext = two_pi * *phi_over_2pi;
        validate(p);
    }
    return p;
}

double convergence_ghz(const Global& g) { return g.cfg.fluxonium_convergence_khz * units::kHz / units::GHz; }

// ---- modes ----

struct ModesArgs {
    std::string spec;
    std::string preset;
    std::optional<double> c0_af;
    bool grounded = false;
    std::string csv;
    std::string json_out;
};

void cmd_modes(const Global& g, const ModesArgs& a) {
    const ArrayCircuitSpec spec = load_spec(a.spec, a.preset, a.c0_af);
    json out{{"n_junctions", spec.n_junctions}, {"c0_af", spec.c_0 / units::aF}, {"grounded", a.grounded}};
    std::vector<double> f_ghz;
    std::ostringstream csv;
    if (a.grounded) {
        const ModeSpectrum numeric = solve_grounded_modes(spec);
        std::vector<double> numeric_ghz;
        double worst = 0.0;
        csv << "k,analytic_ghz,numeric_ghz\n";
        for (int k = 1; k < spec.n_junctions; ++k) {
            const double fa = rad_to_hz(analytic_dispersion(k, spec)) / units::GHz;
            const double fn = rad_to_hz(numeric.frequencies[static_cast<std::size_t>(k - 1)]) / units::GHz;
            f_ghz.push_back(fa);
            numeric_ghz.push_back(fn);
            worst = std::max(worst, std::abs(fn - fa) / fa);
            csv << k << ',' << fmt_number(fa) << ',' << fmt_number(fn) << '\n';
        }
        out["frequencies_ghz"] = f_ghz;
        out["numeric_ghz"] = numeric_ghz;
        out["max_relative_difference"] = worst;
        out["n_zero_modes"] = numeric.n_zero_modes;
    } else {
        const ModeSpectrum modes = solve_modes(build_capacitance_matrix(spec), build_inverse_inductance_matrix(spec));
        csv << "k,frequency_ghz\n";
        for (std::size_t k = 0; k < modes.frequencies.size(); ++k) {
            f_ghz.push_back(rad_to_hz(modes.frequencies[k]) / units::GHz);
            csv << k + 1 << ',' << fmt_number(f_ghz.back()) << '\n';
        }
        out["frequencies_ghz"] = f_ghz;
        out["n_zero_modes"] = modes.n_zero_modes;
    }
    std::string csv_path = a.csv;
    if (csv_path.empty()) {
        const std::string stem = a.preset.empty() ? fs::path(a.spec).stem().string() : "modes";
        csv_path = (fs::path(g.cfg.output_dir) / (stem + "_modes.csv")).string();
    }
    emit(csv.str(), csv_path);
    out["csv"] = csv_path;
    emit_json(out, a.json_out);
}

// ---- fit-c0 ----

struct FitC0Args {
    std::string spec;
    std::string preset;
    std::optional<double> f1_ghz;
    std::vector<std::string> compare;
    std::vector<double> bracket_af;
    std::string json_out;
};

// A --compare operand: a number in aF or a fit-c0 result file.
double c0_operand(const std::string& s) {
    if (fs::exists(s)) {
        const json j = io::read_json(s);
        if (!j.contains("c0_af") || !j.at("c0_af").is_number()) {
            throw input_error(s + ": field 'c0_af' must be a number");
        }
        return j.at("c0_af").get<double>();
    }
    return parse_number(s, "--compare operand");
}

void cmd_fit_c0(const Global& g, const FitC0Args& a) {
    if (!a.compare.empty()) {
        const double before = c0_operand(a.compare.at(0));
        const double after = c0_operand(a.compare.at(1));
        emit_json({{"before_af", before}, {"after_af", after}, {"relative_change", relative_change(before, after)}},
                  a.json_out);
        return;
    }
    if (!a.f1_ghz) {
        throw input_error("fit-c0: --f1-ghz is required (or use --compare)");
    }
    const ArrayCircuitSpec spec = load_spec(a.spec, a.preset, std::nullopt);
    C0FitOptions opt;
    opt.tolerance_hz = g.cfg.c0_tol_hz;
    opt.bracket_low = (a.bracket_af.empty() ? g.cfg.c0_bracket_low_af : a.bracket_af.at(0)) * units::aF;
    opt.bracket_high = (a.bracket_af.empty() ? g.cfg.c0_bracket_high_af : a.bracket_af.at(1)) * units::aF;
    C0FitResult fit;
    try {
        fit = fit_c0(*a.f1_ghz * units::GHz, spec, opt);
    } catch (const numerical_error& e) {
        const std::string msg = e.what();
        if (msg.rfind("bracket error", 0) == 0) {
            char hint[128];
            std::snprintf(hint, sizeof hint, " (try --bracket-af %g %g)", opt.bracket_low / units::aF / 10.0,
                          opt.bracket_high / units::aF * 10.0);
            throw numerical_error(msg + hint);
        }
        throw;
    }
    ArrayCircuitSpec fitted = spec;
    fitted.c_0 = fit.c_0;
    const ModeSpectrum modes = solve_modes(build_capacitance_matrix(fitted), build_inverse_inductance_matrix(fitted));
    std::vector<double> f_ghz;
    for (double w : modes.frequencies) {
        f_ghz.push_back(rad_to_hz(w) / units::GHz);
    }
    emit_json({{"n_junctions", spec.n_junctions},
               {"frequencies_ghz", f_ghz},
               {"c0_af", fit.c_0 / units::aF},
               {"residual_hz", fit.residual_hz},
               {"iterations", fit.iterations},
               {"bracket_af", {fit.bracket_low / units::aF, fit.bracket_high / units::aF}}},
              a.json_out);
}

// ---- fluxonium ----

struct FluxoniumSource {
    std::string file;
    std::string device;
    std::optional<double> phi;
};

void add_source(CLI::App* app, FluxoniumSource& s) {
    app->add_option("params", s.file, "Fluxonium JSON (e_j, e_c, e_l in GHz, phi_ext in rad)");
    app->add_option("--device", s.device, "Published device A, B or C instead of a file");
    app->add_option("--phi", s.phi, "External flux in units of the flux quantum, overrides the file");
}

struct SpectrumArgs {
    FluxoniumSource src;
    double phi_start = 0.0;
    double phi_stop = 1.0;
    int points = 101;
    std::vector<std::string> transitions{"01", "02", "03", "12"};
    std::string csv;
    bool sweep_given = false;
};

void cmd_spectrum(const Global& g, const SpectrumArgs& a) {
    if (a.points < 1) {
        throw input_error("--points must be >= 1");
    }
    const FluxoniumParams p = load_fluxonium(a.src.file, a.src.device, a.src.phi);
    std::vector<std::pair<int, int>> tr;
    for (const auto& t : a.transitions) {
        tr.push_back(io::parse_transition(t, "--transitions"));
    }
    std::vector<double> phi;
    if (a.src.phi) {
        if (a.sweep_given) {
            throw input_error("--phi selects a single point; do not combine it with --phi-start/--phi-stop/--points");
        }
        phi.push_back(two_pi * *a.src.phi);
    }
    for (int i = 0; !a.src.phi && i < a.points; ++i) {
        const double x = a.points == 1 ? a.phi_start : a.phi_start + (a.phi_stop - a.phi_start) * i / (a.points - 1);
        phi.push_back(two_pi * x);
    }
    const auto table = fluxonium::spectrum_sweep(p, phi, tr, fluxonium::converged_dim(p, convergence_ghz(g)));
    std::ostringstream csv;
    csv << "phi_ext_over_2pi";
    for (const auto& [i, j] : tr) {
        csv << ",f" << i << j << "_ghz";
    }
    csv << '\n';
    for (std::size_t r = 0; r < phi.size(); ++r) {
        csv << fmt_number(phi[r] / two_pi);
        for (double f : table.freq_ghz[r]) {
            csv << ',' << fmt_number(f);
        }
        csv << '\n';
    }
    emit(csv.str(), a.csv);
}

struct ChiArgs {
    FluxoniumSource src;
    double g_ghz = presets::device_c_coupling_ghz;
    double fr_ghz = presets::device_c_resonator_ghz;
    int cutoff = fluxonium::default_level_cutoff;
    std::string json_out;
};

fluxonium::DispersiveShift chi_for(const Global& g, const FluxoniumParams& p, double g_ghz, double fr_ghz, int cutoff) {
    const int dim = std::max(fluxonium::converged_dim(p, convergence_ghz(g)), 4 * (cutoff + 1));
    return fluxonium::dispersive_shift(p, hz_to_rad(g_ghz * units::GHz), hz_to_rad(fr_ghz * units::GHz), dim, cutoff);
}

void cmd_chi(const Global& g, const ChiArgs& a) {
    const FluxoniumParams p = load_fluxonium(a.src.file, a.src.device, a.src.phi);
    const auto chi = chi_for(g, p, a.g_ghz, a.fr_ghz, a.cutoff);
    emit_json({{"params", io::to_json(p)},
               {"g_ghz", a.g_ghz},
               {"fr_ghz", a.fr_ghz},
               {"chi01_mhz", rad_to_hz(chi.chi) / units::MHz},
               {"abs_chi01_mhz", std::abs(rad_to_hz(chi.chi)) / units::MHz},
               {"remainder_mhz", rad_to_hz(chi.remainder) / units::MHz},
               {"level_cutoff", chi.level_cutoff},
               {"dim", chi.dim_used}},
              a.json_out);
}

struct DephasingArgs {
    FluxoniumSource src;
    std::optional<double> chi_mhz;
    double g_ghz = presets::device_c_coupling_ghz;
    double fr_ghz = presets::device_c_resonator_ghz;
    double kappa_mhz = presets::device_c_linewidth_mhz;
    std::vector<double> n_th;
    double n_min = 1e-4;
    double n_max = 0.1;
    int points = 31;
    std::string csv;
};

void cmd_dephasing(const Global& g, const DephasingArgs& a) {
    double chi = 0.0;
    if (a.chi_mhz) {
        chi = hz_to_rad(*a.chi_mhz * units::MHz);
    } else {
        const FluxoniumParams p = load_fluxonium(a.src.file, a.src.device, a.src.phi);
        chi = chi_for(g, p, a.g_ghz, a.fr_ghz, fluxonium::default_level_cutoff).chi;
    }
    std::vector<double> n = a.n_th;
    if (n.empty()) {
        if (!(a.n_min > 0.0) || !(a.n_max > a.n_min) || a.points < 2) {
            throw input_error("dephasing sweep needs 0 < --n-min < --n-max and --points >= 2");
        }
        for (int i = 0; i < a.points; ++i) {
            n.push_back(a.n_min * std::pow(a.n_max / a.n_min, static_cast<double>(i) / (a.points - 1)));
        }
    }
    std::ostringstream csv;
    csv << "n_th,gamma_phi_per_s,t_phi_us\n";
    for (double v : n) {
        const auto r = fluxonium::thermal_dephasing({hz_to_rad(a.kappa_mhz * units::MHz), chi, v});
        csv << fmt_number(v) << ',' << fmt_number(r.gamma_phi) << ',' << fmt_number(r.t_phi / units::us) << '\n';
    }
    emit(csv.str(), a.csv);
}

struct FluxFitArgs {
    std::string points;
    FluxoniumSource guess;
    std::string json_out;
};

void cmd_flux_fit(const Global& g, const FluxFitArgs& a) {
    const FluxoniumParams guess = load_fluxonium(a.guess.file, a.guess.device, a.guess.phi);
    const auto pts = io::spectroscopy_from_csv(io::read_text(a.points), a.points);
    fluxonium::FitOptions opt;
    opt.dim = fluxonium::converged_dim(guess, convergence_ghz(g)) + fluxonium::convergence_dim_step;
    const auto fit = fluxonium::fit_params(pts, guess, opt);
    const auto err = [&](int i) { return std::sqrt(fit.covariance(i, i)); };
    emit_json({{"e_j", fit.params.e_j},
               {"e_c", fit.params.e_c},
               {"e_l", fit.params.e_l},
               {"e_j_error", err(0)},
               {"e_c_error", err(1)},
               {"e_l_error", err(2)},
               {"rms_mhz", fit.rms_ghz * 1e3},
               {"residuals_mhz", [&] {
                    std::vector<double> r;
                    for (double v : fit.residuals_ghz) {
                        r.push_back(v * 1e3);
                    }
                    return r;
                }()},
               {"iterations", fit.iterations},
               {"dim", fit.dim_used},
               {"status", fit.status}},
              a.json_out);
}

// ---- resonator ----

json hanger_json(const resonator::HangerFit& f) {
    return {{"f0_hz", f.f0},         {"q_i", f.q_i},     {"q_e", f.q_e},
            {"phi_asym", f.phi_asym}, {"amplitude", f.amplitude}, {"phase_offset", f.phase_offset},
            {"delay_s", f.delay}};
}

struct FitS21Args {
    std::string trace;
    std::string json_out;
};

void cmd_fit_s21(const FitS21Args& a) {
    const auto res = resonator::fit_s21(io::read_trace(a.trace));
    emit_json({{"fit", hanger_json(res.fit)},
               {"error", hanger_json(res.error)},
               {"q_total", res.fit.q_total()},
               {"residual_rms", res.residual_rms},
               {"noise_sigma", res.noise_sigma},
               {"iterations", res.iterations}},
              a.json_out);
}

// Cold attenuation from either a cold value or a room-temperature value.
std::optional<double> cold_attenuation(const Global& g, std::optional<double> cold, std::optional<double> warm) {
    if (cold && warm) {
        throw input_error("give --attenuation-db or --room-temp-attenuation-db, not both");
    }
    if (warm) {
        return resonator::apply_attenuation_correction(*warm, g.cfg.attenuation_correction_db);
    }
    return cold;
}

struct KerrArgs {
    std::string dir;
    std::optional<double> attenuation_db;
    std::optional<double> room_temp_db;
    std::string device;
    std::optional<int> junctions;
    std::size_t before = resonator::default_steps_before;
    std::size_t after = resonator::default_steps_after;
    std::string csv;
    std::string json_out;
};

void cmd_kerr(const Global& g, const KerrArgs& a) {
    const auto att = cold_attenuation(g, a.attenuation_db, a.room_temp_db);
    const auto sweep = resonator::analyze_power_sweep(io::read_power_sweep(a.dir, att.value_or(0.0)), a.before, a.after);
    // Quality factors at n ~ 1: mean and spread over the anchor and its neighbours.
    const std::size_t lo = sweep.anchor > 0 ? sweep.anchor - 1 : 0;
    const std::size_t hi = std::min(sweep.rows.size() - 1, sweep.anchor + 1);
    std::vector<double> qi, qe;
    for (std::size_t i = lo; i <= hi; ++i) {
        qi.push_back(sweep.rows[i].s21.fit.q_i);
        qe.push_back(sweep.rows[i].s21.fit.q_e);
    }
    const auto si = probe::probe_stats(qi);
    const auto se = probe::probe_stats(qe);
    std::ostringstream csv;
    csv << "power_dbm,attenuation_db,n_photons,f0_hz,f0_error_hz,q_i,q_e\n";
    for (const auto& r : sweep.rows) {
        csv << fmt_number(r.power_dbm) << ',' << fmt_number(r.attenuation_db) << ',' << fmt_number(r.n_photons) << ','
            << fmt_number(r.s21.fit.f0) << ',' << fmt_number(r.s21.error.f0) << ',' << fmt_number(r.s21.fit.q_i)
            << ',' << fmt_number(r.s21.fit.q_e) << '\n';
    }
    if (!a.csv.empty()) {
        emit(csv.str(), a.csv);
    }
    json row{{"device", a.device.empty() ? fs::path(a.dir).filename().string() : a.device},
             {"k_self_khz", sweep.kerr.k_self},
             {"k_self_error_khz", sweep.kerr.k_self_error},
             {"f_intercept_ghz", sweep.kerr.f_intercept / units::GHz},
             {"f_intercept_error_hz", sweep.kerr.f_intercept_error},
             {"n_window", {sweep.kerr.n_min, sweep.kerr.n_max}},
             {"traces", sweep.rows.size()},
             {"q_i", si.mean},
             {"q_i_std", si.std_dev},
             {"q_e", se.mean},
             {"q_e_std", se.std_dev}};
    if (a.junctions) {
        row["junctions"] = *a.junctions;
    }
    emit_json(row, a.json_out);
}

struct PhotonsArgs {
    double power_dbm = 0.0;
    std::optional<double> attenuation_db;
    std::optional<double> room_temp_db;
    std::string trace;
    std::optional<double> f0_ghz;
    std::optional<double> q_i;
    std::optional<double> q_e;
    std::string json_out;
};

void cmd_photons(const Global& g, const PhotonsArgs& a) {
    const auto att = cold_attenuation(g, a.attenuation_db, a.room_temp_db);
    if (!att) {
        throw input_error("photons: --attenuation-db or --room-temp-attenuation-db is required");
    }
    resonator::HangerFit h;
    if (!a.trace.empty()) {
        h = resonator::fit_s21(io::read_trace(a.trace)).fit;
    } else if (a.f0_ghz && a.q_i && a.q_e) {
        h.f0 = *a.f0_ghz * units::GHz;
        h.q_i = *a.q_i;
        h.q_e = *a.q_e;
        if (!(h.f0 > 0.0) || !(h.q_i > 0.0) || !(h.q_e > 0.0)) {
            throw input_error("photons: f0, q_i and q_e must be > 0");
        }
    } else {
        throw input_error("photons: give --trace or all of --f0-ghz, --q-i, --q-e");
    }
    emit_json({{"power_dbm", a.power_dbm},
               {"attenuation_db", *att},
               {"device_power_dbm", a.power_dbm - *att},
               {"f0_hz", h.f0},
               {"q_i", h.q_i},
               {"q_e", h.q_e},
               {"n_photons", resonator::photons_from_power(a.power_dbm, *att, h)}},
              a.json_out);
}

// ---- probe ----

struct ProbeArgs {
    std::string data;
    std::string json_out;
};

void cmd_probe(const Global& g, const ProbeArgs& a) {
    const auto ds = io::probe_from_csv(io::read_text(a.data), a.data);
    const auto fit = probe::fit_probe(ds);
    const double i_c = probe::ab_critical_current(fit.r_junction, g.cfg.gap_ev());
    json groups = json::array();
    for (const auto& rec : ds.records) {
        const auto s = probe::probe_stats(rec.resistances);
        groups.push_back({{"n_junctions", rec.n_junctions},
                          {"count", rec.resistances.size()},
                          {"mean_ohm", s.mean},
                          {"std_ohm", s.std_dev},
                          {"cv", s.cv}});
    }
    emit_json({{"r_junction_ohm", fit.r_junction},
               {"r_junction_error_ohm", std::sqrt(fit.covariance(0, 0))},
               {"r_substrate_ohm", fit.r_substrate},
               {"r_substrate_error_ohm", std::sqrt(fit.covariance(1, 1))},
               {"correlation", fit.covariance(0, 1) / std::sqrt(fit.covariance(0, 0) * fit.covariance(1, 1))},
               {"reduced_chi2", fit.reduced_chi2},
               {"gap_uev", g.cfg.gap_uev},
               {"i_c_a", i_c},
               {"l_j_nh", probe::junction_inductance(i_c) / units::nH},
               {"groups", groups}},
              a.json_out);
}

// ---- reproduce ----

int cmd_reproduce(const Global& g, const std::string& out) {
    const auto cs = reproduce::run_all(g.cfg);
    emit(reproduce::markdown_report(cs), out);
    for (const auto& c : cs) {
        if (!c.passed) {
            return 1;
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Josephson-junction array and fluxonium analysis"};
    app.require_subcommand(1);
    Global g;
    app.add_option("--config", g.config_path,
                   std::string("key = value run configuration (default: $") + io::config_env_var + ")");

    ModesArgs modes;
    auto* m = app.add_subcommand("modes", "Normal modes of an array circuit");
    m->add_option("spec", modes.spec, "Circuit JSON (n_junctions, l_j in nH, capacitances in fF)");
    m->add_option("--preset", modes.preset, "Published paddle circuit, PROCESS:N, e.g. etched:100");
    m->add_option("--c0-af", modes.c0_af, "Ground capacitance per island in aF, overrides the spec");
    m->add_flag("--grounded", modes.grounded, "Closed-form grounded chain, with the numeric solve as a check");
    m->add_option("--csv", modes.csv, "Mode table path (default: <output_dir>/<stem>_modes.csv)");
    m->add_option("-o,--output", modes.json_out, "JSON output path (default: stdout)");

    FitC0Args fc;
    auto* c0 = app.add_subcommand("fit-c0", "Ground capacitance from the measured fundamental");
    c0->add_option("spec", fc.spec, "Circuit JSON");
    c0->add_option("--preset", fc.preset, "Published paddle circuit, PROCESS:N");
    c0->add_option("--f1-ghz", fc.f1_ghz, "Measured fundamental in GHz");
    c0->add_option("--bracket-af", fc.bracket_af, "Search bracket LOW HIGH in aF")->expected(2);
    c0->add_option("--compare", fc.compare, "Relative change between two c_0 values (aF or result files)")
        ->expected(2);
    c0->add_option("-o,--output", fc.json_out, "JSON output path");

    auto* fl = app.add_subcommand("fluxonium", "Fluxonium spectrum, readout and fits");
    fl->require_subcommand(1);

    SpectrumArgs sp;
    auto* fs_ = fl->add_subcommand("spectrum", "Transition frequencies versus external flux (CSV)");
    add_source(fs_, sp.src);
    fs_->add_option("--phi-start", sp.phi_start, "First flux, in flux quanta");
    fs_->add_option("--phi-stop", sp.phi_stop, "Last flux, in flux quanta");
    fs_->add_option("--points", sp.points, "Number of flux points");
    fs_->add_option("--transitions", sp.transitions, "Transitions such as 01 02 12")->delimiter(',');
    fs_->add_option("--csv,-o,--output", sp.csv, "Output path (default: stdout)");

    ChiArgs ch;
    auto* fc_ = fl->add_subcommand("chi", "Dispersive shift of the 0-1 transition");
    add_source(fc_, ch.src);
    fc_->add_option("--g-ghz", ch.g_ghz, "Coupling g/2pi in GHz");
    fc_->add_option("--fr-ghz", ch.fr_ghz, "Resonator frequency in GHz");
    fc_->add_option("--cutoff", ch.cutoff, "Highest level in the sum");
    fc_->add_option("-o,--output", ch.json_out, "JSON output path");

    DephasingArgs dp;
    auto* fd = fl->add_subcommand("dephasing", "Thermal-photon dephasing versus n_th (CSV)");
    add_source(fd, dp.src);
    fd->add_option("--chi-mhz", dp.chi_mhz, "Use this chi/2pi in MHz instead of computing it");
    fd->add_option("--g-ghz", dp.g_ghz, "Coupling g/2pi in GHz");
    fd->add_option("--fr-ghz", dp.fr_ghz, "Resonator frequency in GHz");
    fd->add_option("--kappa-mhz", dp.kappa_mhz, "Resonator linewidth kappa/2pi in MHz");
    fd->add_option("--n-th", dp.n_th, "Explicit thermal photon numbers")->delimiter(',');
    fd->add_option("--n-min", dp.n_min, "Log sweep start");
    fd->add_option("--n-max", dp.n_max, "Log sweep stop");
    fd->add_option("--points", dp.points, "Log sweep points");
    fd->add_option("--csv,-o,--output", dp.csv, "Output path (default: stdout)");

    FluxFitArgs ff;
    auto* ffit = fl->add_subcommand("fit", "Fit E_J, E_C, E_L to spectroscopy points");
    ffit->add_option("points", ff.points, "CSV: phi_ext_over_2pi, transition, freq_ghz")->required();
    ffit->add_option("--guess", ff.guess.file, "Initial guess JSON");
    ffit->add_option("--device", ff.guess.device, "Published device as the initial guess");
    ffit->add_option("-o,--output", ff.json_out, "JSON output path");

    auto* rs = app.add_subcommand("resonator", "Resonator trace fits and power sweeps");
    rs->require_subcommand(1);

    FitS21Args s21;
    auto* rfit = rs->add_subcommand("fit-s21", "Hanger fit of one trace");
    rfit->add_option("trace", s21.trace, "CSV: freq_hz with s21_re, s21_im or s21_db, s21_phase_rad")->required();
    rfit->add_option("-o,--output", s21.json_out, "JSON output path");

    KerrArgs kr;
    auto* rk = rs->add_subcommand("kerr", "Self-Kerr slope from a directory of per-power traces");
    rk->add_option("dir", kr.dir, "Directory of trace CSVs with power sidecars or _p<dBm> names")->required();
    rk->add_option("--attenuation-db", kr.attenuation_db, "Cold line attenuation where sidecars give none");
    rk->add_option("--room-temp-attenuation-db", kr.room_temp_db, "Warm attenuation, corrected to cold");
    rk->add_option("--device", kr.device, "Label for the output row (default: directory name)");
    rk->add_option("--junctions", kr.junctions, "Junction count for the output row");
    rk->add_option("--before", kr.before, "Fit window points below the single-photon point");
    rk->add_option("--after", kr.after, "Fit window points above it");
    rk->add_option("--csv", kr.csv, "Per-trace table path");
    rk->add_option("-o,--output", kr.json_out, "JSON output path");

    PhotonsArgs ph;
    auto* rp = rs->add_subcommand("photons", "Average photon number at a drive power");
    rp->add_option("--power-dbm", ph.power_dbm, "Source power in dBm")->required();
    rp->add_option("--attenuation-db", ph.attenuation_db, "Cold line attenuation");
    rp->add_option("--room-temp-attenuation-db", ph.room_temp_db, "Warm attenuation, corrected to cold");
    rp->add_option("--trace", ph.trace, "Take f0, Q_i, Q_e from a fit of this trace");
    rp->add_option("--f0-ghz", ph.f0_ghz, "Resonance frequency in GHz");
    rp->add_option("--q-i", ph.q_i, "Internal quality factor");
    rp->add_option("--q-e", ph.q_e, "External quality factor");
    rp->add_option("-o,--output", ph.json_out, "JSON output path");

    ProbeArgs pr;
    auto* pf = app.add_subcommand("probe-fit", "Parallel-resistance fit of room-temperature probe data");
    pf->add_option("data", pr.data, "CSV: n_junctions, resistance_ohm")->required();
    pf->add_option("-o,--output", pr.json_out, "JSON output path");

    std::string report;
    auto* rep = app.add_subcommand("reproduce", "Run the acceptance checks and print a markdown report");
    rep->add_option("-o,--output", report, "Report path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_input;
    }

    try {
        g.cfg = io::load_config(g.config_path ? std::optional<fs::path>(*g.config_path) : std::nullopt);
        if (*m) {
            cmd_modes(g, modes);
        } else if (*c0) {
            cmd_fit_c0(g, fc);
        } else if (*fs_) {
            sp.sweep_given = fs_->count("--phi-start") + fs_->count("--phi-stop") + fs_->count("--points") > 0;
            cmd_spectrum(g, sp);
        } else if (*fc_) {
            cmd_chi(g, ch);
        } else if (*fd) {
            cmd_dephasing(g, dp);
        } else if (*ffit) {
            cmd_flux_fit(g, ff);
        } else if (*rfit) {
            cmd_fit_s21(s21);
        } else if (*rk) {
            cmd_kerr(g, kr);
        } else if (*rp) {
            cmd_photons(g, ph);
        } else if (*pf) {
            cmd_probe(g, pr);
        } else if (*rep) {
            return cmd_reproduce(g, report);
        }
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const numerical_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numerical;
    }
    return 0;
}
