#pragma once

// File formats: circuit and fluxonium JSON, CSV tables, power-sweep
// directories and the flat key=value run configuration.

#include "jjcircuit/circuit.hpp"
#include "jjcircuit/constants.hpp"
#include "jjcircuit/error.hpp"
#include "jjcircuit/fluxonium.hpp"
#include "jjcircuit/probe.hpp"
#include "jjcircuit/resonator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace jjcircuit::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw input_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw input_error("cannot write " + path.string());
    }
    out << text;
}

inline json parse_json(const std::string& text, const std::string& origin) {
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw input_error(origin + ": parse error: empty input");
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw input_error(origin + ": parse error: " + e.what());
    }
}

inline json read_json(const fs::path& path) { return parse_json(read_text(path), path.string()); }

namespace detail {

inline double number_field(const json& j, const char* key, const std::string& origin) {
    if (!j.contains(key)) {
        throw input_error(origin + ": missing field '" + key + "'");
    }
    const json& v = j.at(key);
    if (!v.is_number()) {
        throw input_error(origin + ": field '" + key + "' must be a number");
    }
    return v.get<double>();
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& origin) {
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* name) { return k == name; })) {
            throw input_error(origin + ": unknown field '" + k + "'");
        }
    }
}

} // namespace detail

// Capacitances in fF, inductance in nH. c_0 may be omitted (zero).
inline ArrayCircuitSpec spec_from_json(const json& j, const std::string& origin = "spec") {
    if (!j.is_object()) {
        throw input_error(origin + ": expected a JSON object");
    }
    detail::reject_unknown(j,
                           {"n_junctions", "l_j", "c_j", "c_0", "c_s", "c_g_left", "c_g_right", "c_c_left",
                            "c_c_right"},
                           origin);
    ArrayCircuitSpec s;
    if (!j.contains("n_junctions") || !j.at("n_junctions").is_number_integer()) {
        throw input_error(origin + ": field 'n_junctions' must be an integer");
    }
    s.n_junctions = j.at("n_junctions").get<int>();
    s.l_j = detail::number_field(j, "l_j", origin) * units::nH;
    s.c_j = detail::number_field(j, "c_j", origin) * units::fF;
    s.c_0 = j.contains("c_0") ? detail::number_field(j, "c_0", origin) * units::fF : 0.0;
    s.c_s = detail::number_field(j, "c_s", origin) * units::fF;
    s.c_g_left = detail::number_field(j, "c_g_left", origin) * units::fF;
    s.c_g_right = detail::number_field(j, "c_g_right", origin) * units::fF;
    s.c_c_left = detail::number_field(j, "c_c_left", origin) * units::fF;
    s.c_c_right = detail::number_field(j, "c_c_right", origin) * units::fF;
    try {
        validate(s);
    } catch (const input_error& e) {
        throw input_error(origin + ": " + e.what());
    }
    return s;
}

inline json to_json(const ArrayCircuitSpec& s) {
    return json{{"n_junctions", s.n_junctions},
                {"l_j", s.l_j / units::nH},
                {"c_j", s.c_j / units::fF},
                {"c_0", s.c_0 / units::fF},
                {"c_s", s.c_s / units::fF},
                {"c_g_left", s.c_g_left / units::fF},
                {"c_g_right", s.c_g_right / units::fF},
                {"c_c_left", s.c_c_left / units::fF},
                {"c_c_right", s.c_c_right / units::fF}};
}

// Energies in GHz, phi_ext in radians (defaults to pi).
inline FluxoniumParams fluxonium_from_json(const json& j, const std::string& origin = "fluxonium") {
    if (!j.is_object()) {
        throw input_error(origin + ": expected a JSON object");
    }
    detail::reject_unknown(j, {"e_j", "e_c", "e_l", "phi_ext"}, origin);
    FluxoniumParams p;
    p.e_j = detail::number_field(j, "e_j", origin);
    p.e_c = detail::number_field(j, "e_c", origin);
    p.e_l = detail::number_field(j, "e_l", origin);
    p.phi_ext = j.contains("phi_ext") ? detail::number_field(j, "phi_ext", origin) : std::numbers::pi;
    try {
        validate(p);
    } catch (const input_error& e) {
        throw input_error(origin + ": " + e.what());
    }
    return p;
}

inline json to_json(const FluxoniumParams& p) {
    return json{{"e_j", p.e_j}, {"e_c", p.e_c}, {"e_l", p.e_l}, {"phi_ext", p.phi_ext}};
}

// ---- CSV ----

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        return std::nullopt;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\"");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline double to_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw input_error(where + ": not a number: '" + s + "'");
    }
    return v;
}

} // namespace detail

// Comma-separated with a header row; '#' lines and blank lines are skipped.
inline CsvTable parse_csv(const std::string& text, const std::string& origin) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') {
            continue;
        }
        auto cells = detail::split(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw input_error(origin + ": row " + std::to_string(t.rows.size() + 1) + " has " +
                              std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) {
        throw input_error(origin + ": parse error: empty input");
    }
    return t;
}

inline std::size_t require_column(const CsvTable& t, std::string_view name, const std::string& origin) {
    const auto c = t.column(name);
    if (!c) {
        throw input_error(origin + ": missing column '" + std::string(name) + "'");
    }
    return *c;
}

inline double cell(const CsvTable& t, std::size_t row, std::size_t col, const std::string& origin) {
    return detail::to_double(t.rows[row][col], origin + " row " + std::to_string(row + 1));
}

// freq_hz with either s21_re, s21_im or s21_db, s21_phase_rad.
inline resonator::S21Trace trace_from_csv(const std::string& text, const std::string& origin) {
    const CsvTable t = parse_csv(text, origin);
    const std::size_t cf = require_column(t, "freq_hz", origin);
    const auto cre = t.column("s21_re");
    const auto cim = t.column("s21_im");
    const auto cdb = t.column("s21_db");
    const auto cph = t.column("s21_phase_rad");
    const bool linear = cre && cim;
    if (!linear && !(cdb && cph)) {
        throw input_error(origin + ": need columns s21_re,s21_im or s21_db,s21_phase_rad");
    }
    resonator::S21Trace trace;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        trace.freqs.push_back(cell(t, r, cf, origin));
        if (linear) {
            trace.s21.emplace_back(cell(t, r, *cre, origin), cell(t, r, *cim, origin));
        } else {
            const double mag = std::pow(10.0, cell(t, r, *cdb, origin) / 20.0);
            trace.s21.push_back(std::polar(mag, cell(t, r, *cph, origin)));
        }
    }
    try {
        resonator::validate(trace);
    } catch (const input_error& e) {
        throw input_error(origin + ": " + e.what());
    }
    return trace;
}

inline resonator::S21Trace read_trace(const fs::path& path) { return trace_from_csv(read_text(path), path.string()); }

inline std::string trace_to_csv(const resonator::S21Trace& t) {
    std::ostringstream out;
    out.precision(17);
    out << "freq_hz,s21_re,s21_im\n";
    for (std::size_t i = 0; i < t.freqs.size(); ++i) {
        out << t.freqs[i] << ',' << t.s21[i].real() << ',' << t.s21[i].imag() << '\n';
    }
    return out.str();
}

// "01", "0-1", "0_1" or "0:1".
inline std::pair<int, int> parse_transition(const std::string& s, const std::string& where) {
    std::string digits = s;
    int i = -1, j = -1;
    const auto sep = s.find_first_of("-_:");
    try {
        if (sep != std::string::npos) {
            i = std::stoi(s.substr(0, sep));
            j = std::stoi(s.substr(sep + 1));
        } else if (s.size() == 2 && std::isdigit(static_cast<unsigned char>(s[0])) &&
                   std::isdigit(static_cast<unsigned char>(s[1]))) {
            i = s[0] - '0';
            j = s[1] - '0';
        }
    } catch (const std::exception&) {
        i = j = -1;
    }
    if (i < 0 || j <= i) {
        throw input_error(where + ": bad transition '" + s + "' (expected e.g. 01 or 0-12)");
    }
    return {i, j};
}

inline std::vector<fluxonium::SpectroscopyPoint> spectroscopy_from_csv(const std::string& text,
                                                                      const std::string& origin) {
    const CsvTable t = parse_csv(text, origin);
    const std::size_t cphi = require_column(t, "phi_ext_over_2pi", origin);
    const std::size_t ctr = require_column(t, "transition", origin);
    const std::size_t cf = require_column(t, "freq_ghz", origin);
    std::vector<fluxonium::SpectroscopyPoint> pts;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto [i, j] = parse_transition(t.rows[r][ctr], origin + " row " + std::to_string(r + 1));
        pts.push_back({two_pi * cell(t, r, cphi, origin), i, j, cell(t, r, cf, origin)});
    }
    return pts;
}

inline std::string spectroscopy_to_csv(const std::vector<fluxonium::SpectroscopyPoint>& pts) {
    std::ostringstream out;
    out.precision(15);
    out << "phi_ext_over_2pi,transition,freq_ghz\n";
    for (const auto& p : pts) {
        out << p.phi_ext / two_pi << ',' << p.level_i << '-' << p.level_j << ',' << p.freq_ghz << '\n';
    }
    return out.str();
}

inline probe::ProbeDataset probe_from_csv(const std::string& text, const std::string& origin) {
    const CsvTable t = parse_csv(text, origin);
    const std::size_t cn = require_column(t, "n_junctions", origin);
    const std::size_t cr = require_column(t, "resistance_ohm", origin);
    std::vector<std::pair<int, double>> rows;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double n = cell(t, r, cn, origin);
        if (n != std::floor(n) || n < 1) {
            throw input_error(origin + " row " + std::to_string(r + 1) + ": n_junctions must be a positive integer");
        }
        const double res = cell(t, r, cr, origin);
        if (!(res > 0.0)) {
            throw input_error(origin + " row " + std::to_string(r + 1) + ": resistance_ohm must be > 0");
        }
        rows.emplace_back(static_cast<int>(n), res);
    }
    return probe::group_by_count(rows);
}

inline std::string probe_to_csv(const probe::ProbeDataset& ds) {
    std::ostringstream out;
    out.precision(15);
    out << "n_junctions,resistance_ohm\n";
    for (const auto& rec : ds.records) {
        for (double r : rec.resistances) {
            out << rec.n_junctions << ',' << r << '\n';
        }
    }
    return out.str();
}

// ---- power sweeps ----

// Drive power of a trace file, from <file>.json / <stem>.json
// ({"power_dbm": .., optional "attenuation_db": ..}) or from a name ending
// in _p<dBm>, e.g. r3_p-72.5.csv.
struct TraceMetadata {
    std::optional<double> power_dbm;
    std::optional<double> attenuation_db;
};

inline TraceMetadata trace_metadata(const fs::path& csv) {
    TraceMetadata m;
    for (const fs::path& side : {fs::path(csv.string() + ".json"), fs::path(csv).replace_extension(".json")}) {
        if (fs::exists(side)) {
            const json j = read_json(side);
            if (j.contains("power_dbm")) {
                m.power_dbm = detail::number_field(j, "power_dbm", side.string());
            }
            if (j.contains("attenuation_db")) {
                m.attenuation_db = detail::number_field(j, "attenuation_db", side.string());
            }
            break;
        }
    }
    if (!m.power_dbm) {
        static const std::regex pat(R"(_p(-?[0-9]+(?:\.[0-9]+)?)$)");
        std::smatch match;
        const std::string stem = csv.stem().string();
        if (std::regex_search(stem, match, pat)) {
            m.power_dbm = std::stod(match[1].str());
        }
    }
    return m;
}

// Every *.csv in dir. attenuation_db is used where a sidecar gives none.
inline std::vector<resonator::S21Trace> read_power_sweep(const fs::path& dir, double attenuation_db) {
    if (!fs::is_directory(dir)) {
        throw input_error(dir.string() + ": not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw input_error(dir.string() + ": no .csv traces");
    }
    std::vector<resonator::S21Trace> traces;
    for (const auto& f : files) {
        const TraceMetadata m = trace_metadata(f);
        if (!m.power_dbm) {
            throw input_error(f.string() + ": missing power metadata (sidecar power_dbm or _p<dBm> suffix)");
        }
        auto t = read_trace(f);
        t.power_dbm = *m.power_dbm;
        t.attenuation_db = m.attenuation_db.value_or(attenuation_db);
        traces.push_back(std::move(t));
    }
    return traces;
}

inline void write_power_sweep(const fs::path& dir, const std::string& name,
                              const std::vector<resonator::S21Trace>& traces) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < traces.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s_%03zu.csv", name.c_str(), i);
        const fs::path csv = dir / buf;
        write_text(csv, trace_to_csv(traces[i]));
        write_text(fs::path(csv).replace_extension(".json"),
                   json{{"power_dbm", traces[i].power_dbm}, {"attenuation_db", traces[i].attenuation_db}}.dump(2) +
                       "\n");
    }
}

// ---- run configuration ----

struct RunConfig {
    double gap_uev = 180.0;
    double attenuation_correction_db = resonator::default_cable_correction_db;
    double c0_tol_hz = 1e3;
    double fluxonium_convergence_khz = 1.0;
    double c0_bracket_low_af = 1.0;
    double c0_bracket_high_af = 1e4;
    std::string output_dir = ".";

    double gap_ev() const { return gap_uev * 1e-6; }
};

inline constexpr const char* config_env_var = "JJCIRCUIT_CONFIG";

// key = value per line, '#' starts a comment. Unknown keys are rejected.
inline RunConfig parse_config(const std::string& text, const std::string& origin) {
    RunConfig c;
    const std::map<std::string, double*> numeric{
        {"gap_uev", &c.gap_uev},
        {"attenuation_correction_db", &c.attenuation_correction_db},
        {"c0_tol_hz", &c.c0_tol_hz},
        {"fluxonium_convergence_khz", &c.fluxonium_convergence_khz},
        {"c0_bracket_low_af", &c.c0_bracket_low_af},
        {"c0_bracket_high_af", &c.c0_bracket_high_af},
    };
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string t = detail::trim(line);
        if (t.empty()) {
            continue;
        }
        const std::string where = origin + ":" + std::to_string(lineno);
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw input_error(where + ": expected key = value");
        }
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key == "output_dir") {
            c.output_dir = value;
            continue;
        }
        const auto it = numeric.find(key);
        if (it == numeric.end()) {
            throw input_error(where + ": unknown key '" + key + "'");
        }
        *it->second = detail::to_double(value, where);
    }
    // A zero gap stays loadable so reproduce can report the chain it breaks.
    if (!(c.gap_uev >= 0.0)) {
        throw input_error(origin + ": gap_uev must be >= 0");
    }
    if (!std::isfinite(c.attenuation_correction_db)) {
        throw input_error(origin + ": attenuation_correction_db must be finite");
    }
    for (const auto& [key, v] : {std::pair{"c0_tol_hz", c.c0_tol_hz},
                                 std::pair{"fluxonium_convergence_khz", c.fluxonium_convergence_khz},
                                 std::pair{"c0_bracket_low_af", c.c0_bracket_low_af},
                                 std::pair{"c0_bracket_high_af", c.c0_bracket_high_af}}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw input_error(origin + ": " + key + " must be > 0");
        }
    }
    if (!(c.c0_bracket_low_af < c.c0_bracket_high_af)) {
        throw input_error(origin + ": c0_bracket_low_af must be below c0_bracket_high_af");
    }
    return c;
}

// Explicit path first, then $JJCIRCUIT_CONFIG, else defaults.
inline RunConfig load_config(const std::optional<fs::path>& path = std::nullopt) {
    if (path) {
        return parse_config(read_text(*path), path->string());
    }
    if (const char* env = std::getenv(config_env_var); env && *env) {
        return parse_config(read_text(env), env);
    }
    return {};
}

} // namespace jjcircuit::io
