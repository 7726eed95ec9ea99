#pragma once

// Hanger-resonator data reduction: complex S21 fitting, drive power to photon
// number, cable attenuation correction, and self-Kerr slope extraction.

#include "jjcircuit/constants.hpp"
#include "jjcircuit/error.hpp"
#include "jjcircuit/least_squares.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace jjcircuit::resonator {

using complex = std::complex<double>;

struct S21Trace {
    std::vector<double> freqs; // Hz, strictly increasing
    std::vector<complex> s21;  // linear
    double power_dbm = 0.0;    // instrument output
    double attenuation_db = 0.0;
};

inline void validate(const S21Trace& t) {
    if (t.freqs.size() != t.s21.size()) {
        throw input_error("S21 trace: frequency and data lengths differ");
    }
    for (std::size_t i = 1; i < t.freqs.size(); ++i) {
        if (!(t.freqs[i] > t.freqs[i - 1])) {
            throw input_error("S21 trace: frequencies must be strictly increasing");
        }
    }
}

struct HangerFit {
    double f0 = 0.0;            // Hz
    double q_i = 0.0;
    double q_e = 0.0;           // magnitude
    double phi_asym = 0.0;      // rad
    double amplitude = 1.0;
    double phase_offset = 0.0;  // rad
    double delay = 0.0;         // s

    double q_total() const { return 1.0 / (1.0 / q_i + 1.0 / q_e); }
};

// S21(f) = A e^{i(theta + 2 pi f tau)} [1 - (Q_t/Q_e) e^{i phi} / (1 + 2 i Q_t (f - f0)/f0)]
inline complex s21_model(double f, const HangerFit& p) {
    const double qt = p.q_total();
    const complex baseline = std::polar(p.amplitude, p.phase_offset + two_pi * f * p.delay);
    const complex resonance =
        (qt / p.q_e) * std::polar(1.0, p.phi_asym) / complex(1.0, 2.0 * qt * (f - p.f0) / p.f0);
    return baseline * (1.0 - resonance);
}

inline S21Trace synthesize(const std::vector<double>& freqs, const HangerFit& p) {
    S21Trace t;
    t.freqs = freqs;
    t.s21.reserve(freqs.size());
    for (double f : freqs) {
        t.s21.push_back(s21_model(f, p));
    }
    return t;
}

struct Circle {
    complex center;
    double radius = 0.0;
};

// Algebraic (Kasa) circle fit: least squares on x^2 + y^2 + D x + E y + F = 0.
inline Circle fit_circle(const std::vector<complex>& z) {
    if (z.size() < 3) {
        throw input_error("circle fit needs at least 3 points");
    }
    const Eigen::Index n = static_cast<Eigen::Index>(z.size());
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const complex& p = z[static_cast<std::size_t>(i)];
        a(i, 0) = p.real();
        a(i, 1) = p.imag();
        a(i, 2) = 1.0;
        b(i) = -std::norm(p);
    }
    const Eigen::Vector3d s = a.colPivHouseholderQr().solve(b);
    Circle c;
    c.center = complex(-0.5 * s(0), -0.5 * s(1));
    c.radius = std::sqrt(std::max(std::norm(c.center) - s(2), 0.0));
    return c;
}

struct HangerFitResult {
    HangerFit fit;
    HangerFit error;         // one-sigma standard errors, field by field
    HangerFit initial;       // circle-fit starting point
    double residual_rms = 0.0;
    double noise_sigma = 0.0; // per-quadrature noise estimate from the data
    int iterations = 0;
};

namespace detail {

inline double median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

inline std::vector<double> unwrapped_phase(const std::vector<complex>& z) {
    std::vector<double> ph(z.size());
    double offset = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double raw = std::arg(z[i]);
        if (i > 0) {
            const double prev = ph[i - 1] - offset;
            double jump = raw - prev;
            if (jump > std::numbers::pi) {
                offset -= two_pi;
            } else if (jump < -std::numbers::pi) {
                offset += two_pi;
            }
        }
        ph[i] = raw + offset;
    }
    return ph;
}

inline double wrap_angle(double a) {
    return std::remainder(a, two_pi);
}

// Internal coordinates: offset of f0 from the centre in units of the
// initial linewidth, log quality factors, and a delay measured as phase per
// linewidth, which brings all seven parameters to order one.
struct Scaling {
    double f_center;
    double width;
};

inline HangerFit from_internal(const Eigen::VectorXd& x, const Scaling& s) {
    HangerFit p;
    p.f0 = s.f_center + x(0) * s.width;
    p.q_i = std::exp(x(1));
    p.q_e = std::exp(x(2));
    p.phi_asym = x(3);
    p.amplitude = x(4);
    p.delay = x(6) / (two_pi * s.width);
    p.phase_offset = x(5) - two_pi * s.f_center * p.delay;
    return p;
}

inline Eigen::VectorXd to_internal(const HangerFit& p, const Scaling& s) {
    Eigen::VectorXd x(7);
    x << (p.f0 - s.f_center) / s.width, std::log(p.q_i), std::log(p.q_e), p.phi_asym, p.amplitude,
        wrap_angle(p.phase_offset + two_pi * s.f_center * p.delay), two_pi * s.width * p.delay;
    return x;
}

} // namespace detail

// Circle-fit initialization, then complex least squares of s21_model.
inline HangerFitResult fit_s21(const S21Trace& trace) {
    validate(trace);
    const std::size_t n = trace.freqs.size();
    if (n < 20) {
        throw input_error("S21 trace: need at least 20 points");
    }
    const double fc = trace.freqs[n / 2];
    const std::size_t edge = std::max<std::size_t>(3, n / 10);
    {
        // A constant trace is circular under any delay; catch it before the scan.
        double lo = std::abs(trace.s21[0]), hi = lo;
        for (const auto& v : trace.s21) {
            lo = std::min(lo, std::abs(v));
            hi = std::max(hi, std::abs(v));
        }
        if (hi - lo <= 1e-9 * hi) {
            throw numerical_error("no resonance: |S21| is constant across the trace");
        }
    }

    // Cable delay from the phase slope of the off-resonant edges. Each edge
    // is unwrapped on its own: near a deep dip the data passes close to the
    // origin and noise can add a spurious 2 pi across the resonance.
    auto edge_slope = [&](std::size_t first, std::size_t count) {
        std::vector<complex> part(trace.s21.begin() + static_cast<std::ptrdiff_t>(first),
                                  trace.s21.begin() + static_cast<std::ptrdiff_t>(first + count));
        const auto ph = detail::unwrapped_phase(part);
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double x = trace.freqs[first + i] - trace.freqs[first];
            sx += x;
            sy += ph[i];
            sxx += x * x;
            sxy += x * ph[i];
        }
        const double m = static_cast<double>(count);
        const double denom = m * sxx - sx * sx;
        return denom > 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
    };
    const double tau_edges = 0.5 * (edge_slope(0, edge) + edge_slope(n - edge, edge)) / two_pi;

    // The resonance still bends the edge phase, so refine the delay to the
    // value that makes the corrected data most circular.
    auto derotate = [&](double tau) {
        std::vector<complex> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = trace.s21[i] * std::polar(1.0, -two_pi * (trace.freqs[i] - fc) * tau);
        }
        return out;
    };
    const double span = trace.freqs.back() - trace.freqs.front();
    auto roundness = [&](double tau) {
        const auto pts = derotate(tau);
        const Circle c = fit_circle(pts);
        double acc = 0.0;
        for (const auto& q : pts) {
            const double d = std::abs(q - c.center) - c.radius;
            acc += d * d;
        }
        return acc;
    };
    double tau0 = tau_edges;
    {
        // Coarse scan over +-2 pi of accumulated phase across the span, then
        // golden-section refinement around the best grid point.
        const double reach = 1.0 / span;
        constexpr int grid = 80;
        double best = roundness(tau0);
        double best_tau = tau0;
        for (int k = -grid; k <= grid; ++k) {
            const double t = tau_edges + reach * k / grid;
            const double v = roundness(t);
            if (v < best) {
                best = v;
                best_tau = t;
            }
        }
        double a = best_tau - reach / grid;
        double b = best_tau + reach / grid;
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double c1 = b - g * (b - a), c2 = a + g * (b - a);
        double v1 = roundness(c1), v2 = roundness(c2);
        for (int it = 0; it < 40; ++it) {
            if (v1 < v2) {
                b = c2;
                c2 = c1;
                v2 = v1;
                c1 = b - g * (b - a);
                v1 = roundness(c1);
            } else {
                a = c1;
                c1 = c2;
                v1 = v2;
                c2 = a + g * (b - a);
                v2 = roundness(c2);
            }
        }
        tau0 = 0.5 * (a + b);
    }
    const std::vector<complex> z = derotate(tau0);

    // Noise from point-to-point differences: for complex Gaussian noise with
    // per-quadrature sigma, |dz|^2 is exponential with median 4 ln2 sigma^2.
    std::vector<double> diffs(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        diffs[i] = std::norm(z[i + 1] - z[i]);
    }
    const double sigma = std::sqrt(detail::median(diffs) / (4.0 * std::numbers::ln2));

    complex edge_mean{0.0, 0.0};
    for (std::size_t i = 0; i < edge; ++i) {
        edge_mean += z[i] + z[n - 1 - i];
    }
    edge_mean /= static_cast<double>(2 * edge);

    // Dip depth on a 5-point running mean so single noise spikes do not count.
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= 2 ? i - 2 : 0;
        const std::size_t hi = std::min(n - 1, i + 2);
        complex acc{0.0, 0.0};
        for (std::size_t k = lo; k <= hi; ++k) {
            acc += z[k];
        }
        dist[i] = std::abs(acc / static_cast<double>(hi - lo + 1) - edge_mean);
    }
    const auto peak_it = std::max_element(dist.begin(), dist.end());
    const double depth = *peak_it;
    if (depth < 3.0 * sigma || depth <= 1e-9 * std::abs(edge_mean)) {
        throw numerical_error("no resonance: dip depth " + std::to_string(depth) + " below 3x noise " +
                              std::to_string(sigma));
    }

    const Circle circle = fit_circle(z);
    const complex toward_edge = edge_mean - circle.center;
    const complex z_off = circle.center + circle.radius * toward_edge / std::abs(toward_edge);
    const double diameter = std::min(2.0 * circle.radius / std::abs(z_off), 0.99);
    const complex center_n = circle.center / z_off;

    // Linewidth from the half-power points of |s - 1|^2, a Lorentzian in f.
    std::vector<double> power(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= 2 ? i - 2 : 0;
        const std::size_t hi = std::min(n - 1, i + 2);
        double acc = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) {
            acc += std::norm(z[k] / z_off - 1.0);
        }
        power[i] = acc / static_cast<double>(hi - lo + 1);
    }
    const std::size_t peak = static_cast<std::size_t>(std::max_element(power.begin(), power.end()) - power.begin());
    const double half = 0.5 * power[peak];
    auto crossing = [&](int dir) -> double {
        std::ptrdiff_t i = static_cast<std::ptrdiff_t>(peak);
        while (i + dir >= 0 && i + dir < static_cast<std::ptrdiff_t>(n)) {
            const std::size_t a = static_cast<std::size_t>(i);
            const std::size_t b = static_cast<std::size_t>(i + dir);
            if (power[b] < half) {
                const double t = (power[a] - half) / (power[a] - power[b]);
                return std::abs(trace.freqs[a] + t * (trace.freqs[b] - trace.freqs[a]) - trace.freqs[peak]);
            }
            i += dir;
        }
        return -1.0;
    };
    double left = crossing(-1);
    double right = crossing(+1);
    if (left < 0.0 && right < 0.0) {
        throw numerical_error("no resonance: linewidth not resolved within the trace");
    }
    if (left < 0.0) {
        left = right;
    }
    if (right < 0.0) {
        right = left;
    }
    const double f0_init = trace.freqs[peak];
    const double q_t = f0_init / (left + right);

    HangerFit init;
    init.f0 = f0_init;
    init.q_e = q_t / diameter;
    init.q_i = 1.0 / (1.0 / q_t - 1.0 / init.q_e);
    init.phi_asym = std::arg(1.0 - center_n);
    init.amplitude = std::abs(z_off);
    init.delay = tau0;
    init.phase_offset = detail::wrap_angle(std::arg(z_off) - two_pi * fc * tau0);

    const detail::Scaling scaling{fc, f0_init / q_t};
    // Steps that broaden the resonance past the trace or push it far out of
    // the trace count as infinite cost, so LM cannot trade the dip for a
    // bare baseline.
    const double q_floor = 0.5 * f0_init / span;
    const double q_ceiling = 1e6 * f0_init / span;
    auto residual = [&](const Eigen::VectorXd& x) {
        const HangerFit p = detail::from_internal(x, scaling);
        Eigen::VectorXd r(static_cast<Eigen::Index>(2 * n));
        if (!(p.q_i > q_floor) || !(p.q_e > q_floor) || !(p.q_i < q_ceiling) || !(p.q_e < q_ceiling) ||
            !(p.amplitude > 0.0) ||
            std::abs(p.f0 - fc) > span) {
            r.setConstant(std::numeric_limits<double>::infinity());
            return r;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const complex d = s21_model(trace.freqs[i], p) - trace.s21[i];
            r(static_cast<Eigen::Index>(2 * i)) = d.real();
            r(static_cast<Eigen::Index>(2 * i + 1)) = d.imag();
        }
        return r;
    };
    lsq::Options opt;
    opt.x_tol = 1e-12;
    opt.max_iterations = 500;
    lsq::Result res;
    try {
        res = lsq::levenberg_marquardt(residual, detail::to_internal(init, scaling), opt);
    } catch (const singular_jacobian_error& e) {
        throw numerical_error(std::string("S21 fit: ") + e.what());
    }
    if (!res.converged()) {
        throw numerical_error("S21 fit did not converge; last rms residual " + std::to_string(res.rms()));
    }

    HangerFitResult out;
    out.initial = init;
    out.fit = detail::from_internal(res.x, scaling);
    out.fit.phase_offset = detail::wrap_angle(out.fit.phase_offset);
    out.fit.phi_asym = detail::wrap_angle(out.fit.phi_asym);
    out.residual_rms = res.rms();
    out.noise_sigma = sigma;
    out.iterations = res.iterations;

    // Propagate covariance through the internal-to-physical map.
    const Eigen::MatrixXd cov = lsq::covariance(res);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(7, 7);
    t(0, 0) = scaling.width;
    t(1, 1) = out.fit.q_i;
    t(2, 2) = out.fit.q_e;
    t(3, 3) = 1.0;
    t(4, 4) = 1.0;
    t(5, 5) = 1.0;
    t(5, 6) = -scaling.f_center / scaling.width;
    t(6, 6) = 1.0 / (two_pi * scaling.width);
    const Eigen::MatrixXd phys = t * cov * t.transpose();
    out.error.f0 = std::sqrt(phys(0, 0));
    out.error.q_i = std::sqrt(phys(1, 1));
    out.error.q_e = std::sqrt(phys(2, 2));
    out.error.phi_asym = std::sqrt(phys(3, 3));
    out.error.amplitude = std::sqrt(phys(4, 4));
    out.error.phase_offset = std::sqrt(phys(5, 5));
    out.error.delay = std::sqrt(phys(6, 6));
    return out;
}

// Steady-state on-resonance occupation of a hanger-coupled resonator,
//   n = 2 Q_t^2 P / (Q_e hbar w0^2),  P = device-plane power.
inline double photons_from_power(double power_dbm, double attenuation_db, const HangerFit& fit) {
    const double p_dev = dbm_to_watt(power_dbm - attenuation_db);
    const double omega0 = two_pi * fit.f0;
    const double qt = fit.q_total();
    return 2.0 * qt * qt * p_dev / (fit.q_e * constants.hbar * omega0 * omega0);
}

// Warm cables attenuate this much more than the same cables cold.
inline constexpr double default_cable_correction_db = 0.85;

inline double apply_attenuation_correction(double room_temp_db,
                                           double correction_db = default_cable_correction_db) {
    return room_temp_db - correction_db;
}

inline double remove_attenuation_correction(double cold_db,
                                            double correction_db = default_cable_correction_db) {
    return cold_db + correction_db;
}

struct KerrPoint {
    double n_photons = 0.0;
    double f0 = 0.0; // Hz
};

struct KerrFit {
    double f_intercept = 0.0;        // Hz, extrapolated to n -> 0
    double f_intercept_error = 0.0;  // Hz
    double k_self = 0.0;             // kHz per photon, f = f_intercept - k_self n
    double k_self_error = 0.0;       // kHz per photon
    double n_min = 0.0;              // fit window in photon number
    double n_max = 0.0;
    std::size_t first = 0;           // fit window in point indices, inclusive
    std::size_t last = 0;
};

inline constexpr std::size_t default_steps_before = 1;
inline constexpr std::size_t default_steps_after = 10;

// Index of the point whose photon number is closest to one (in log).
inline std::size_t single_photon_index(const std::vector<KerrPoint>& points) {
    if (points.empty()) {
        throw input_error("no Kerr points");
    }
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].n_photons > 0.0)) {
            continue;
        }
        const double d = std::abs(std::log(points[i].n_photons));
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

// Straight-line fit over points [anchor - before, anchor + after].
inline KerrFit fit_kerr(const std::vector<KerrPoint>& points, std::size_t anchor,
                        std::size_t before = default_steps_before, std::size_t after = default_steps_after) {
    if (anchor >= points.size()) {
        throw input_error("Kerr anchor index outside the point list");
    }
    KerrFit out;
    out.first = anchor >= before ? anchor - before : 0;
    out.last = std::min(points.size() - 1, anchor + after);
    const std::size_t m = out.last - out.first + 1;
    if (m < 3) {
        throw input_error("insufficient points: Kerr fit window holds " + std::to_string(m) + " < 3");
    }
    double mean_n = 0.0, mean_f = 0.0;
    out.n_min = std::numeric_limits<double>::infinity();
    out.n_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = out.first; i <= out.last; ++i) {
        mean_n += points[i].n_photons;
        mean_f += points[i].f0;
        out.n_min = std::min(out.n_min, points[i].n_photons);
        out.n_max = std::max(out.n_max, points[i].n_photons);
    }
    mean_n /= static_cast<double>(m);
    mean_f /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = out.first; i <= out.last; ++i) {
        const double dx = points[i].n_photons - mean_n;
        sxx += dx * dx;
        sxy += dx * (points[i].f0 - mean_f);
    }
    if (!(sxx > 0.0)) {
        throw input_error("insufficient points: photon numbers in the Kerr window are all equal");
    }
    const double slope = sxy / sxx; // Hz per photon
    const double intercept = mean_f - slope * mean_n;
    double rss = 0.0;
    for (std::size_t i = out.first; i <= out.last; ++i) {
        const double r = points[i].f0 - (intercept + slope * points[i].n_photons);
        rss += r * r;
    }
    const double s2 = rss / static_cast<double>(m - 2);
    out.f_intercept = intercept;
    out.f_intercept_error = std::sqrt(s2 * (1.0 / static_cast<double>(m) + mean_n * mean_n / sxx));
    out.k_self = -slope / units::kHz;
    out.k_self_error = std::sqrt(s2 / sxx) / units::kHz;
    return out;
}

struct SweepRow {
    double power_dbm = 0.0;
    double attenuation_db = 0.0;
    double n_photons = 0.0;
    HangerFitResult s21;
};

struct PowerSweepResult {
    std::vector<SweepRow> rows; // ascending power
    std::size_t anchor = 0;
    KerrFit kerr;
};

// Fits every trace, converts its drive power to photon number with that
// trace's own fit and attenuation, and runs the window Kerr fit around the
// single-photon point.
inline PowerSweepResult analyze_power_sweep(std::vector<S21Trace> traces,
                                            std::size_t before = default_steps_before,
                                            std::size_t after = default_steps_after) {
    if (traces.empty()) {
        throw input_error("power sweep holds no traces");
    }
    std::sort(traces.begin(), traces.end(),
              [](const S21Trace& a, const S21Trace& b) { return a.power_dbm < b.power_dbm; });
    PowerSweepResult out;
    std::vector<KerrPoint> points;
    for (const auto& t : traces) {
        SweepRow row;
        row.power_dbm = t.power_dbm;
        row.attenuation_db = t.attenuation_db;
        row.s21 = fit_s21(t);
        row.n_photons = photons_from_power(t.power_dbm, t.attenuation_db, row.s21.fit);
        points.push_back({row.n_photons, row.s21.fit.f0});
        out.rows.push_back(std::move(row));
    }
    out.anchor = single_photon_index(points);
    out.kerr = fit_kerr(points, out.anchor, before, after);
    return out;
}

} // namespace jjcircuit::resonator
