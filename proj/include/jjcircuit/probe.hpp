#pragma once

// Room-temperature probing: junction resistance to critical current and
// inductance, and the parallel junction/substrate resistance model.

#include "jjcircuit/constants.hpp"
#include "jjcircuit/error.hpp"
#include "jjcircuit/least_squares.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace jjcircuit::probe {

inline constexpr double default_gap_ev = 180e-6; // thin-film Al

// Ambegaokar-Baratoff at zero temperature: I_c R_n = pi Delta / 2e.
// gap_ev is Delta in electron-volts, so Delta / e in volts is numerically gap_ev.
inline double ab_critical_current(double r_n, double gap_ev = default_gap_ev) {
    if (!(r_n > 0.0) || !(gap_ev > 0.0)) {
        throw input_error("Ambegaokar-Baratoff needs r_n > 0 and gap > 0");
    }
    const double gap_j = gap_ev * constants.electron_charge;
    return std::numbers::pi * gap_j / (2.0 * constants.electron_charge * r_n);
}

// Inverse of ab_critical_current.
inline double ab_normal_resistance(double i_c, double gap_ev = default_gap_ev) {
    if (!(i_c > 0.0) || !(gap_ev > 0.0)) {
        throw input_error("Ambegaokar-Baratoff needs i_c > 0 and gap > 0");
    }
    return std::numbers::pi * gap_ev / (2.0 * i_c);
}

// L_J = Phi_0 / (2 pi I_c)
inline double junction_inductance(double i_c) {
    if (!(i_c > 0.0)) {
        throw input_error("junction inductance needs i_c > 0");
    }
    return constants.flux_quantum / (two_pi * i_c);
}

inline double critical_current_for_inductance(double l_j) {
    if (!(l_j > 0.0)) {
        throw input_error("critical current needs l_j > 0");
    }
    return constants.flux_quantum / (two_pi * l_j);
}

// n junctions in series, shunted by the substrate path.
inline double parallel_model(double n, double r_j, double r_sub) {
    if (!(n > 0.0) || !(r_j > 0.0) || !(r_sub > 0.0)) {
        throw input_error("parallel model needs positive n, r_j, r_sub");
    }
    const double series = n * r_j;
    return series * r_sub / (series + r_sub);
}

struct ProbeRecord {
    int n_junctions = 0;
    std::vector<double> resistances; // ohm
};

struct ProbeDataset {
    std::vector<ProbeRecord> records;
};

// Merges rows that share a junction count.
inline ProbeDataset group_by_count(const std::vector<std::pair<int, double>>& rows) {
    std::map<int, std::vector<double>> grouped;
    for (const auto& [n, r] : rows) {
        grouped[n].push_back(r);
    }
    ProbeDataset ds;
    for (auto& [n, rs] : grouped) {
        ds.records.push_back({n, std::move(rs)});
    }
    return ds;
}

struct ProbeFit {
    double r_junction = 0.0;   // ohm per junction
    double r_substrate = 0.0;  // ohm
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero(); // (r_junction, r_substrate), ohm^2
    double reduced_chi2 = 0.0;
    int iterations = 0;
};

struct ProbeStats {
    double mean = 0.0;
    double std_dev = 0.0; // sample, n - 1
    double cv = 0.0;      // std_dev / mean
};

inline ProbeStats probe_stats(const std::vector<double>& r) {
    if (r.empty()) {
        throw input_error("probe statistics need at least one value");
    }
    ProbeStats s;
    s.mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    if (r.size() > 1) {
        double ss = 0.0;
        for (double v : r) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.std_dev = std::sqrt(ss / static_cast<double>(r.size() - 1));
    }
    s.cv = s.std_dev / s.mean;
    return s;
}

// Weighted least squares of parallel_model over every measured device. Each
// device is weighted by 1/sigma^2 of its junction-count group; if any group
// has no spread to estimate sigma from, all weights are one. The fit runs in
// log(r_j), log(r_sub) so both stay positive, starting from the exact
// solution of the linearized model 1/R = (1/r_j)(1/n) + 1/r_sub.
inline ProbeFit fit_probe(const ProbeDataset& ds) {
    std::set<int> counts;
    std::size_t total = 0;
    for (const auto& rec : ds.records) {
        if (rec.n_junctions <= 0) {
            throw input_error("probe record with non-positive junction count");
        }
        for (double r : rec.resistances) {
            if (!(r > 0.0)) {
                throw input_error("probe resistances must be positive");
            }
        }
        if (!rec.resistances.empty()) {
            counts.insert(rec.n_junctions);
            total += rec.resistances.size();
        }
    }
    if (counts.size() < 2) {
        throw numerical_error("singular fit: probe data need at least two distinct junction counts");
    }

    std::vector<double> ns, rs, weights;
    bool unit_weights = false;
    std::vector<double> group_sigma;
    for (const auto& rec : ds.records) {
        const double sd = rec.resistances.size() > 1 ? probe_stats(rec.resistances).std_dev : 0.0;
        if (!(sd > 0.0)) {
            unit_weights = true;
        }
        group_sigma.push_back(sd);
    }
    for (std::size_t g = 0; g < ds.records.size(); ++g) {
        for (double r : ds.records[g].resistances) {
            ns.push_back(ds.records[g].n_junctions);
            rs.push_back(r);
            weights.push_back(unit_weights ? 1.0 : 1.0 / group_sigma[g]);
        }
    }

    // Linearized start: weighted LS on y = 1/R against (1/n, 1). The weight
    // of y follows from sigma_y = sigma_R / R^2.
    Eigen::MatrixXd a(static_cast<Eigen::Index>(total), 2);
    Eigen::VectorXd y(static_cast<Eigen::Index>(total));
    for (std::size_t k = 0; k < total; ++k) {
        const double w = weights[k] * rs[k] * rs[k];
        a(static_cast<Eigen::Index>(k), 0) = w / ns[k];
        a(static_cast<Eigen::Index>(k), 1) = w;
        y(static_cast<Eigen::Index>(k)) = w / rs[k];
    }
    const Eigen::Vector2d lin = a.colPivHouseholderQr().solve(y);
    double r_j0 = lin(0) > 0.0 ? 1.0 / lin(0) : 0.0;
    double r_sub0 = lin(1) > 0.0 ? 1.0 / lin(1) : 0.0;
    if (!(r_j0 > 0.0) || !(r_sub0 > 0.0)) {
        // Curvature too weak (or wrong sign) to place the substrate path.
        double max_r = 0.0;
        double min_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < total; ++k) {
            max_r = std::max(max_r, rs[k]);
            min_ratio = std::min(min_ratio, rs[k] / ns[k]);
        }
        r_j0 = r_j0 > 0.0 ? r_j0 : min_ratio;
        r_sub0 = r_sub0 > 0.0 ? r_sub0 : 100.0 * max_r;
    }

    auto residual = [&](const Eigen::VectorXd& x) {
        const double r_j = std::exp(x(0));
        const double r_sub = std::exp(x(1));
        Eigen::VectorXd r(static_cast<Eigen::Index>(total));
        for (std::size_t k = 0; k < total; ++k) {
            r(static_cast<Eigen::Index>(k)) = weights[k] * (parallel_model(ns[k], r_j, r_sub) - rs[k]);
        }
        return r;
    };
    lsq::Options opt;
    opt.x_tol = 1e-12;
    opt.max_iterations = 200;
    lsq::Result res;
    try {
        res = lsq::levenberg_marquardt(residual, Eigen::Vector2d{std::log(r_j0), std::log(r_sub0)}, opt);
    } catch (const singular_jacobian_error& e) {
        throw numerical_error(std::string("singular fit: ") + e.what());
    }
    if (!res.converged()) {
        throw numerical_error("probe fit did not converge");
    }
    ProbeFit fit;
    fit.r_junction = std::exp(res.x(0));
    fit.r_substrate = std::exp(res.x(1));
    const Eigen::Matrix2d d = Eigen::Vector2d{fit.r_junction, fit.r_substrate}.asDiagonal();
    fit.covariance = d * lsq::covariance(res) * d;
    const double dof = static_cast<double>(std::max<std::size_t>(total - 2, 1));
    fit.reduced_chi2 = 2.0 * res.cost / dof;
    fit.iterations = res.iterations;
    return fit;
}

} // namespace jjcircuit::probe
