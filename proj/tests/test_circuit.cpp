#include "jjcircuit/circuit.hpp"
#include "jjcircuit/presets.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace jjcircuit;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Charging energy 1/2 v^T C v written element by element.
double electrostatic_energy(const ArrayCircuitSpec& s, const Eigen::VectorXd& v) {
    const int n = s.n_junctions;
    double e = 0.0;
    for (int k = 0; k < n; ++k) {
        e += 0.5 * s.c_j * (v(k) - v(k + 1)) * (v(k) - v(k + 1));
    }
    for (int k = 1; k < n; ++k) {
        e += 0.5 * s.c_0 * v(k) * v(k);
    }
    e += 0.5 * (s.c_g_left + s.c_c_left) * v(0) * v(0);
    e += 0.5 * (s.c_g_right + s.c_c_right) * v(n) * v(n);
    e += 0.5 * s.c_s * (v(0) - v(n)) * (v(0) - v(n));
    return e;
}

// Second differences of a quadratic form are exact: H_ab = E(a+b) - E(a) - E(b) + E(0).
Eigen::MatrixXd hessian(const ArrayCircuitSpec& s) {
    const int m = s.n_junctions + 1;
    Eigen::MatrixXd h(m, m);
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
            Eigen::VectorXd ea = Eigen::VectorXd::Zero(m), eb = Eigen::VectorXd::Zero(m);
            ea(a) = 1.0;
            eb(b) = 1.0;
            h(a, b) = electrostatic_energy(s, ea + eb) - electrostatic_energy(s, ea) - electrostatic_energy(s, eb);
        }
    }
    return h;
}

} // namespace

TEST_CASE("capacitance matrix of a single junction", "[circuit]") {
    ArrayCircuitSpec s;
    s.n_junctions = 1;
    s.l_j = 1.0 * units::nH;
    s.c_j = 20.0 * units::fF;
    s.c_g_left = s.c_g_right = 1.0 * units::fF;
    const Eigen::MatrixXd c = build_capacitance_matrix(s) / units::fF;
    REQUIRE(c.rows() == 2);
    CHECK_THAT(c(0, 0), WithinRel(21.0, 1e-14));
    CHECK_THAT(c(1, 1), WithinRel(21.0, 1e-14));
    CHECK_THAT(c(0, 1), WithinRel(-20.0, 1e-14));
    CHECK_THAT(c(1, 0), WithinRel(-20.0, 1e-14));
}

TEST_CASE("capacitance matrix without a path to ground is rejected", "[circuit]") {
    ArrayCircuitSpec s;
    s.n_junctions = 2;
    s.l_j = 1.0 * units::nH;
    s.c_j = 20.0 * units::fF;
    CHECK_THROWS_AS(build_capacitance_matrix(s), numerical_error);
}

TEST_CASE("capacitance matrix matches the Hessian of the charging energy", "[circuit]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    ArrayCircuitSpec s;
    s.n_junctions = 6;
    s.l_j = 1.0 * units::nH;
    s.c_j = u(rng) * units::fF;
    s.c_0 = u(rng) * units::aF;
    s.c_s = u(rng) * units::fF;
    s.c_g_left = u(rng) * units::fF;
    s.c_g_right = u(rng) * units::fF;
    s.c_c_left = u(rng) * units::fF;
    s.c_c_right = u(rng) * units::fF;
    const Eigen::MatrixXd c = build_capacitance_matrix(s);
    const Eigen::MatrixXd h = hessian(s);
    CHECK((c - h).cwiseAbs().maxCoeff() < 1e-12 * c.cwiseAbs().maxCoeff());
}

TEST_CASE("etched 300-junction paddle circuit is positive definite", "[circuit]") {
    const auto s = presets::paddle_array(presets::Process::etched, 300, 14.0 * units::aF);
    CHECK_THAT(s.c_s / units::fF, WithinRel(0.50, 1e-12));
    CHECK_THAT(s.c_g_left / units::fF, WithinRel(6.26, 1e-12));
    CHECK_THAT(s.c_c_left / units::fF, WithinRel(0.94, 1e-12));
    CHECK_THAT(s.c_g_right / units::fF, WithinRel(6.43, 1e-12));
    CHECK_THAT(s.c_c_right / units::fF, WithinRel(0.30, 1e-12));
    const Eigen::MatrixXd c = build_capacitance_matrix(s);
    REQUIRE(c.rows() == 301);
    CHECK((c - c.transpose()).norm() == 0.0);
    CHECK(Eigen::LLT<Eigen::MatrixXd>(c).info() == Eigen::Success);
}

TEST_CASE("inverse inductance matrix is the scaled chain Laplacian", "[circuit]") {
    ArrayCircuitSpec s;
    s.n_junctions = 1;
    s.l_j = 1.0 * units::nH;
    s.c_j = 20.0 * units::fF;
    const Eigen::MatrixXd k1 = build_inverse_inductance_matrix(s);
    CHECK_THAT(k1(0, 0), WithinRel(1e9, 1e-14));
    CHECK_THAT(k1(0, 1), WithinRel(-1e9, 1e-14));

    s.n_junctions = 3;
    s.l_j = 0.91 * units::nH;
    const Eigen::MatrixXd k3 = build_inverse_inductance_matrix(s);
    CHECK_THAT(k3(1, 1), WithinRel(2.198e9, 1e-3));
    CHECK_THAT(k3(2, 2), WithinRel(2.0 / 0.91e-9, 1e-14));
    CHECK_THAT(k3(0, 0), WithinRel(1.0 / 0.91e-9, 1e-14));

    for (int n : {1, 2, 7, 100}) {
        s.n_junctions = n;
        const Eigen::MatrixXd k = build_inverse_inductance_matrix(s);
        CHECK(k.rowwise().sum().cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("circuit validation names the offending field", "[circuit]") {
    ArrayCircuitSpec s;
    s.n_junctions = 5;
    s.l_j = 1.0 * units::nH;
    s.c_j = 20.0 * units::fF;
    s.c_g_left = 1.0 * units::fF;
    s.c_0 = -1.0;
    CHECK_THROWS_WITH(validate(s), ContainsSubstring("c_0"));
    s.c_0 = 0.0;
    s.l_j = 0.0;
    CHECK_THROWS_WITH(validate(s), ContainsSubstring("l_j"));
    s.l_j = 1.0 * units::nH;
    s.n_junctions = 0;
    CHECK_THROWS_AS(validate(s), input_error);
}

TEST_CASE("fluxonium validation allows the harmonic limit only", "[circuit]") {
    CHECK_NOTHROW(validate(FluxoniumParams{0.0, 1.0, 0.5, 0.0}));
    CHECK_THROWS_WITH(validate(FluxoniumParams{-1.0, 1.0, 0.5, 0.0}), ContainsSubstring("e_j"));
    CHECK_THROWS_WITH(validate(FluxoniumParams{1.0, 0.0, 0.5, 0.0}), ContainsSubstring("e_c"));
    CHECK_THROWS_WITH(validate(FluxoniumParams{1.0, 1.0, 0.0, 0.0}), ContainsSubstring("e_l"));
}

TEST_CASE("grounded chain keeps only the interior islands", "[circuit]") {
    ArrayCircuitSpec s;
    s.n_junctions = 4;
    s.l_j = 1.0 * units::nH;
    s.c_j = 20.0 * units::fF;
    s.c_0 = 80.0 * units::aF;
    s.c_g_left = 99.0 * units::fF;
    const auto g = grounded_chain_matrices(s);
    REQUIRE(g.capacitance.rows() == 3);
    CHECK_THAT(g.capacitance(0, 0), WithinRel(40.08 * units::fF, 1e-12));
    CHECK_THAT(g.capacitance(0, 1), WithinRel(-20.0 * units::fF, 1e-12));
    CHECK_THAT(g.capacitance(0, 2), WithinAbs(0.0, 0.0));
    s.n_junctions = 1;
    CHECK_THROWS_AS(grounded_chain_matrices(s), input_error);
}
