#include "jjcircuit/least_squares.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace jjcircuit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Rosenbrock valley as a least-squares problem", "[lsq]") {
    auto r = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd v(2);
        v << 10.0 * (x(1) - x(0) * x(0)), 1.0 - x(0);
        return v;
    };
    const auto res = lsq::levenberg_marquardt(r, Eigen::Vector2d{-1.2, 1.0});
    REQUIRE(res.converged());
    CHECK_THAT(res.x(0), WithinAbs(1.0, 1e-8));
    CHECK_THAT(res.x(1), WithinAbs(1.0, 1e-8));
}

TEST_CASE("exponential decay fit with analytic and numeric Jacobians", "[lsq]") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<double> t, y;
    for (int i = 0; i < 50; ++i) {
        t.push_back(0.1 * i);
        y.push_back(2.5 * std::exp(-1.3 * t.back()) + 0.2 + noise(rng));
    }
    auto r = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd v(50);
        for (int i = 0; i < 50; ++i) {
            v(i) = x(0) * std::exp(-x(1) * t[i]) + x(2) - y[i];
        }
        return v;
    };
    auto j = [&](const Eigen::VectorXd& x) {
        Eigen::MatrixXd m(50, 3);
        for (int i = 0; i < 50; ++i) {
            const double e = std::exp(-x(1) * t[i]);
            m(i, 0) = e;
            m(i, 1) = -x(0) * t[i] * e;
            m(i, 2) = 1.0;
        }
        return m;
    };
    const Eigen::Vector3d x0{1.0, 0.5, 0.0};
    const auto numeric = lsq::levenberg_marquardt(r, x0);
    const auto analytic = lsq::levenberg_marquardt(r, x0, {}, j);
    REQUIRE(numeric.converged());
    REQUIRE(analytic.converged());
    CHECK((numeric.x - analytic.x).norm() < 1e-6);
    CHECK_THAT(numeric.x(0), WithinAbs(2.5, 0.05));
    CHECK_THAT(numeric.x(1), WithinAbs(1.3, 0.05));
    CHECK_THAT(numeric.x(2), WithinAbs(0.2, 0.02));
    CHECK((lsq::numeric_jacobian(r, numeric.x, r(numeric.x), 1e-6) - j(numeric.x)).cwiseAbs().maxCoeff() <
          1e-6);
}

TEST_CASE("linear model covariance equals s^2 (X^T X)^-1", "[lsq]") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.3);
    const int m = 40;
    Eigen::MatrixXd x(m, 2);
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = i * 0.25;
        y(i) = 1.5 - 0.7 * x(i, 1) + noise(rng);
    }
    auto r = [&](const Eigen::VectorXd& p) { return Eigen::VectorXd(x * p - y); };
    const auto res = lsq::levenberg_marquardt(r, Eigen::Vector2d::Zero());
    const Eigen::Vector2d beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    CHECK((res.x - beta).norm() < 1e-8);
    const double s2 = (x * beta - y).squaredNorm() / (m - 2);
    const Eigen::Matrix2d expected = s2 * (x.transpose() * x).inverse();
    CHECK((lsq::covariance(res) - expected).cwiseAbs().maxCoeff() < 1e-8 * expected.cwiseAbs().maxCoeff());
}

TEST_CASE("rank-deficient Jacobian is reported", "[lsq]") {
    auto r = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd v(3);
        v << x(0) + x(1) - 1.0, 2.0 * (x(0) + x(1)) - 2.0, x(0) + x(1);
        return v;
    };
    CHECK_THROWS_AS(lsq::levenberg_marquardt(r, Eigen::Vector2d{0.3, 0.1}), singular_jacobian_error);
}

TEST_CASE("exact start point takes no step", "[lsq]") {
    auto r = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd v(3);
        v << x(0) - 1.0, x(1) - 2.0, x(0) * x(1) - 2.0;
        return v;
    };
    const auto res = lsq::levenberg_marquardt(r, Eigen::Vector2d{1.0, 2.0});
    CHECK(res.status == lsq::Status::zero_residual);
    CHECK(res.accepted_steps == 0);
    CHECK(res.cost == 0.0);
}

TEST_CASE("infinite residuals act as walls", "[lsq]") {
    // Minimum of (x - 2)^2 sits outside the allowed region x < 1.
    auto r = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd v(1);
        v(0) = x(0) < 1.0 ? x(0) - 2.0 : std::numeric_limits<double>::infinity();
        return v;
    };
    lsq::Options opt;
    opt.max_iterations = 200;
    const auto res = lsq::levenberg_marquardt(r, Eigen::VectorXd::Constant(1, 0.0), opt);
    CHECK(res.x(0) < 1.0);
    CHECK(res.x(0) > 0.9);
    CHECK(std::isfinite(res.cost));
}
