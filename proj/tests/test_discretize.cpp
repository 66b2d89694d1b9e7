#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ctid/discretize.hpp"

using namespace ctid;

TEST_CASE("first-order ZOH equivalent matches the scalar closed form") {
    const double h = 0.1;
    const DiscreteStateSpace d = zoh_discretize(TransferFunction({1.0}, {1.0, 1.0}), h);
    REQUIRE(d.order() == 1);
    CHECK(d.A_d(0, 0) == Catch::Approx(std::exp(-0.1)).margin(1e-14));
    CHECK(d.C_d(0) * d.B_d(0) == Catch::Approx(1.0 - std::exp(-0.1)).margin(1e-14));
    CHECK(d.D_d == 0.0);
}

TEST_CASE("DC gain of the discrete equivalent equals the continuous gain") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> coeff(0.05, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        TransferFunction tf({coeff(gen), coeff(gen)}, {1.0, coeff(gen), coeff(gen), coeff(gen)});
        const DiscreteStateSpace d = zoh_discretize(tf, 0.01 + 0.2 * trial / 20.0);
        const int n = d.order();
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        const double dc = d.C_d.dot((I - d.A_d).lu().solve(d.B_d)) + d.D_d;
        CHECK(dc == Catch::Approx(tf.eval(std::complex<double>(0.0, 0.0)).real()).epsilon(1e-10));
    }
}

TEST_CASE("feedthrough is b_n/a_n for biproper systems and zero otherwise") {
    TransferFunction strictly({1.0, 2.0}, {1.0, 1.0, 0.5});
    CHECK(zoh_discretize(strictly, 0.05).D_d == 0.0);
    TransferFunction biproper({1.0, 2.0, 0.25}, {1.0, 1.0, 0.5});
    CHECK(zoh_discretize(biproper, 0.05).D_d == Catch::Approx(0.25 / 0.5));
}

TEST_CASE("discrete frequency-response magnitude tracks the continuous one at low frequency") {
    // The ZOH equivalent carries the inherent half-sample delay, so the
    // comparison is on magnitudes, where the deviation is O((wh)^2).
    TransferFunction tf({2.0, 0.3}, {1.0, 0.8, 0.2});
    const double h = 1e-3;
    const DiscreteStateSpace d = zoh_discretize(tf, h);
    const int n = d.order();
    for (double w : {0.5, 2.0, 10.0}) {  // wh <= 0.01
        const std::complex<double> z = std::exp(std::complex<double>(0.0, w * h));
        Eigen::MatrixXcd zIA = z * Eigen::MatrixXcd::Identity(n, n) - d.A_d.cast<std::complex<double>>();
        const std::complex<double> resp =
            d.C_d.cast<std::complex<double>>().dot(zIA.lu().solve(d.B_d.cast<std::complex<double>>())) +
            d.D_d;
        const std::complex<double> cont = tf.eval(std::complex<double>(0.0, w));
        CHECK(std::abs(std::abs(resp) - std::abs(cont)) / std::abs(cont) < 1e-3);
    }
}

TEST_CASE("step response of a first-order lag matches the closed form") {
    const double h = 0.05, tau = 0.5;
    const int N = 500;
    const Eigen::VectorXd u = Eigen::VectorXd::Ones(N);
    const Eigen::VectorXd y = simulate_zoh(TransferFunction({1.0}, {1.0, tau}), u, h);
    for (int k = 0; k < N; ++k)
        REQUIRE(std::abs(y(k) - (1.0 - std::exp(-k * h / tau))) < 1e-10);
}

TEST_CASE("zero input gives zero output") {
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(64);
    const Eigen::VectorXd y = simulate_zoh(TransferFunction({1.0, 0.5}, {1.0, 0.3, 0.2}), u, 0.01);
    CHECK(y.isZero(0.0));
}

TEST_CASE("simulation is linear and time-invariant") {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> noise(0.0, 1.0);
    const int N = 300;
    const double h = 0.02;
    TransferFunction tf({1.0, 0.4}, {1.0, 0.6, 0.3});
    Eigen::VectorXd u1(N), u2(N);
    for (int k = 0; k < N; ++k) {
        u1(k) = noise(gen);
        u2(k) = noise(gen);
    }
    SECTION("superposition") {
        const double a = 1.7, b = -0.4;
        const Eigen::VectorXd mixed = simulate_zoh(tf, a * u1 + b * u2, h);
        const Eigen::VectorXd split = a * simulate_zoh(tf, u1, h) + b * simulate_zoh(tf, u2, h);
        CHECK((mixed - split).lpNorm<Eigen::Infinity>() < 1e-9);
    }
    SECTION("a delayed input gives a delayed output") {
        const int j = 17;
        Eigen::VectorXd shifted = Eigen::VectorXd::Zero(N);
        shifted.tail(N - j) = u1.head(N - j);
        const Eigen::VectorXd y = simulate_zoh(tf, u1, h);
        const Eigen::VectorXd ys = simulate_zoh(tf, shifted, h);
        for (int k = j; k < N; ++k) REQUIRE(std::abs(ys(k) - y(k - j)) < 1e-10);
    }
}

TEST_CASE("overflow reports the first bad index") {
    // unstable pole at +10 with exponentially growing input
    TransferFunction tf({1.0}, {1.0, -0.1});
    Eigen::VectorXd u(5000);
    for (int k = 0; k < u.size(); ++k) u(k) = std::exp(0.2 * k);
    try {
        simulate_zoh(tf, u, 0.5);
        FAIL("expected overflow");
    } catch (const SimulationOverflow& e) {
        CHECK(e.index() > 0);
    }
}

TEST_CASE("operator filter p^k/A") {
    const double h = 0.05;
    const Polynomial A{1.0, 0.5};
    const int N = 200;
    const Eigen::VectorXd step = Eigen::VectorXd::Ones(N);

    SECTION("k = 0 matches the plain simulation") {
        const Eigen::VectorXd a = apply_operator_filter(0, A, step, h);
        const Eigen::VectorXd b = simulate_zoh(TransferFunction({1.0}, A), step, h);
        CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
    }
    SECTION("p/(0.5p+1) on a step is the scaled decaying exponential") {
        const Eigen::VectorXd y = apply_operator_filter(1, A, step, h);
        for (int k = 0; k < N; ++k)
            REQUIRE(std::abs(y(k) - 2.0 * std::exp(-k * h / 0.5)) < 1e-9);
    }
    SECTION("derivative filters annihilate constants at DC") {
        const Eigen::VectorXd long_step = Eigen::VectorXd::Ones(500);
        const Eigen::VectorXd y = apply_operator_filter(1, Polynomial{1.0, 0.7, 0.2}, long_step, h);
        CHECK(std::abs(y(499)) < 1e-8);
    }
    SECTION("improper powers are rejected") {
        CHECK_THROWS_AS(apply_operator_filter(2, A, step, h), std::invalid_argument);
    }
}

TEST_CASE("shared-denominator filter bank agrees with one-at-a-time filtering") {
    std::mt19937_64 gen(23);
    std::normal_distribution<double> noise(0.0, 1.0);
    const int N = 400;
    const double h = 0.01;
    Eigen::VectorXd w(N);
    for (int k = 0; k < N; ++k) w(k) = noise(gen);

    const Polynomial A{1.0, 0.9, 0.4, 0.05};
    std::vector<Polynomial> nums;
    for (int k = 0; k <= 3; ++k) nums.push_back(Polynomial::monomial(k));
    nums.push_back(Polynomial{0.5, -0.2, 0.1});  // a non-monomial numerator

    const Eigen::MatrixXd bank = shared_den_filter(A, nums, w, h);
    REQUIRE(bank.cols() == 5);
    for (int k = 0; k <= 3; ++k) {
        const Eigen::VectorXd ref = apply_operator_filter(k, A, w, h);
        CHECK((bank.col(k) - ref).lpNorm<Eigen::Infinity>() < 1e-9);
    }
    const Eigen::VectorXd ref = simulate_zoh(TransferFunction(nums[4], A), w, h);
    CHECK((bank.col(4) - ref).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("static-gain systems simulate directly") {
    const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(10, 0.0, 9.0);
    const Eigen::VectorXd y = simulate_zoh(TransferFunction({2.5}, {1.0}), u, 0.1);
    CHECK((y - 2.5 * u).isZero(0.0));
}

TEST_CASE("sampling period must be positive") {
    CHECK_THROWS_AS(zoh_discretize(TransferFunction({1.0}, {1.0, 1.0}), 0.0),
                    std::invalid_argument);
}
