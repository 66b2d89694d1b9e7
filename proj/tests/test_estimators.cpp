#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ctid/estimators.hpp"

using namespace ctid;

namespace {

Eigen::VectorXd white_noise(int N, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist(0.0, sd);
    Eigen::VectorXd u(N);
    for (int k = 0; k < N; ++k) u(k) = dist(gen);
    return u;
}

Eigen::VectorXd random_signs(int N, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    Eigen::VectorXd u(N);
    for (int k = 0; k < N; ++k) u(k) = (gen() & 1u) ? 1.0 : -1.0;
    return u;
}

// first summand of the two-mode benchmark: 3 / (0.25 p^2 + 0.25 p + 1)
const TransferFunction kMode1({3.0}, {1.0, 0.25, 0.25});

}  // namespace

TEST_CASE("regressor columns match first-order closed forms") {
    const double h = 0.05, tau = 0.5;
    const int N = 200;
    const Eigen::VectorXd step = Eigen::VectorXd::Ones(N);
    const TransferFunction tf({1.0}, {1.0, tau});  // n = 1, m = 0

    const auto [phi, y_f] = build_regressor(tf, step, step, h);
    REQUIRE(phi.cols() == 2);
    for (int k = 0; k < N; ++k) {
        REQUIRE(std::abs(phi(k, 0) + 2.0 * std::exp(-k * h / tau)) < 1e-9);
        REQUIRE(std::abs(phi(k, 1) - (1.0 - std::exp(-k * h / tau))) < 1e-9);
        REQUIRE(std::abs(y_f(k) - (1.0 - std::exp(-k * h / tau))) < 1e-9);
    }
}

TEST_CASE("zero residual output zeroes the output columns") {
    const int N = 100;
    const Eigen::VectorXd u = white_noise(N, 1);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(N);
    const auto [phi, y_f] = build_regressor(kMode1, zero, u, 0.01);
    CHECK(phi.col(0).isZero(0.0));
    CHECK(phi.col(1).isZero(0.0));
    CHECK(y_f.isZero(0.0));
    CHECK_FALSE(phi.col(2).isZero(0.0));
}

TEST_CASE("pseudolinear identity: y_f - phi theta equals the simulation residual") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> coeff(0.1, 1.0);
    const int N = 500;
    const double h = 0.02;
    for (int trial = 0; trial < 10; ++trial) {
        const TransferFunction tf({coeff(gen), coeff(gen)}, {1.0, coeff(gen), coeff(gen)});
        const ThetaVector theta = pack_theta(tf);
        const Eigen::VectorXd u = white_noise(N, 100 + trial);
        const Eigen::VectorXd ytilde = white_noise(N, 200 + trial);
        const RegressionWorkspace ws = build_workspace(theta, 2, 1, ytilde, u, h);
        const Eigen::VectorXd direct = ytilde - simulate_zoh(tf, u, h);
        REQUIRE((ws.residual_e - direct).lpNorm<Eigen::Infinity>() < 1e-9);
    }
}

TEST_CASE("instrument equals the regressor gradient on noise-free data at the truth") {
    // The two column sets differ by the interpolation error of re-filtering
    // the sampled intermediate signal, which vanishes linearly in the sampling
    // period; the deviation halves when h halves and reaches 1e-7 once the
    // dynamics are heavily oversampled.
    const double tau = 0.5;
    const TransferFunction tf({2.0}, {1.0, tau});

    auto deviation = [&](double h, int N) {
        const Eigen::VectorXd u = random_signs(N, 3);
        const Eigen::VectorXd x = simulate_zoh(tf, u, h);
        const auto [phi, y_f] = build_regressor(tf, x, u, h);
        const Eigen::MatrixXd phi_hat = build_instrument(tf, u, h);
        REQUIRE(phi_hat.rows() == phi.rows());
        REQUIRE(phi_hat.cols() == phi.cols());
        return (phi - phi_hat).lpNorm<Eigen::Infinity>();
    };

    const double coarse = deviation(4e-4, 2500);
    const double fine = deviation(2e-4, 5000);
    CHECK(fine < 0.7 * coarse);
    CHECK(deviation(2e-6, 500000) < 1e-7);
}

TEST_CASE("input columns of regressor and instrument are identical") {
    const int N = 300;
    const double h = 0.01;
    const TransferFunction tf({1.0, 0.5}, {1.0, 0.4, 0.2});  // n = 2, m = 1
    const Eigen::VectorXd u = white_noise(N, 5);
    const Eigen::VectorXd ytilde = white_noise(N, 6);
    const auto [phi, y_f] = build_regressor(tf, ytilde, u, h);
    const Eigen::MatrixXd phi_hat = build_instrument(tf, u, h);
    CHECK(phi.col(2) == phi_hat.col(2));
    CHECK(phi.col(3) == phi_hat.col(3));
}

TEST_CASE("zero input makes the normal matrix singular") {
    const int N = 100;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(N);
    const Eigen::VectorXd y = white_noise(N, 7);
    CHECK_THROWS_AS(srivc_step(pack_theta(kMode1), 2, 0, y, zero, 0.01), SingularMatrixError);
}

TEST_CASE("the truth is a fixed point of the iteration on noise-free data") {
    const double h = 0.005;
    const int N = 4000;
    const Eigen::VectorXd u = white_noise(N, 21);
    const Eigen::VectorXd x = simulate_zoh(kMode1, u, h);
    const ThetaVector truth = pack_theta(kMode1);
    const ThetaVector next = srivc_step(truth, 2, 0, x, u, h);
    CHECK((next.values - truth.values).lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("a perturbed start contracts toward the truth on noise-free data") {
    const double h = 0.005;
    const int N = 4000;
    const Eigen::VectorXd u = white_noise(N, 22);
    const Eigen::VectorXd x = simulate_zoh(kMode1, u, h);
    const ThetaVector truth = pack_theta(kMode1);
    ThetaVector start = truth;
    start.values *= 1.10;
    const ThetaVector next = srivc_step(start, 2, 0, x, u, h);
    CHECK((next.values - truth.values).norm() < (start.values - truth.values).norm());
}

TEST_CASE("refinement converges to a first-order-optimal point") {
    const double h = 0.005;
    const int N = 4000;
    const Eigen::VectorXd u = white_noise(N, 23);
    const Eigen::VectorXd x = simulate_zoh(kMode1, u, h);
    ThetaVector init = pack_theta(kMode1);
    init.values(0) *= 1.1;
    init.values(1) *= 0.9;
    init.values(2) *= 1.1;

    const SrivcTrace trace = srivc_refine(init, 2, 0, x, u, h);
    REQUIRE(trace.status == SrivcStatus::Converged);
    CHECK(trace.optimality_norms.back() < 1e-6);
    const Eigen::VectorXd opt = first_order_optimality(trace.final_theta(), 2, 0, x, u, h);
    CHECK(opt.lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK(trace.thetas.size() == trace.costs.size());
    CHECK(trace.thetas.size() == trace.optimality_norms.size());
    CHECK(trace.thetas.size() == trace.conditions.size());
}

TEST_CASE("max_iters = 1 yields a single-entry trace") {
    const double h = 0.005;
    const int N = 1000;
    const Eigen::VectorXd u = white_noise(N, 31);
    const Eigen::VectorXd x = simulate_zoh(kMode1, u, h);
    ThetaVector init = pack_theta(kMode1);
    init.values *= 1.05;
    SrivcConfig cfg;
    cfg.max_iters = 1;
    const SrivcTrace trace = srivc_refine(init, 2, 0, x, u, h, cfg);
    CHECK(trace.iterations() == 1);
}

TEST_CASE("white-noise estimates stay within sampling scatter of the truth") {
    // one mode alone as the true system, 20 seeded noisy runs
    const double h = 0.005;
    const int N = 10000;
    const ThetaVector truth = pack_theta(kMode1);
    std::vector<Eigen::VectorXd> finals;
    for (int seed = 0; seed < 20; ++seed) {
        const Eigen::VectorXd u = white_noise(N, 1000 + seed);
        const Eigen::VectorXd v = white_noise(N, 5000 + seed);
        const Eigen::VectorXd y = simulate_zoh(kMode1, u, h) + v;
        ThetaVector init = truth;
        init.values *= 1.05;
        const SrivcTrace trace = srivc_refine(init, 2, 0, y, u, h);
        REQUIRE(trace.status == SrivcStatus::Converged);
        finals.push_back(trace.final_theta().values);
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(3), var = Eigen::VectorXd::Zero(3);
    for (const auto& f : finals) mean += f;
    mean /= 20.0;
    for (const auto& f : finals) var += (f - mean).cwiseAbs2();
    var /= 19.0;
    for (int j = 0; j < 3; ++j) {
        const double sd = std::sqrt(var(j));
        INFO("parameter " << j << ": mean " << mean(j) << " truth " << truth.values(j)
                          << " sd " << sd);
        int within = 0;
        for (const auto& f : finals)
            if (std::abs(f(j) - truth.values(j)) <= 3.0 * sd) ++within;
        CHECK(within >= 19);
    }
}

TEST_CASE("optimality vector is zero at the truth on noise-free data and finite elsewhere") {
    const double h = 0.005;
    const int N = 2000;
    const Eigen::VectorXd u = white_noise(N, 41);
    const Eigen::VectorXd x = simulate_zoh(kMode1, u, h);
    const Eigen::VectorXd at_truth = first_order_optimality(pack_theta(kMode1), 2, 0, x, u, h);
    CHECK(at_truth.lpNorm<Eigen::Infinity>() < 1e-9);

    ThetaVector off = pack_theta(kMode1);
    off.values *= 1.4;
    const Eigen::VectorXd away = first_order_optimality(off, 2, 0, x, u, h);
    CHECK(away.allFinite());
    CHECK(away.lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("state-variable-filter estimate is close on noise-free first-order data") {
    // The estimate carries a denominator bias proportional to lambda * h from
    // filtering sampled signals; keep the filter oversampled so it stays
    // inside the 5% band, and check that refining h shrinks it.
    const double tau = 0.5;
    const TransferFunction tf({2.0}, {1.0, tau});
    const ThetaVector truth = pack_theta(tf);

    auto rel_errors = [&](double h, int N) {
        std::mt19937_64 gen(51);
        Eigen::VectorXd u(N);
        double level = 1.0;
        const int chip = std::max(1, static_cast<int>(0.05 / h));
        for (int k = 0; k < N; ++k) {
            if (k % chip == 0) level = (gen() & 1u) ? 1.0 : -1.0;
            u(k) = level;
        }
        const Eigen::VectorXd y = simulate_zoh(tf, u, h);
        const ThetaVector est = lssvf_estimate(y, u, h, 1, 0, 10.0 / tau);
        Eigen::Vector2d err;
        for (int j = 0; j < 2; ++j)
            err(j) = std::abs(est.values(j) - truth.values(j)) / std::abs(truth.values(j));
        return err;
    };

    const Eigen::Vector2d err = rel_errors(0.002, 10000);
    CHECK(err(0) < 0.05);
    CHECK(err(1) < 0.05);
    const Eigen::Vector2d finer = rel_errors(0.001, 20000);
    CHECK(finer(0) < 0.6 * err(0));
}

TEST_CASE("state-variable filter on zero output returns near-zero gains") {
    const int N = 1000;
    const Eigen::VectorXd u = random_signs(N, 52);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(N);
    const ThetaVector est = lssvf_estimate(zero, u, 0.01, 1, 0, 20.0);
    CHECK(std::abs(est.values(1)) < 1e-10);
}

TEST_CASE("full-structure estimation is the refinement run on y itself") {
    const double h = 0.005;
    const int N = 2000;
    const Eigen::VectorXd u = white_noise(N, 61);
    const Eigen::VectorXd v = 0.3 * white_noise(N, 62);
    const Eigen::VectorXd y = simulate_zoh(kMode1, u, h) + v;
    ThetaVector init = pack_theta(kMode1);
    init.values *= 1.08;
    const SrivcTrace a = srivc_full(y, u, h, 2, 0, init);
    const SrivcTrace b = srivc_refine(init, 2, 0, y, u, h);
    REQUIRE(a.iterations() == b.iterations());
    for (int s = 0; s < a.iterations(); ++s) {
        CHECK(a.thetas[static_cast<std::size_t>(s)].values ==
              b.thetas[static_cast<std::size_t>(s)].values);
        CHECK(a.costs[static_cast<std::size_t>(s)] == b.costs[static_cast<std::size_t>(s)]);
    }
}

TEST_CASE("too little data is rejected") {
    const Eigen::VectorXd u = white_noise(3, 71);
    const Eigen::VectorXd y = white_noise(3, 72);
    CHECK_THROWS_AS(srivc_full(y, u, 0.01, 2, 0, pack_theta(kMode1)), std::invalid_argument);
    CHECK_THROWS_AS(lssvf_estimate(y, u, 0.01, 2, 0, 10.0), std::invalid_argument);
}

TEST_CASE("config validation") {
    SrivcConfig bad;
    bad.max_iters = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = SrivcConfig{};
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = SrivcConfig{};
    bad.cond_limit = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
