#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ctid/transfer_function.hpp"

using namespace ctid;

TEST_CASE("construction enforces the anti-monic and properness conventions") {
    CHECK_NOTHROW(TransferFunction({1.0}, {1.0, 0.5}));
    CHECK_THROWS_AS(TransferFunction({1.0}, {2.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(TransferFunction({1.0, 1.0, 1.0}, {1.0, 0.5}), std::invalid_argument);
    // trailing zeros on the denominator trim away, a_n stays nonzero
    TransferFunction tf({1.0}, {1.0, 0.5, 0.0});
    CHECK(tf.order() == 1);
    CHECK(tf.den.leading() == 0.5);
}

TEST_CASE("packing matches the [a_1..a_n, b_0..b_m] layout") {
    // first summand of the fourth-order two-mode benchmark
    TransferFunction g({3.0}, {1.0, 0.25, 0.25});
    const ThetaVector t = pack_theta(g);
    REQUIRE(t.values.size() == 3);
    CHECK(t.values(0) == 0.25);
    CHECK(t.values(1) == 0.25);
    CHECK(t.values(2) == 3.0);

    TransferFunction first_order({1.0}, {1.0, 1.0});
    const ThetaVector t2 = pack_theta(first_order);
    REQUIRE(t2.values.size() == 2);
    CHECK(t2.values(0) == 1.0);
    CHECK(t2.values(1) == 1.0);
}

TEST_CASE("pack/unpack round-trip is the identity on random coprime structures") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> coeff(0.1, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        // n = 3, m = 1 with positive denominators (stable, no cancellations expected)
        TransferFunction tf({coeff(gen), coeff(gen)},
                            {1.0, coeff(gen), coeff(gen), coeff(gen)});
        const TransferFunction back = unpack_theta(pack_theta(tf), 3, 1);
        CHECK(back == tf);
    }
}

TEST_CASE("unpack validates structure") {
    ThetaVector t(Eigen::Vector3d(0.25, 0.25, 3.0));
    CHECK_NOTHROW(unpack_theta(t, 2, 0));
    CHECK_THROWS_AS(unpack_theta(t, 3, 0), std::invalid_argument);  // length mismatch
    ThetaVector zero_an(Eigen::Vector3d(0.25, 0.0, 3.0));
    CHECK_THROWS_AS(unpack_theta(zero_an, 2, 0), std::invalid_argument);
}

TEST_CASE("pack with explicit layout zero-pads the numerator") {
    TransferFunction g({4.0, 0.28}, {1.0, 0.26, 0.255, 0.003125, 0.000625});
    const ThetaVector t = pack_theta(g, 4, 2);
    REQUIRE(t.values.size() == 7);
    CHECK(t.values(6) == 0.0);
    CHECK_THROWS_AS(pack_theta(g, 3, 2), std::invalid_argument);
}

TEST_CASE("poles of a second-order resonant denominator") {
    TransferFunction g({1.0}, {1.0, 0.25, 0.25});
    auto ps = poles(g);
    REQUIRE(ps.size() == 2);
    std::sort(ps.begin(), ps.end(), [](auto a, auto b) { return a.imag() < b.imag(); });
    // quadratic formula: -0.5 +- j sqrt(1/0.25 - 0.25) ... = -0.5 +- j1.93649
    CHECK(ps[1].real() == Catch::Approx(-0.5).margin(1e-6));
    CHECK(ps[1].imag() == Catch::Approx(1.9364916731037085).margin(1e-6));
    CHECK(ps[0].imag() == Catch::Approx(-1.9364916731037085).margin(1e-6));
}

TEST_CASE("reflect_unstable") {
    SECTION("stable systems come back unchanged") {
        TransferFunction g({2.0}, {1.0, 0.5, 0.25});
        CHECK(reflect_unstable(g) == g);
    }
    SECTION("a right-half-plane pole is mirrored, DC gain preserved") {
        TransferFunction g({1.0}, {1.0, -0.5});  // pole at +2
        const TransferFunction r = reflect_unstable(g);
        CHECK(r.den.coeffs[1] == Catch::Approx(0.5).epsilon(1e-12));
        CHECK(r.dc_gain() == Catch::Approx(1.0));
        CHECK(is_stable(r));
    }
    SECTION("magnitude response of a single-pole system is preserved") {
        TransferFunction g({1.0}, {1.0, -0.5});
        const TransferFunction r = reflect_unstable(g);
        for (double w : {0.1, 1.0, 5.0, 30.0}) {
            const auto jw = std::complex<double>(0.0, w);
            CHECK(std::abs(r.eval(jw)) == Catch::Approx(std::abs(g.eval(jw))).epsilon(1e-10));
        }
    }
}

TEST_CASE("coprimality check flags shared roots") {
    // (p + 1) / ((p + 1)(p + 2)) normalized anti-monic
    TransferFunction shared({0.5, 0.5}, {1.0, 1.5, 0.5});
    CHECK_FALSE(is_coprime(shared));
    TransferFunction clean({1.0, 1.0}, {1.0, 1.5, 0.5});  // zero at -1? no: 1 + p -> root -1
    CHECK_FALSE(is_coprime(clean));
    TransferFunction ok({1.0, 0.2}, {1.0, 1.5, 0.5});  // zero at -5
    CHECK(is_coprime(ok));
}

TEST_CASE("anti-monic renormalization rejects a vanishing constant term") {
    CHECK_THROWS_AS(normalize_anti_monic(Polynomial{1.0}, Polynomial{0.0, 1.0}), NumericError);
    const TransferFunction tf = normalize_anti_monic(Polynomial{1.0}, Polynomial{2.0, 1.0});
    CHECK(tf.den.coeffs[0] == 1.0);
    CHECK(tf.den.coeffs[1] == Catch::Approx(0.5));
    CHECK(tf.num.coeffs[0] == Catch::Approx(0.5));
}
