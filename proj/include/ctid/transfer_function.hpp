#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ctid/errors.hpp"
#include "ctid/polynomial.hpp"

namespace ctid {

/// Root-distance tolerance below which two roots count as shared (coprimality).
inline constexpr double kTolCoprime = 1e-8;
/// Root-distance tolerance below which denominator roots count as repeated.
inline constexpr double kTolCluster = 1e-6;

/// Proper rational function B(p)/A(p) with A anti-monic (A(0) = 1). The
/// anti-monic constraint and properness are enforced on construction;
/// coprimality of B and A is a separate, more expensive check (`is_coprime`)
/// applied at model-validation boundaries.
struct TransferFunction {
    Polynomial num{0.0};
    Polynomial den{1.0};

    TransferFunction() = default;
    TransferFunction(Polynomial b, Polynomial a) : num(std::move(b)), den(std::move(a)) {
        if (den.coeffs[0] != 1.0)
            throw std::invalid_argument("denominator must be anti-monic (constant coefficient exactly 1)");
        if (num.degree() > den.degree())
            throw std::invalid_argument("improper transfer function (deg num > deg den)");
    }

    int order() const { return den.degree(); }
    int relative_degree() const { return den.degree() - num.degree(); }
    bool is_biproper() const { return !num.is_zero() && num.degree() == den.degree(); }

    std::complex<double> eval(std::complex<double> p) const { return num.eval(p) / den.eval(p); }
    double dc_gain() const { return num.coeffs[0]; }

    bool operator==(const TransferFunction& other) const {
        return num == other.num && den == other.den;
    }
};

/// Divides both polynomials by den(0) so the result is anti-monic.
/// |den(0)| below 1e-12 cannot be renormalized and is an error.
inline TransferFunction normalize_anti_monic(const Polynomial& num, const Polynomial& den) {
    const double a0 = den.coeffs[0];
    if (std::abs(a0) < 1e-12)
        throw NumericError("cannot renormalize: denominator constant coefficient is (near) zero");
    Polynomial b = num * (1.0 / a0);
    Polynomial a = den * (1.0 / a0);
    a.coeffs[0] = 1.0;  // kill the rounding residue of a0/a0
    return TransferFunction(std::move(b), std::move(a));
}

inline std::vector<std::complex<double>> poles(const TransferFunction& tf) {
    if (tf.order() < 1) return {};
    return tf.den.roots();
}

inline std::vector<std::complex<double>> zeros(const TransferFunction& tf) {
    if (tf.num.is_zero() || tf.num.degree() < 1) return {};
    return tf.num.roots();
}

inline bool is_stable(const TransferFunction& tf) {
    for (const auto& p : poles(tf))
        if (p.real() > 0.0) return false;
    return true;
}

/// True when no numerator root lies within `tol` of a denominator root.
inline bool is_coprime(const TransferFunction& tf, double tol = kTolCoprime) {
    const auto zs = zeros(tf);
    if (zs.empty()) return true;
    const auto ps = poles(tf);
    for (const auto& z : zs)
        for (const auto& p : ps)
            if (std::abs(z - p) < tol) return false;
    return true;
}

/// Mirrors every pole with positive real part into the left half plane and
/// rebuilds the denominator anti-monic; the numerator is untouched. Stable
/// inputs are returned unchanged (bit for bit).
inline TransferFunction reflect_unstable(const TransferFunction& tf) {
    auto ps = poles(tf);
    bool any = false;
    for (auto& p : ps) {
        if (p.real() > 0.0) {
            p = std::complex<double>(-p.real(), p.imag());
            any = true;
        }
    }
    if (!any) return tf;
    Polynomial rebuilt = Polynomial::from_roots(ps);
    const double a0 = rebuilt.coeffs[0];
    if (std::abs(a0) < 1e-12)
        throw NumericError("reflected denominator has a (near) zero constant coefficient");
    rebuilt = rebuilt * (1.0 / a0);
    rebuilt.coeffs[0] = 1.0;
    return TransferFunction(tf.num, std::move(rebuilt));
}

/// Stacked parameters of one transfer function, ordered
/// [a_1, ..., a_n, b_0, ..., b_m].
struct ThetaVector {
    Eigen::VectorXd values;

    ThetaVector() = default;
    explicit ThetaVector(Eigen::VectorXd v) : values(std::move(v)) {}

    Eigen::Index size() const { return values.size(); }
};

/// Packs with the structure taken from the (trimmed) polynomial degrees.
inline ThetaVector pack_theta(const TransferFunction& tf) {
    const int n = tf.den.degree();
    const int m = tf.num.degree();
    Eigen::VectorXd v(n + m + 1);
    for (int j = 1; j <= n; ++j) v(j - 1) = tf.den.coeffs[static_cast<std::size_t>(j)];
    for (int j = 0; j <= m; ++j) v(n + j) = tf.num.at(j);
    return ThetaVector(std::move(v));
}

/// Packs into an explicit (n, m) layout, zero-padding the numerator. Rejects
/// transfer functions that do not fit the layout or whose a_n would be zero.
inline ThetaVector pack_theta(const TransferFunction& tf, int n, int m) {
    if (tf.den.degree() != n)
        throw std::invalid_argument("pack_theta: denominator degree does not match n");
    if (tf.num.degree() > m)
        throw std::invalid_argument("pack_theta: numerator degree exceeds m");
    Eigen::VectorXd v(n + m + 1);
    for (int j = 1; j <= n; ++j) v(j - 1) = tf.den.coeffs[static_cast<std::size_t>(j)];
    for (int j = 0; j <= m; ++j) v(n + j) = tf.num.at(j);
    return ThetaVector(std::move(v));
}

inline TransferFunction unpack_theta(const ThetaVector& theta, int n, int m) {
    if (n < 0 || m < 0 || m > n) throw std::invalid_argument("unpack_theta: invalid structure (need n >= m >= 0)");
    if (theta.values.size() != n + m + 1)
        throw std::invalid_argument("unpack_theta: parameter vector length does not equal n + m + 1");
    if (n > 0 && theta.values(n - 1) == 0.0)
        throw std::invalid_argument("unpack_theta: a_n must be nonzero");
    std::vector<double> a(static_cast<std::size_t>(n) + 1, 0.0);
    a[0] = 1.0;
    for (int j = 1; j <= n; ++j) a[static_cast<std::size_t>(j)] = theta.values(j - 1);
    std::vector<double> b(static_cast<std::size_t>(m) + 1, 0.0);
    for (int j = 0; j <= m; ++j) b[static_cast<std::size_t>(j)] = theta.values(n + j);
    return TransferFunction(Polynomial(std::move(b)), Polynomial(std::move(a)));
}

}  // namespace ctid
