#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace ctid {

/// Real polynomial in the Heaviside operator p, coefficients stored in
/// ascending powers: coeffs[k] multiplies p^k. Trailing zeros are trimmed on
/// construction; the zero polynomial is represented as {0}.
struct Polynomial {
    std::vector<double> coeffs{0.0};

    Polynomial() = default;
    explicit Polynomial(std::vector<double> c) : coeffs(std::move(c)) {
        if (coeffs.empty()) coeffs = {0.0};
        trim();
    }
    Polynomial(std::initializer_list<double> c) : Polynomial(std::vector<double>(c)) {}

    /// scale * p^k
    static Polynomial monomial(int k, double scale = 1.0) {
        if (k < 0) throw std::invalid_argument("monomial power must be non-negative");
        std::vector<double> c(static_cast<std::size_t>(k) + 1, 0.0);
        c.back() = scale;
        return Polynomial(std::move(c));
    }

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    double leading() const { return coeffs.back(); }
    bool is_zero() const { return coeffs.size() == 1 && coeffs[0] == 0.0; }

    /// Coefficient of p^k; zero beyond the stored degree.
    double at(int k) const {
        return (k >= 0 && k < static_cast<int>(coeffs.size())) ? coeffs[static_cast<std::size_t>(k)]
                                                               : 0.0;
    }

    void trim() {
        while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    }

    std::complex<double> eval(std::complex<double> p) const {
        std::complex<double> acc = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * p + *it;
        return acc;
    }

    double eval(double p) const {
        double acc = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * p + *it;
        return acc;
    }

    Polynomial derivative() const {
        if (degree() == 0) return Polynomial{0.0};
        std::vector<double> d(coeffs.size() - 1);
        for (std::size_t k = 1; k < coeffs.size(); ++k)
            d[k - 1] = static_cast<double>(k) * coeffs[k];
        return Polynomial(std::move(d));
    }

    Polynomial operator*(const Polynomial& other) const {
        if (is_zero() || other.is_zero()) return Polynomial{0.0};
        std::vector<double> c(coeffs.size() + other.coeffs.size() - 1, 0.0);
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            for (std::size_t j = 0; j < other.coeffs.size(); ++j)
                c[i + j] += coeffs[i] * other.coeffs[j];
        return Polynomial(std::move(c));
    }

    Polynomial operator*(double s) const {
        std::vector<double> c(coeffs);
        for (double& v : c) v *= s;
        return Polynomial(std::move(c));
    }

    Polynomial operator+(const Polynomial& other) const {
        std::vector<double> c(std::max(coeffs.size(), other.coeffs.size()), 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = at(static_cast<int>(i)) + other.at(static_cast<int>(i));
        return Polynomial(std::move(c));
    }

    Polynomial operator-(const Polynomial& other) const {
        std::vector<double> c(std::max(coeffs.size(), other.coeffs.size()), 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = at(static_cast<int>(i)) - other.at(static_cast<int>(i));
        return Polynomial(std::move(c));
    }

    bool operator==(const Polynomial& other) const { return coeffs == other.coeffs; }

    /// Roots via companion-matrix eigenvalues. The variable is rescaled by the
    /// geometric mean of the root magnitudes first so that wide coefficient
    /// ranges (hundreds of rad/s next to sub-rad/s modes) stay well conditioned.
    std::vector<std::complex<double>> roots() const {
        std::vector<std::complex<double>> out;
        if (is_zero()) return out;

        // Exact zero constant coefficients give roots at the origin.
        std::size_t shift = 0;
        while (shift < coeffs.size() - 1 && coeffs[shift] == 0.0) ++shift;
        for (std::size_t i = 0; i < shift; ++i) out.emplace_back(0.0, 0.0);

        const int n = static_cast<int>(coeffs.size() - 1 - shift);
        if (n < 1) return out;

        const double c0 = coeffs[shift];
        const double cn = coeffs.back();
        double scale = std::pow(std::abs(c0 / cn), 1.0 / n);
        if (!std::isfinite(scale) || scale <= 0.0) scale = 1.0;

        // Monic coefficients of the rescaled polynomial q = p / scale.
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
        const double lead = cn * std::pow(scale, n);
        for (int k = 0; k < n; ++k) {
            companion(k, n - 1) = -coeffs[shift + static_cast<std::size_t>(k)] * std::pow(scale, k) / lead;
            if (k > 0) companion(k, k - 1) = 1.0;
        }

        Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("eigenvalue computation failed for polynomial roots");
        for (int i = 0; i < n; ++i) out.push_back(solver.eigenvalues()[i] * scale);
        return out;
    }

    /// Real polynomial with the given roots (conjugate-closed set), leading
    /// coefficient 1. Accumulates in complex arithmetic and drops the
    /// negligible imaginary residue.
    static Polynomial from_roots(const std::vector<std::complex<double>>& roots) {
        std::vector<std::complex<double>> c{1.0};
        for (const auto& r : roots) {
            std::vector<std::complex<double>> next(c.size() + 1, 0.0);
            for (std::size_t i = 0; i < c.size(); ++i) {
                next[i] -= c[i] * r;
                next[i + 1] += c[i];
            }
            c = std::move(next);
        }
        std::vector<double> real(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) real[i] = c[i].real();
        return Polynomial(std::move(real));
    }
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

}  // namespace ctid
