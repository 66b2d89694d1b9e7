#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "ctid/errors.hpp"
#include "ctid/transfer_function.hpp"

namespace ctid {

/// Exact ZOH equivalent of a continuous-time SISO system at period h:
/// x[k+1] = A_d x[k] + B_d u[k],  y[k] = C_d^T x[k] + D_d u[k].
struct DiscreteStateSpace {
    Eigen::MatrixXd A_d;
    Eigen::VectorXd B_d;
    Eigen::VectorXd C_d;
    double D_d = 0.0;
    double h = 0.0;

    int order() const { return static_cast<int>(A_d.rows()); }
};

namespace detail {

/// Controllable-canonical realization of 1/A(p), ZOH-discretized at period h.
/// The operator variable is rescaled internally (p = lam * q with
/// lam = |a_n|^{-1/n}) so that coefficient ranges spanning many decades keep
/// the matrix exponential well conditioned; the sampled input/output map is
/// unchanged by that change of state basis. The continuous state of the
/// canonical chain is z, z', ..., z^{(n-1)} with A(q-domain) z = w, so the
/// discrete state trajectory carries all operator filters q^j / A at once.
struct CanonicalZoh {
    int n = 0;          // denominator degree
    double lam = 1.0;   // p = lam * q
    double lead = 1.0;  // leading coefficient of the rescaled denominator
    std::vector<double> den_scaled;  // rescaled denominator, ascending in q
    Eigen::VectorXd monic;           // den_scaled / lead, coefficients 0..n-1
    Eigen::MatrixXd A_d;             // n x n discrete propagator
    Eigen::VectorXd B_d;             // n discrete input map
};

inline CanonicalZoh make_canonical_zoh(const Polynomial& den, double h) {
    if (h <= 0.0) throw std::invalid_argument("sampling period h must be positive");
    CanonicalZoh c;
    c.n = den.degree();
    if (c.n == 0) return c;

    c.lam = std::pow(std::abs(den.leading()), -1.0 / c.n);
    if (!std::isfinite(c.lam) || c.lam <= 0.0) c.lam = 1.0;

    c.den_scaled.resize(static_cast<std::size_t>(c.n) + 1);
    double pw = 1.0;
    for (int k = 0; k <= c.n; ++k) {
        c.den_scaled[static_cast<std::size_t>(k)] = den.coeffs[static_cast<std::size_t>(k)] * pw;
        pw *= c.lam;
    }
    c.lead = c.den_scaled.back();

    c.monic.resize(c.n);
    for (int k = 0; k < c.n; ++k) c.monic(k) = c.den_scaled[static_cast<std::size_t>(k)] / c.lead;

    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(c.n + 1, c.n + 1);
    for (int i = 0; i + 1 < c.n; ++i) aug(i, i + 1) = 1.0;
    for (int k = 0; k < c.n; ++k) aug(c.n - 1, k) = -c.monic(k);
    aug(c.n - 1, c.n) = 1.0;

    const double h_scaled = h * c.lam;
    Eigen::MatrixXd phi = (aug * h_scaled).exp();
    if (!phi.allFinite()) throw NumericError("matrix exponential produced non-finite entries");

    c.A_d = phi.topLeftCorner(c.n, c.n);
    c.B_d = phi.topRightCorner(c.n, 1);
    return c;
}

/// Output weights (C, D) realizing num/den on top of a CanonicalZoh of den.
inline void output_weights(const CanonicalZoh& c, const Polynomial& num, Eigen::VectorXd& C_out,
                           double& D_out) {
    // Rescale the numerator into the q domain, peel off the direct term, and
    // express the strictly proper remainder over the monic denominator.
    std::vector<double> num_scaled(static_cast<std::size_t>(c.n) + 1, 0.0);
    double pw = 1.0;
    for (int k = 0; k <= c.n; ++k) {
        num_scaled[static_cast<std::size_t>(k)] = num.at(k) * pw;
        pw *= c.lam;
    }
    D_out = num_scaled[static_cast<std::size_t>(c.n)] / c.lead;
    C_out.resize(c.n);
    for (int k = 0; k < c.n; ++k)
        C_out(k) = (num_scaled[static_cast<std::size_t>(k)] -
                    D_out * c.den_scaled[static_cast<std::size_t>(k)]) /
                   c.lead;
}

/// Simulates the canonical chain from zero state, returning the N x n state
/// trajectory (row k = state at sample k).
inline Eigen::MatrixXd state_trajectory(const CanonicalZoh& c, const Eigen::VectorXd& u) {
    const Eigen::Index N = u.size();
    Eigen::MatrixXd Z(N, c.n);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(c.n);
    for (Eigen::Index k = 0; k < N; ++k) {
        Z.row(k) = x.transpose();
        if (!x.allFinite())
            throw SimulationOverflow(static_cast<std::size_t>(k), "state simulation overflowed");
        x = c.A_d * x + c.B_d * u(k);
    }
    return Z;
}

}  // namespace detail

/// Exact ZOH discretization: controllable-canonical continuous realization,
/// then A_d = exp(A h), B_d = (integral of exp(A tau) d tau) B via the
/// augmented-matrix exponential. D_d carries the biproper feedthrough.
inline DiscreteStateSpace zoh_discretize(const TransferFunction& tf, double h) {
    const auto c = detail::make_canonical_zoh(tf.den, h);
    DiscreteStateSpace d;
    d.h = h;
    if (c.n == 0) {
        d.A_d.resize(0, 0);
        d.B_d.resize(0);
        d.C_d.resize(0);
        d.D_d = tf.num.coeffs[0];  // static gain (den == 1)
        return d;
    }
    d.A_d = c.A_d;
    d.B_d = c.B_d;
    detail::output_weights(c, tf.num, d.C_d, d.D_d);
    return d;
}

/// Runs the discrete recursion from zero state. Throws SimulationOverflow at
/// the first non-finite output sample.
inline Eigen::VectorXd simulate(const DiscreteStateSpace& d, const Eigen::VectorXd& u) {
    const Eigen::Index N = u.size();
    Eigen::VectorXd y(N);
    if (d.order() == 0) {
        y = d.D_d * u;
        for (Eigen::Index k = 0; k < N; ++k)
            if (!std::isfinite(y(k)))
                throw SimulationOverflow(static_cast<std::size_t>(k), "simulation overflowed");
        return y;
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d.order());
    for (Eigen::Index k = 0; k < N; ++k) {
        y(k) = d.C_d.dot(x) + d.D_d * u(k);
        if (!std::isfinite(y(k)))
            throw SimulationOverflow(static_cast<std::size_t>(k), "simulation overflowed");
        x = d.A_d * x + d.B_d * u(k);
    }
    return y;
}

/// ZOH response of tf to the sampled input u, zero initial state.
inline Eigen::VectorXd simulate_zoh(const TransferFunction& tf, const Eigen::VectorXd& u, double h) {
    return simulate(zoh_discretize(tf, h), u);
}

/// Applies p^k / A(p) to a sampled signal under the ZOH intersample
/// assumption. k = deg(A) yields the biproper filter with feedthrough 1/a_n.
inline Eigen::VectorXd apply_operator_filter(int k, const Polynomial& den,
                                             const Eigen::VectorXd& signal, double h) {
    if (k < 0 || k > den.degree())
        throw std::invalid_argument("operator filter p^k/A is improper (k > deg A)");
    return simulate_zoh(TransferFunction(Polynomial::monomial(k), den), signal, h);
}

/// Applies a family of filters N_c(p)/A(p) sharing one denominator to one
/// signal with a single realization and a single pass over the data. Column c
/// of the result is (numerators[c] / den) applied to w. Values agree with
/// apply_operator_filter / simulate_zoh up to rounding.
inline Eigen::MatrixXd shared_den_filter(const Polynomial& den,
                                         const std::vector<Polynomial>& numerators,
                                         const Eigen::VectorXd& w, double h) {
    const auto c = detail::make_canonical_zoh(den, h);
    const Eigen::Index N = w.size();
    Eigen::MatrixXd out(N, static_cast<Eigen::Index>(numerators.size()));
    if (c.n == 0) {
        for (std::size_t j = 0; j < numerators.size(); ++j)
            out.col(static_cast<Eigen::Index>(j)) = numerators[j].coeffs[0] * w;
        return out;
    }
    const Eigen::MatrixXd Z = detail::state_trajectory(c, w);
    Eigen::VectorXd C;
    double D = 0.0;
    for (std::size_t j = 0; j < numerators.size(); ++j) {
        if (numerators[j].degree() > c.n)
            throw std::invalid_argument("shared_den_filter: improper numerator");
        detail::output_weights(c, numerators[j], C, D);
        out.col(static_cast<Eigen::Index>(j)) = Z * C;
        if (D != 0.0) out.col(static_cast<Eigen::Index>(j)) += D * w;
    }
    if (!out.allFinite()) throw SimulationOverflow(0, "filter bank overflowed");
    return out;
}

}  // namespace ctid
