#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ctid/additive_model.hpp"
#include "ctid/discretize.hpp"
#include "ctid/errors.hpp"
#include "ctid/transfer_function.hpp"

namespace ctid {

struct SrivcConfig {
    int max_iters = 100;      // inner iteration budget
    double rel_tol = 1e-9;    // relative parameter-change stop
    double cond_limit = 1e12; // condition threshold on the (equilibrated) normal matrix
    bool stabilize = true;    // reflect unstable iterates back into the left half plane

    void validate() const {
        if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
        if (rel_tol <= 0.0) throw std::invalid_argument("rel_tol must be positive");
        if (cond_limit <= 1.0) throw std::invalid_argument("cond_limit must exceed 1");
    }
};

enum class SrivcStatus { Converged, MaxIters, SingularMatrix, Unstable };

inline const char* to_string(SrivcStatus s) {
    switch (s) {
        case SrivcStatus::Converged: return "converged";
        case SrivcStatus::MaxIters: return "max_iters";
        case SrivcStatus::SingularMatrix: return "singular_matrix";
        case SrivcStatus::Unstable: return "unstable";
    }
    return "unknown";
}

/// One entry per completed iteration: the iterate, the mean squared residual,
/// the infinity norm of the first-order optimality vector, and the condition
/// estimate of the normal matrix that produced the iterate.
struct SrivcTrace {
    std::vector<ThetaVector> thetas;
    std::vector<double> costs;
    std::vector<double> optimality_norms;
    std::vector<double> conditions;
    SrivcStatus status = SrivcStatus::MaxIters;
    int n = 0, m = 0;

    bool empty() const { return thetas.empty(); }
    int iterations() const { return static_cast<int>(thetas.size()); }
    const ThetaVector& final_theta() const {
        if (thetas.empty()) throw std::logic_error("trace holds no iterate");
        return thetas.back();
    }
    TransferFunction final_tf() const { return unpack_theta(final_theta(), n, m); }
};

/// Filtered regressor/instrument rows and filtered residual output for one
/// submodel structure. Column ordering matches the parameter vector:
/// derivative-of-output columns 1..n (leading minus sign), input columns next.
struct RegressionWorkspace {
    Eigen::MatrixXd phi_f;      // N x (n+m+1)
    Eigen::MatrixXd phi_hat_f;  // N x (n+m+1)
    Eigen::VectorXd y_f;        // (1/A) y_tilde
    Eigen::VectorXd residual_e; // y_f - phi_f * theta  ==  y_tilde - (B/A) u
};

namespace detail {

inline std::vector<Polynomial> monomials(int up_to) {
    std::vector<Polynomial> out;
    out.reserve(static_cast<std::size_t>(up_to) + 1);
    for (int k = 0; k <= up_to; ++k) out.push_back(Polynomial::monomial(k));
    return out;
}

inline void check_series(const Eigen::VectorXd& y_tilde, const Eigen::VectorXd& u, int n, int m) {
    if (y_tilde.size() != u.size())
        throw std::invalid_argument("input and output sequences must have the same length");
    if (u.size() <= n + m + 1)
        throw std::invalid_argument("not enough samples for the requested structure");
}

}  // namespace detail

/// Filtered regressor columns [-p/A y~, ..., -p^n/A y~, 1/A u, ..., p^m/A u]
/// and the filtered residual output y_f = (1/A) y~.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> build_regressor(const TransferFunction& tf,
                                                                   const Eigen::VectorXd& y_tilde,
                                                                   const Eigen::VectorXd& u,
                                                                   double h) {
    const int n = tf.den.degree();
    const int m = tf.num.degree();
    detail::check_series(y_tilde, u, n, m);
    const Eigen::MatrixXd ybank = shared_den_filter(tf.den, detail::monomials(n), y_tilde, h);
    const Eigen::MatrixXd ubank = shared_den_filter(tf.den, detail::monomials(m), u, h);
    Eigen::MatrixXd phi(u.size(), n + m + 1);
    for (int j = 1; j <= n; ++j) phi.col(j - 1) = -ybank.col(j);
    for (int j = 0; j <= m; ++j) phi.col(n + j) = ubank.col(j);
    return {std::move(phi), ybank.col(0)};
}

inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> build_regressor(const ThetaVector& theta, int n,
                                                                   int m,
                                                                   const Eigen::VectorXd& y_tilde,
                                                                   const Eigen::VectorXd& u,
                                                                   double h) {
    return build_regressor(unpack_theta(theta, n, m), y_tilde, u, h);
}

/// Instrument columns [-pB/A^2 u, ..., -p^n B/A^2 u, 1/A u, ..., p^m/A u].
/// Built from the input and the current model only.
inline Eigen::MatrixXd build_instrument(const TransferFunction& tf, const Eigen::VectorXd& u,
                                        double h) {
    const int n = tf.den.degree();
    const int m = tf.num.degree();
    const Polynomial den_sq = tf.den * tf.den;
    std::vector<Polynomial> nums;
    nums.reserve(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) nums.push_back(Polynomial::monomial(j) * tf.num);
    const Eigen::MatrixXd dbank = shared_den_filter(den_sq, nums, u, h);
    const Eigen::MatrixXd ubank = shared_den_filter(tf.den, detail::monomials(m), u, h);
    Eigen::MatrixXd phi_hat(u.size(), n + m + 1);
    for (int j = 1; j <= n; ++j) phi_hat.col(j - 1) = -dbank.col(j - 1);
    for (int j = 0; j <= m; ++j) phi_hat.col(n + j) = ubank.col(j);
    return phi_hat;
}

inline Eigen::MatrixXd build_instrument(const ThetaVector& theta, int n, int m,
                                        const Eigen::VectorXd& u, double h) {
    return build_instrument(unpack_theta(theta, n, m), u, h);
}

/// Regressor, instrument, filtered output and residual at one parameter point.
inline RegressionWorkspace build_workspace(const ThetaVector& theta, int n, int m,
                                           const Eigen::VectorXd& y_tilde,
                                           const Eigen::VectorXd& u, double h) {
    const TransferFunction tf = unpack_theta(theta, n, m);
    RegressionWorkspace ws;
    auto [phi, y_f] = build_regressor(tf, y_tilde, u, h);
    ws.phi_f = std::move(phi);
    ws.y_f = std::move(y_f);
    ws.phi_hat_f = build_instrument(tf, u, h);
    ws.residual_e = ws.y_f - ws.phi_f * theta.values;
    return ws;
}

namespace detail {

/// Solves [ (1/N) Phat^T Phi ] theta = (1/N) Phat^T y_f by LU with partial
/// pivoting after row/column equilibration. The condition estimate is taken on
/// the equilibrated matrix so that it measures excitation rather than the raw
/// coefficient scaling of high-order structures. Throws SingularMatrixError
/// when the estimate reaches cond_limit.
struct StepResult {
    Eigen::VectorXd theta;
    double condition = 0.0;
};

inline StepResult solve_normal_system(const RegressionWorkspace& ws, double cond_limit) {
    const double N = static_cast<double>(ws.phi_f.rows());
    const Eigen::Index p = ws.phi_f.cols();
    Eigen::VectorXd d_left(p), d_right(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        d_left(j) = ws.phi_hat_f.col(j).norm() / std::sqrt(N);
        d_right(j) = ws.phi_f.col(j).norm() / std::sqrt(N);
        if (d_left(j) == 0.0 || d_right(j) == 0.0 || !std::isfinite(d_left(j)) ||
            !std::isfinite(d_right(j)))
            throw SingularMatrixError(std::numeric_limits<double>::infinity());
    }
    const Eigen::MatrixXd M = ws.phi_hat_f.transpose() * ws.phi_f / N;
    const Eigen::VectorXd v = ws.phi_hat_f.transpose() * ws.y_f / N;
    const Eigen::MatrixXd Ms =
        d_left.cwiseInverse().asDiagonal() * M * d_right.cwiseInverse().asDiagonal();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ms);
    const double smin = svd.singularValues()(p - 1);
    const double smax = svd.singularValues()(0);
    const double cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
    if (!std::isfinite(cond) || cond >= cond_limit) throw SingularMatrixError(cond);

    StepResult out;
    out.condition = cond;
    Eigen::VectorXd vs = d_left.cwiseInverse().asDiagonal() * v;
    out.theta = d_right.cwiseInverse().asDiagonal() * Eigen::PartialPivLU<Eigen::MatrixXd>(Ms).solve(vs);
    return out;
}

inline double relative_change(const Eigen::VectorXd& next, const Eigen::VectorXd& prev) {
    const double denom = prev.norm();
    return (next - prev).norm() / (denom > 0.0 ? denom : 1.0);
}

}  // namespace detail

/// One instrumental-variable iteration from theta.
inline ThetaVector srivc_step(const ThetaVector& theta, int n, int m,
                              const Eigen::VectorXd& y_tilde, const Eigen::VectorXd& u, double h,
                              double cond_limit = SrivcConfig{}.cond_limit) {
    detail::check_series(y_tilde, u, n, m);
    const RegressionWorkspace ws = build_workspace(theta, n, m, y_tilde, u, h);
    return ThetaVector(detail::solve_normal_system(ws, cond_limit).theta);
}

/// Gradient-with-instrument vector (1/N) sum_k phi_hat(kh) e(kh) with
/// e = y~ - (B/A) u; zero at a fixed point of the iterations.
inline Eigen::VectorXd first_order_optimality(const ThetaVector& theta, int n, int m,
                                              const Eigen::VectorXd& y_tilde,
                                              const Eigen::VectorXd& u, double h) {
    const TransferFunction tf = unpack_theta(theta, n, m);
    const Eigen::VectorXd e = y_tilde - simulate_zoh(tf, u, h);
    const Eigen::MatrixXd phi_hat = build_instrument(tf, u, h);
    return phi_hat.transpose() * e / static_cast<double>(u.size());
}

/// Iterates srivc_step until the relative parameter change drops below
/// rel_tol or the budget runs out. With stabilize on, every iterate is
/// reflected into the left half plane before it is used as the next filter
/// point. Iterates that fail (singular normal matrix, instability with
/// stabilize off, filter overflow) terminate the trace with the matching
/// status and are not recorded.
inline SrivcTrace srivc_refine(const ThetaVector& theta_init, int n, int m,
                               const Eigen::VectorXd& y_tilde, const Eigen::VectorXd& u, double h,
                               const SrivcConfig& cfg = {}) {
    cfg.validate();
    detail::check_series(y_tilde, u, n, m);
    const double N = static_cast<double>(u.size());

    SrivcTrace trace;
    trace.n = n;
    trace.m = m;
    Eigen::VectorXd theta = theta_init.values;
    RegressionWorkspace ws = build_workspace(theta_init, n, m, y_tilde, u, h);

    for (int s = 0; s < cfg.max_iters; ++s) {
        detail::StepResult step;
        try {
            step = detail::solve_normal_system(ws, cfg.cond_limit);
        } catch (const SingularMatrixError&) {
            trace.status = SrivcStatus::SingularMatrix;
            return trace;
        }

        ThetaVector theta_next(step.theta);
        TransferFunction tf_next;
        try {
            tf_next = unpack_theta(theta_next, n, m);
        } catch (const std::invalid_argument&) {
            trace.status = SrivcStatus::SingularMatrix;  // degree collapse (a_n == 0)
            return trace;
        }
        if (cfg.stabilize) {
            tf_next = reflect_unstable(tf_next);
            theta_next = pack_theta(tf_next, n, m);
        } else if (!is_stable(tf_next)) {
            trace.status = SrivcStatus::Unstable;
            return trace;
        }

        RegressionWorkspace ws_next;
        try {
            ws_next = build_workspace(theta_next, n, m, y_tilde, u, h);
        } catch (const SimulationOverflow&) {
            trace.status = SrivcStatus::Unstable;
            return trace;
        }

        trace.thetas.push_back(theta_next);
        trace.costs.push_back(ws_next.residual_e.squaredNorm() / N);
        trace.optimality_norms.push_back(
            (ws_next.phi_hat_f.transpose() * ws_next.residual_e / N).lpNorm<Eigen::Infinity>());
        trace.conditions.push_back(step.condition);

        const double rel = detail::relative_change(theta_next.values, theta);
        theta = theta_next.values;
        ws = std::move(ws_next);
        if (rel < cfg.rel_tol) {
            trace.status = SrivcStatus::Converged;
            return trace;
        }
    }
    trace.status = SrivcStatus::MaxIters;
    return trace;
}

/// Standard estimator on an unfactored (n, m) structure: the refinement run
/// with the measured output as the residual output.
inline SrivcTrace srivc_full(const Eigen::VectorXd& y, const Eigen::VectorXd& u, double h, int n,
                             int m, const ThetaVector& theta_init, const SrivcConfig& cfg = {}) {
    return srivc_refine(theta_init, n, m, y, u, h, cfg);
}

/// Least-squares state-variable-filter estimate. Both signals are filtered by
/// p^j / E(p) with E(p) = (p/lambda + 1)^n and the anti-monic parameter vector
/// is solved by ordinary least squares on the filtered regression.
inline ThetaVector lssvf_estimate(const Eigen::VectorXd& y, const Eigen::VectorXd& u, double h,
                                  int n, int m, double lambda_svf) {
    if (lambda_svf <= 0.0) throw std::invalid_argument("lambda_svf must be positive");
    if (n < 1 || m < 0 || m > n) throw std::invalid_argument("invalid (n, m) structure");
    detail::check_series(y, u, n, m);

    Polynomial E{1.0};
    const Polynomial stage{1.0, 1.0 / lambda_svf};
    for (int i = 0; i < n; ++i) E = E * stage;

    const Eigen::MatrixXd ybank = shared_den_filter(E, detail::monomials(n), y, h);
    const Eigen::MatrixXd ubank = shared_den_filter(E, detail::monomials(m), u, h);

    const Eigen::Index p = n + m + 1;
    Eigen::MatrixXd phi(u.size(), p);
    for (int j = 1; j <= n; ++j) phi.col(j - 1) = -ybank.col(j);
    for (int j = 0; j <= m; ++j) phi.col(n + j) = ubank.col(j);
    const Eigen::VectorXd rhs = ybank.col(0);

    // Columns are normalized before any rank decision; raw column norms span
    // many decades for high filter orders. The input block must carry full
    // rank (excitation); a silent output (zero y-columns) only removes
    // information about the denominator and is solved minimum-norm instead.
    Eigen::VectorXd scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        scale(j) = phi.col(j).norm();
        if (scale(j) == 0.0 || !std::isfinite(scale(j))) scale(j) = 1.0;
    }
    const Eigen::MatrixXd phi_s = phi * scale.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> uqr(phi_s.rightCols(m + 1));
    if (uqr.rank() < m + 1) throw NumericError("rank-deficient regression matrix");
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(phi_s);
    return ThetaVector(scale.cwiseInverse().asDiagonal() * cod.solve(rhs));
}

}  // namespace ctid
