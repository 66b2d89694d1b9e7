#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ctid/additive_model.hpp"
#include "ctid/estimators.hpp"

namespace ctid {

struct BcdConfig {
    double epsilon = 1e-10;  // relative-change stop on the stacked parameter vector
    int max_outer = 30;      // outer sweep budget
    int max_inner = 50;      // per-block refinement budget
    SrivcConfig srivc;       // inner-iteration knobs

    void validate() const {
        if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
        if (max_outer < 1) throw std::invalid_argument("max_outer must be at least 1");
        if (max_inner < 1) throw std::invalid_argument("max_inner must be at least 1");
        srivc.validate();
    }
};

enum class BlockOutcome { Accepted, NoImprovement, Singular, Failed };

inline const char* to_string(BlockOutcome o) {
    switch (o) {
        case BlockOutcome::Accepted: return "accepted";
        case BlockOutcome::NoImprovement: return "no_improvement";
        case BlockOutcome::Singular: return "singular";
        case BlockOutcome::Failed: return "failed";
    }
    return "unknown";
}

/// cost_trace starts at the cost of the initial model and gains one entry per
/// accepted block update; it is non-increasing by construction. x_trace holds
/// the stacked parameter vector at the start and after every completed sweep.
struct BcdResult {
    AdditiveModel model;
    std::vector<Eigen::VectorXd> x_trace;
    std::vector<double> cost_trace;
    std::vector<std::vector<bool>> accepted;
    std::vector<std::vector<BlockOutcome>> block_outcomes;
    int outer_iters_used = 0;
    bool tolerance_stop = false;  // stopped via the epsilon test (not budget exhaustion)

    double final_cost() const { return cost_trace.back(); }
};

/// Mean squared output-error cost of the additive model on the records.
inline double cost_vn(const AdditiveModel& model, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& u, double h) {
    if (y.size() != u.size())
        throw std::invalid_argument("input and output sequences must have the same length");
    if (y.size() < 1) throw std::invalid_argument("empty data");
    Eigen::VectorXd r = y;
    for (const auto& tf : model.subs) r -= simulate_zoh(tf, u, h);
    return r.squaredNorm() / static_cast<double>(y.size());
}

/// Residual output for one block: the measured output minus the simulated
/// contributions of the already-updated blocks (models_before) and the
/// not-yet-updated blocks (models_after).
inline Eigen::VectorXd residual_output(const Eigen::VectorXd& y, const Eigen::VectorXd& u, double h,
                                       std::span<const TransferFunction> models_before,
                                       std::span<const TransferFunction> models_after) {
    Eigen::VectorXd r = y;
    for (const auto& tf : models_before) r -= simulate_zoh(tf, u, h);
    for (const auto& tf : models_after) r -= simulate_zoh(tf, u, h);
    return r;
}

/// Parameter accounting for an additive structure against the unfactored
/// structure of minimal relative degree that contains it.
struct ParsimonyReport {
    int blocks = 0;
    std::vector<int> relative_degrees;
    int min_relative_degree = 0;
    int additive_parameters = 0;    // sum(n_i + m_i) + K
    int unfactored_parameters = 0;  // 2 sum(n_i) - r + 1
    int excess = 0;                 // sum(r_i) - r - K + 1
};

inline ParsimonyReport parsimony_excess(const StructureSpec& structure) {
    structure.validate();
    ParsimonyReport rep;
    rep.blocks = structure.blocks();
    rep.relative_degrees = structure.relative_degrees();
    rep.min_relative_degree = structure.min_relative_degree();
    rep.additive_parameters = structure.parameter_count();
    const int total_order = structure.total_order();
    rep.unfactored_parameters = 2 * total_order - rep.min_relative_degree + 1;
    const int sum_r = std::accumulate(rep.relative_degrees.begin(), rep.relative_degrees.end(), 0);
    rep.excess = sum_r - rep.min_relative_degree - rep.blocks + 1;
    return rep;
}

namespace detail {

/// Canonical cost evaluation: y minus the block simulations subtracted in
/// block order. Every acceptance comparison inside bcd_fit goes through this
/// single arithmetic path so the descent property holds exactly, not just up
/// to rounding.
inline double canonical_cost(const Eigen::VectorXd& y, const std::vector<Eigen::VectorXd>& sims) {
    Eigen::VectorXd r = y;
    for (const auto& s : sims) r -= s;
    return r.squaredNorm() / static_cast<double>(y.size());
}

}  // namespace detail

/// Block-coordinate descent over the additive structure. Each sweep visits the
/// blocks in order; for each block, instrumental-variable iterations run on
/// that block's residual output until a candidate strictly decreases the full
/// cost relative to the block's value at the start of the sweep
/// (first-improvement acceptance), the iterates become stationary, or the
/// inner budget runs out. Blocks without an improving candidate keep their
/// parameters. Stops early when the stacked parameter vector changes by less
/// than epsilon in relative 2-norm.
inline BcdResult bcd_fit(const Eigen::VectorXd& y, const Eigen::VectorXd& u, double h,
                         const StructureSpec& structure, const AdditiveModel& init,
                         const BcdConfig& cfg = {}) {
    cfg.validate();
    structure.validate();
    if (y.size() != u.size())
        throw std::invalid_argument("input and output sequences must have the same length");
    if (init.blocks() != structure.blocks())
        throw std::invalid_argument("initial model does not match the structure");
    for (int i = 0; i < structure.blocks(); ++i) {
        const auto [ni, mi] = structure.pairs[static_cast<std::size_t>(i)];
        if (init.subs[static_cast<std::size_t>(i)].den.degree() != ni ||
            init.subs[static_cast<std::size_t>(i)].num.degree() > mi)
            throw std::invalid_argument("initial model does not match the structure");
    }
    if (y.size() <= structure.parameter_count())
        throw std::invalid_argument("not enough samples for the requested structure");

    const int K = structure.blocks();
    const auto N = y.size();

    std::vector<ThetaVector> thetas(static_cast<std::size_t>(K));
    std::vector<Eigen::VectorXd> sims(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) {
        const auto [ni, mi] = structure.pairs[static_cast<std::size_t>(i)];
        thetas[static_cast<std::size_t>(i)] =
            pack_theta(init.subs[static_cast<std::size_t>(i)], ni, mi);
        sims[static_cast<std::size_t>(i)] =
            simulate_zoh(init.subs[static_cast<std::size_t>(i)], u, h);
    }

    auto stack = [&]() {
        Eigen::VectorXd x(structure.parameter_count());
        Eigen::Index at = 0;
        for (const auto& t : thetas) {
            x.segment(at, t.values.size()) = t.values;
            at += t.values.size();
        }
        return x;
    };

    BcdResult result;
    double cost_now = detail::canonical_cost(y, sims);
    result.cost_trace.push_back(cost_now);
    Eigen::VectorXd x_prev = stack();
    result.x_trace.push_back(x_prev);

    for (int l = 1; l <= cfg.max_outer; ++l) {
        std::vector<bool> sweep_accepted(static_cast<std::size_t>(K), false);
        std::vector<BlockOutcome> sweep_outcomes(static_cast<std::size_t>(K),
                                                 BlockOutcome::NoImprovement);

        for (int i = 0; i < K; ++i) {
            const auto [ni, mi] = structure.pairs[static_cast<std::size_t>(i)];
            Eigen::VectorXd y_tilde = y;
            for (int j = 0; j < K; ++j)
                if (j != i) y_tilde -= sims[static_cast<std::size_t>(j)];

            const double cost_start = cost_now;
            ThetaVector theta_s = thetas[static_cast<std::size_t>(i)];
            RegressionWorkspace ws;
            try {
                ws = build_workspace(theta_s, ni, mi, y_tilde, u, h);
            } catch (const SimulationOverflow&) {
                sweep_outcomes[static_cast<std::size_t>(i)] = BlockOutcome::Failed;
                continue;
            }

            for (int s = 1; s <= cfg.max_inner; ++s) {
                detail::StepResult step;
                try {
                    step = detail::solve_normal_system(ws, cfg.srivc.cond_limit);
                } catch (const SingularMatrixError&) {
                    sweep_outcomes[static_cast<std::size_t>(i)] = BlockOutcome::Singular;
                    break;
                }

                ThetaVector theta_cand(step.theta);
                TransferFunction tf_cand;
                try {
                    tf_cand = unpack_theta(theta_cand, ni, mi);
                } catch (const std::invalid_argument&) {
                    sweep_outcomes[static_cast<std::size_t>(i)] = BlockOutcome::Failed;
                    break;
                }
                if (cfg.srivc.stabilize) {
                    tf_cand = reflect_unstable(tf_cand);
                    theta_cand = pack_theta(tf_cand, ni, mi);
                } else if (!is_stable(tf_cand)) {
                    sweep_outcomes[static_cast<std::size_t>(i)] = BlockOutcome::Failed;
                    break;
                }

                Eigen::VectorXd sim_cand;
                try {
                    sim_cand = simulate_zoh(tf_cand, u, h);
                } catch (const SimulationOverflow&) {
                    sweep_outcomes[static_cast<std::size_t>(i)] = BlockOutcome::Failed;
                    break;
                }

                std::swap(sims[static_cast<std::size_t>(i)], sim_cand);
                const double cost_cand = detail::canonical_cost(y, sims);
                if (cost_cand < cost_start) {
                    thetas[static_cast<std::size_t>(i)] = theta_cand;
                    cost_now = cost_cand;
                    result.cost_trace.push_back(cost_now);
                    sweep_accepted[static_cast<std::size_t>(i)] = true;
                    sweep_outcomes[static_cast<std::size_t>(i)] = BlockOutcome::Accepted;
                    break;
                }
                std::swap(sims[static_cast<std::size_t>(i)], sim_cand);  // restore

                // Iterates that have gone stationary keep producing the same
                // candidate; further inner iterations cannot change the outcome.
                const double rel = detail::relative_change(theta_cand.values, theta_s.values);
                theta_s = theta_cand;
                if (rel < cfg.srivc.rel_tol) break;
                if (s < cfg.max_inner) {
                    try {
                        ws = build_workspace(theta_s, ni, mi, y_tilde, u, h);
                    } catch (const SimulationOverflow&) {
                        sweep_outcomes[static_cast<std::size_t>(i)] = BlockOutcome::Failed;
                        break;
                    }
                }
            }
        }

        result.accepted.push_back(sweep_accepted);
        result.block_outcomes.push_back(std::move(sweep_outcomes));
        result.outer_iters_used = l;

        if (l == 1) {
            const bool all_failed =
                std::all_of(result.block_outcomes[0].begin(), result.block_outcomes[0].end(),
                            [](BlockOutcome o) {
                                return o == BlockOutcome::Singular || o == BlockOutcome::Failed;
                            });
            if (all_failed) {
                std::string msg = "every block failed in the first sweep:";
                for (int i = 0; i < K; ++i)
                    msg += " block " + std::to_string(i + 1) + ": " +
                           to_string(result.block_outcomes[0][static_cast<std::size_t>(i)]) + ";";
                throw SingularMatrixError(std::numeric_limits<double>::infinity(), msg);
            }
        }

        const Eigen::VectorXd x_next = stack();
        result.x_trace.push_back(x_next);
        const double denom = x_prev.norm() > 0.0 ? x_prev.norm() : 1.0;
        const bool tol_stop = (x_next - x_prev).norm() / denom < cfg.epsilon;
        x_prev = x_next;
        if (tol_stop) {
            result.tolerance_stop = true;
            break;
        }
    }

    std::vector<TransferFunction> subs;
    subs.reserve(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) {
        const auto [ni, mi] = structure.pairs[static_cast<std::size_t>(i)];
        subs.push_back(unpack_theta(thetas[static_cast<std::size_t>(i)], ni, mi));
    }
    result.model = AdditiveModel(std::move(subs), structure);
    (void)N;
    return result;
}

/// Initial additive model from an unfactored fit: a state-variable-filter
/// estimate seeds instrumental-variable refinement on the full-order
/// structure, and the result is split by partial fractions with the requested
/// section degrees. Falls back to splitting the state-variable-filter estimate
/// itself when the refined model's pole pattern cannot realize the structure.
inline AdditiveModel initialize_from_unfactored(const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                                                double h, const StructureSpec& structure,
                                                double lssvf_lambda, const SrivcConfig& cfg = {}) {
    const int n = structure.total_order();
    const int m = n - structure.min_relative_degree();
    ThetaVector theta0 = lssvf_estimate(y, u, h, n, m, lssvf_lambda);
    TransferFunction tf_lssvf = reflect_unstable(unpack_theta(theta0, n, m));
    theta0 = pack_theta(tf_lssvf, n, m);
    if (structure.blocks() == 1) {
        const SrivcTrace trace = srivc_full(y, u, h, n, m, theta0, cfg);
        return AdditiveModel({trace.empty() ? tf_lssvf : trace.final_tf()}, structure);
    }
    const SrivcTrace trace = srivc_full(y, u, h, n, m, theta0, cfg);
    const TransferFunction refined = trace.empty() ? tf_lssvf : trace.final_tf();
    try {
        return partial_fractions(refined, structure);
    } catch (const std::invalid_argument&) {
        return partial_fractions(tf_lssvf, structure);
    }
}

}  // namespace ctid
