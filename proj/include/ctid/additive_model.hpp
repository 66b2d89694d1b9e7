#pragma once

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctid/discretize.hpp"
#include "ctid/transfer_function.hpp"

namespace ctid {

/// Ordered submodel degrees (n_i, m_i). At most one biproper pair (n_i == m_i)
/// so the additive decomposition stays identifiable.
struct StructureSpec {
    std::vector<std::pair<int, int>> pairs;

    StructureSpec() = default;
    explicit StructureSpec(std::vector<std::pair<int, int>> p) : pairs(std::move(p)) { validate(); }
    StructureSpec(std::initializer_list<std::pair<int, int>> p) : pairs(p) { validate(); }

    void validate() const {
        if (pairs.empty()) throw std::invalid_argument("structure must contain at least one block");
        int biproper = 0;
        for (const auto& [n, m] : pairs) {
            if (n < 1) throw std::invalid_argument("structure: every n_i must be at least 1");
            if (m < 0 || m > n)
                throw std::invalid_argument("structure: need n_i >= m_i >= 0");
            if (n == m) ++biproper;
        }
        if (biproper > 1)
            throw std::invalid_argument("structure: at most one subsystem may be biproper");
    }

    int blocks() const { return static_cast<int>(pairs.size()); }
    int total_order() const {
        int n = 0;
        for (const auto& [ni, mi] : pairs) n += ni;
        return n;
    }
    std::vector<int> relative_degrees() const {
        std::vector<int> r;
        r.reserve(pairs.size());
        for (const auto& [ni, mi] : pairs) r.push_back(ni - mi);
        return r;
    }
    int min_relative_degree() const {
        const auto r = relative_degrees();
        return *std::min_element(r.begin(), r.end());
    }
    /// Parameters of the additive parameterization: sum(n_i + m_i) + K.
    int parameter_count() const {
        int p = 0;
        for (const auto& [ni, mi] : pairs) p += ni + mi + 1;
        return p;
    }
};

/// Sum of K transfer functions with distinct denominators (modal form).
struct AdditiveModel {
    std::vector<TransferFunction> subs;
    StructureSpec structure;

    AdditiveModel() = default;

    explicit AdditiveModel(std::vector<TransferFunction> s) : subs(std::move(s)) {
        if (subs.empty()) throw std::invalid_argument("additive model needs at least one submodel");
        std::vector<std::pair<int, int>> pairs;
        pairs.reserve(subs.size());
        for (const auto& tf : subs) pairs.emplace_back(tf.den.degree(), tf.num.degree());
        structure = StructureSpec(std::move(pairs));
    }

    AdditiveModel(std::vector<TransferFunction> s, StructureSpec spec)
        : subs(std::move(s)), structure(std::move(spec)) {
        if (subs.size() != structure.pairs.size())
            throw std::invalid_argument("submodel count does not match structure");
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (subs[i].den.degree() != structure.pairs[i].first)
                throw std::invalid_argument("submodel " + std::to_string(i) +
                                            ": denominator degree does not match structure");
            if (subs[i].num.degree() > structure.pairs[i].second)
                throw std::invalid_argument("submodel " + std::to_string(i) +
                                            ": numerator degree exceeds structure");
        }
    }

    int blocks() const { return static_cast<int>(subs.size()); }
};

/// Full validation used at API boundaries: per-submodel coprimality and
/// pairwise-distinct denominators (jointly coprime within the root tolerance).
inline void validate_model(const AdditiveModel& model, double tol = kTolCoprime) {
    model.structure.validate();
    int biproper = 0;
    std::vector<std::vector<std::complex<double>>> pole_sets;
    pole_sets.reserve(model.subs.size());
    for (std::size_t i = 0; i < model.subs.size(); ++i) {
        const auto& tf = model.subs[i];
        if (tf.is_biproper()) ++biproper;
        if (!is_coprime(tf, tol))
            throw std::invalid_argument("submodel " + std::to_string(i) +
                                        " has a near pole-zero cancellation");
        pole_sets.push_back(poles(tf));
    }
    if (biproper > 1) throw std::invalid_argument("at most one subsystem may be biproper");
    for (std::size_t i = 0; i < pole_sets.size(); ++i)
        for (std::size_t j = i + 1; j < pole_sets.size(); ++j)
            for (const auto& pi : pole_sets[i])
                for (const auto& pj : pole_sets[j])
                    if (std::abs(pi - pj) < tol)
                        throw std::invalid_argument("submodels " + std::to_string(i) + " and " +
                                                    std::to_string(j) +
                                                    " share a denominator root");
}

/// Sum of the submodel ZOH responses, accumulated in block order.
inline Eigen::VectorXd simulate_additive(const AdditiveModel& model, const Eigen::VectorXd& u,
                                         double h) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(u.size());
    for (const auto& tf : model.subs) y += simulate_zoh(tf, u, h);
    return y;
}

/// Collapses the sum into a single rational function over the common
/// denominator, renormalized anti-monic.
inline TransferFunction additive_to_unfactored(const AdditiveModel& model) {
    if (model.blocks() == 1) return model.subs[0];
    Polynomial den{1.0};
    for (const auto& tf : model.subs) den = den * tf.den;
    Polynomial num{0.0};
    for (std::size_t i = 0; i < model.subs.size(); ++i) {
        Polynomial term = model.subs[i].num;
        for (std::size_t j = 0; j < model.subs.size(); ++j)
            if (j != i) term = term * model.subs[j].den;
        num = num + term;
    }
    return normalize_anti_monic(num, den);
}

namespace detail {

struct PoleGroup {
    // order 1: poles = {r}; order 2: conjugate pair or two reals
    std::vector<std::complex<double>> poles;
    std::vector<std::complex<double>> residues;
    double freq_key = 0.0;  // geometric-mean magnitude, used for deterministic ordering
};

/// Second-order (or first-order) section from a pole group's residues, before
/// anti-monic normalization:  sum_k residues[k] / (p - poles[k]).
inline void raw_section(const PoleGroup& g, Polynomial& num, Polynomial& den) {
    if (g.poles.size() == 1) {
        num = Polynomial{g.residues[0].real()};
        den = Polynomial{-g.poles[0].real(), 1.0};
        return;
    }
    if (g.poles[0].imag() != 0.0) {
        // conjugate pair: store only the upper pole and its residue
        const std::complex<double> p0 = g.poles[0];
        const std::complex<double> r = g.residues[0];
        num = Polynomial{-2.0 * (r * std::conj(p0)).real(), 2.0 * r.real()};
        den = Polynomial{std::norm(p0), -2.0 * p0.real(), 1.0};
        return;
    }
    const double p1 = g.poles[0].real(), p2 = g.poles[1].real();
    const double r1 = g.residues[0].real(), r2 = g.residues[1].real();
    num = Polynomial{-(r1 * p2 + r2 * p1), r1 + r2};
    den = Polynomial{p1 * p2, -(p1 + p2), 1.0};
}

}  // namespace detail

/// Partial-fraction expansion into the requested section structure. Poles must
/// be simple (pairwise distance above the cluster tolerance); sections are
/// restricted to orders 1 and 2. Conjugate pairs form real second-order
/// sections; leftover real poles are paired into second-order sections when
/// the structure asks for more order-2 blocks than there are complex pairs.
/// Section numerators are truncated to the requested degree m_i by dropping
/// the higher-order terms; every section comes out anti-monic. Groups are
/// assigned to sections of matching order in ascending natural frequency.
inline AdditiveModel partial_fractions(const TransferFunction& tf, const StructureSpec& structure) {
    structure.validate();
    const int n = tf.order();
    if (structure.total_order() != n)
        throw std::invalid_argument("structure degrees must sum to the denominator degree");
    if (structure.blocks() == 1) {
        if (tf.num.degree() > structure.pairs[0].second)
            throw std::invalid_argument("numerator degree exceeds the single-block structure");
        return AdditiveModel({tf}, structure);
    }
    for (const auto& [ni, mi] : structure.pairs)
        if (ni > 2)
            throw std::invalid_argument(
                "partial fractions support sections of order 1 and 2 only");

    const auto ps = tf.den.roots();
    for (std::size_t i = 0; i < ps.size(); ++i)
        for (std::size_t j = i + 1; j < ps.size(); ++j)
            if (std::abs(ps[i] - ps[j]) < kTolCluster)
                throw std::invalid_argument("repeated denominator roots are not supported");

    // Direct term of a biproper input goes to the (unique) biproper section.
    double direct = 0.0;
    Polynomial strictly = tf.num;
    int direct_section = -1;
    if (tf.is_biproper()) {
        direct = tf.num.leading() / tf.den.leading();
        strictly = tf.num - direct * tf.den;
        for (int i = 0; i < structure.blocks(); ++i)
            if (structure.pairs[static_cast<std::size_t>(i)].first ==
                structure.pairs[static_cast<std::size_t>(i)].second)
                direct_section = i;
        if (direct_section < 0)
            throw std::invalid_argument(
                "biproper input needs one biproper section in the structure");
    }

    const Polynomial dden = tf.den.derivative();
    std::vector<std::complex<double>> reals;
    std::vector<detail::PoleGroup> pair_groups;
    for (const auto& p : ps) {
        if (p.imag() == 0.0) {
            reals.push_back(p);
        } else if (p.imag() > 0.0) {
            detail::PoleGroup g;
            const std::complex<double> res = strictly.eval(p) / dden.eval(p);
            g.poles = {p, std::conj(p)};
            g.residues = {res, std::conj(res)};
            g.freq_key = std::abs(p);
            pair_groups.push_back(std::move(g));
        }
    }
    std::sort(reals.begin(), reals.end(),
              [](const auto& a, const auto& b) { return std::abs(a) < std::abs(b); });

    int singles_needed = 0, doubles_needed = 0;
    for (const auto& [ni, mi] : structure.pairs) (ni == 1 ? singles_needed : doubles_needed)++;
    const int r_count = static_cast<int>(reals.size());
    if (r_count < singles_needed || (r_count - singles_needed) % 2 != 0 ||
        (r_count - singles_needed) / 2 + static_cast<int>(pair_groups.size()) != doubles_needed)
        throw std::invalid_argument(
            "pole pattern (real/conjugate split) cannot realize the requested structure");

    std::vector<detail::PoleGroup> single_groups;
    for (int i = 0; i < singles_needed; ++i) {
        detail::PoleGroup g;
        const auto p = reals[static_cast<std::size_t>(i)];
        g.poles = {p};
        g.residues = {strictly.eval(p) / dden.eval(p)};
        g.freq_key = std::abs(p);
        single_groups.push_back(std::move(g));
    }
    for (int i = singles_needed; i + 1 < r_count; i += 2) {
        detail::PoleGroup g;
        const auto p1 = reals[static_cast<std::size_t>(i)];
        const auto p2 = reals[static_cast<std::size_t>(i) + 1];
        g.poles = {p1, p2};
        g.residues = {strictly.eval(p1) / dden.eval(p1), strictly.eval(p2) / dden.eval(p2)};
        g.freq_key = std::sqrt(std::abs(p1) * std::abs(p2));
        pair_groups.push_back(std::move(g));
    }
    auto by_freq = [](const detail::PoleGroup& a, const detail::PoleGroup& b) {
        return a.freq_key < b.freq_key;
    };
    std::sort(single_groups.begin(), single_groups.end(), by_freq);
    std::sort(pair_groups.begin(), pair_groups.end(), by_freq);

    std::size_t next_single = 0, next_pair = 0;
    std::vector<TransferFunction> sections;
    sections.reserve(structure.pairs.size());
    for (int i = 0; i < structure.blocks(); ++i) {
        const auto [ni, mi] = structure.pairs[static_cast<std::size_t>(i)];
        const detail::PoleGroup& g =
            (ni == 1) ? single_groups[next_single++] : pair_groups[next_pair++];
        Polynomial raw_num, raw_den;
        detail::raw_section(g, raw_num, raw_den);
        TransferFunction sec = normalize_anti_monic(raw_num, raw_den);
        if (sec.num.degree() > mi) {
            std::vector<double> kept(sec.num.coeffs.begin(), sec.num.coeffs.begin() + mi + 1);
            sec = TransferFunction(Polynomial(std::move(kept)), sec.den);
        }
        if (i == direct_section) sec = TransferFunction(sec.num + direct * sec.den, sec.den);
        sections.push_back(std::move(sec));
    }
    return AdditiveModel(std::move(sections), structure);
}

}  // namespace ctid
