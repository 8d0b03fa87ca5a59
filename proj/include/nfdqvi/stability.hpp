#pragma once

#include "nfdqvi/solver.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace nfdqvi {

enum class PerturbationMode { Uniform, Weighted };
enum class PerturbationShape { Constant, Sinusoid, Random };

/// Admissible perturbation h of the right-hand side: ||h(s_k)|| <= eps
/// (Uniform) or <= eps * phi(s_k) with phi nondecreasing (Weighted).
struct PerturbationSpec {
    PerturbationMode mode = PerturbationMode::Uniform;
    double epsilon = 1e-3;
    std::vector<double> weight; // phi samples on the grid, Weighted mode only
    PerturbationShape shape = PerturbationShape::Constant;
    std::uint64_t seed = 1;

    [[nodiscard]] double bound_at(const TimeGrid& grid, std::size_t k) const {
        if (mode == PerturbationMode::Uniform) return epsilon;
        if (weight.size() != grid.node_count)
            throw ShapeError("PerturbationSpec: weight samples do not match the grid");
        return epsilon * weight[k];
    }

    void validate(const TimeGrid& grid) const {
        if (!(epsilon > 0.0)) throw std::domain_error("PerturbationSpec: epsilon must be positive");
        if (mode == PerturbationMode::Weighted) {
            if (weight.size() != grid.node_count)
                throw ShapeError("PerturbationSpec: weight samples do not match the grid");
            for (std::size_t k = 0; k < weight.size(); ++k) {
                if (weight[k] < 0.0)
                    throw std::domain_error("PerturbationSpec: weight must be nonnegative");
                if (k > 0 && weight[k] < weight[k - 1])
                    throw std::domain_error("PerturbationSpec: weight must be nondecreasing");
            }
        }
    }

    /// Per-node h realization; every node respects the admissibility bound.
    [[nodiscard]] std::vector<Vec> realize(const TimeGrid& grid, Eigen::Index dim) const {
        validate(grid);
        std::vector<Vec> h(grid.node_count);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Vec dir = Vec::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
        for (std::size_t k = 0; k < grid.node_count; ++k) {
            double bound = bound_at(grid, k);
            switch (shape) {
                case PerturbationShape::Constant:
                    h[k] = bound * dir;
                    break;
                case PerturbationShape::Sinusoid:
                    h[k] = bound * std::sin(2.0 * std::numbers::pi * grid.node(k) / grid.horizon) *
                           dir;
                    break;
                case PerturbationShape::Random: {
                    Vec g(dim);
                    for (Eigen::Index i = 0; i < dim; ++i) g(i) = gauss(rng);
                    double nrm = g.norm();
                    h[k] = nrm > 0.0 ? Vec(bound * g / nrm) : Vec(bound * dir);
                    break;
                }
            }
        }
        return h;
    }
};

struct StabilityReport {
    std::vector<double> deviation; // ||z(s_k) - x(s_k)||
    std::vector<double> bound;     // predicted envelope per node
    double max_ratio = 0.0;
    bool verdict = false;
    double a = 0.0, b = 0.0;
    std::uint64_t seed = 0;
};

/// Envelope of the uniform-perturbation stability theorem:
/// a * eps * E_q(b Gamma(q) s^q) per node.
inline std::vector<double> mlhu_bound(const ConstantCertificate& cert, double eps,
                                      const TimeGrid& grid) {
    std::vector<double> out(grid.node_count);
    double bg = cert.b * gamma_fn(cert.q);
    for (std::size_t k = 0; k < grid.node_count; ++k)
        out[k] = cert.a * eps * mittag_leffler(cert.q, bg * std::pow(grid.node(k), cert.q));
    return out;
}

/// Weighted (Rassias) variant: a * eps * phi(s) * E_q(b Gamma(q) s^q).
inline std::vector<double> mlhur_bound(const ConstantCertificate& cert, double eps,
                                       const std::vector<double>& weight, const TimeGrid& grid) {
    if (weight.size() != grid.node_count)
        throw ShapeError("mlhur_bound: weight samples do not match the grid");
    for (std::size_t k = 0; k < weight.size(); ++k) {
        if (weight[k] < 0.0) throw std::domain_error("mlhur_bound: weight must be nonnegative");
        if (k > 0 && weight[k] < weight[k - 1])
            throw std::domain_error("mlhur_bound: weight must be nondecreasing");
    }
    std::vector<double> out(grid.node_count);
    double bg = cert.b * gamma_fn(cert.q);
    for (std::size_t k = 0; k < grid.node_count; ++k)
        out[k] = cert.a * eps * weight[k] * mittag_leffler(cert.q, bg * std::pow(grid.node(k), cert.q));
    return out;
}

/// Solves the perturbed system with the initial value pinned to the nominal's
/// x(0) and the nonlocal operator disabled. A zero perturbation returns the
/// nominal unchanged.
inline Trajectory solve_perturbed(const ProblemInstance& p, const Trajectory& nominal,
                                  const PerturbationSpec& pert, const SolverConfig& cfg = {}) {
    if (nominal.x_samples.size() != p.grid.node_count)
        throw ShapeError("solve_perturbed: nominal does not match the instance grid");
    auto h = pert.realize(p.grid, p.n);
    bool all_zero = true;
    for (const auto& v : h)
        if (v.norm() != 0.0) { all_zero = false; break; }
    if (all_zero) return nominal;

    ProblemInstance pinned = p;
    pinned.nonlocal.rule = ZeroNonlocal{};
    pinned.nonlocal.x0 = nominal.x_samples[0];
    return picard_solve(pinned, cfg, &h);
}

inline StabilityReport run_stability_experiment(const ProblemInstance& p, const SolverConfig& cfg,
                                                const PerturbationSpec& pert,
                                                double ratio_allowance = 0.0) {
    auto cert = derive_constants(p);
    auto nominal = picard_solve(p, cfg);
    auto perturbed = solve_perturbed(p, nominal, pert, cfg);

    StabilityReport rep;
    rep.a = cert.a;
    rep.b = cert.b;
    rep.seed = pert.seed;
    rep.bound = pert.mode == PerturbationMode::Uniform
                    ? mlhu_bound(cert, pert.epsilon, p.grid)
                    : mlhur_bound(cert, pert.epsilon, pert.weight, p.grid);
    rep.deviation.resize(p.grid.node_count);
    for (std::size_t k = 0; k < p.grid.node_count; ++k) {
        rep.deviation[k] = (perturbed.x_samples[k] - nominal.x_samples[k]).norm();
        double ratio = rep.bound[k] > 0.0 ? rep.deviation[k] / rep.bound[k]
                                          : (rep.deviation[k] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
    rep.verdict = rep.max_ratio <= 1.0 + 1e-6 + ratio_allowance;
    return rep;
}

struct GronwallResult {
    bool ok = false;
    double max_ratio = 0.0; // z / (w * E_q envelope), maximized over nodes
};

/// Equality-case construction for the fractional Gronwall lemma: solves
/// z = w + k * integral of (s - t)^{q-1} z against the left-endpoint rule
/// (which never overshoots the continuous solution for nondecreasing z) and
/// checks z against the w * E_q(k Gamma(q) s^q) envelope.
inline GronwallResult gronwall_check(double q, double k_coef, const std::vector<double>& w,
                                     const TimeGrid& grid, double rel_tol = 1e-6) {
    if (!(q > 0.0) || q > 1.0) throw std::domain_error("gronwall_check: q must be in (0,1]");
    if (k_coef < 0.0) throw std::domain_error("gronwall_check: k must be nonnegative");
    if (w.size() != grid.node_count)
        throw ShapeError("gronwall_check: w samples do not match the grid");
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] < 0.0) throw std::domain_error("gronwall_check: w must be nonnegative");
        if (i > 0 && w[i] < w[i - 1])
            throw std::domain_error("gronwall_check: w must be nondecreasing");
    }

    auto rect = build_weights(grid, q, QuadScheme::Rectangle);
    const double kg = k_coef * gamma_fn(q);
    std::vector<double> z(grid.node_count);
    for (std::size_t i = 0; i < grid.node_count; ++i) {
        double conv = 0.0;
        for (std::size_t j = 0; j < i; ++j) conv += rect.w[i][j] * z[j];
        z[i] = w[i] + kg * conv;
        if (!std::isfinite(z[i]))
            throw NonConvergenceError("gronwall_check: discrete fixed point diverged", z[i],
                                      static_cast<long>(i));
    }

    GronwallResult res;
    for (std::size_t i = 0; i < grid.node_count; ++i) {
        double env = w[i] * mittag_leffler(q, kg * std::pow(grid.node(i), q));
        double ratio = env > 0.0 ? z[i] / env : (z[i] > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
        res.max_ratio = std::max(res.max_ratio, ratio);
    }
    res.ok = res.max_ratio <= 1.0 + rel_tol;
    return res;
}

} // namespace nfdqvi
