#pragma once

#include "nfdqvi/certificate.hpp"
#include "nfdqvi/problem.hpp"
#include "nfdqvi/quadrature.hpp"
#include "nfdqvi/qvi.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace nfdqvi {

enum class StepPolicy { ContractionOptimal, Rho1, Rho2 };

struct SolverConfig {
    double picard_tol = 1e-10;
    long picard_cap = 500;
    double qvi_tol = 1e-10;
    long qvi_cap = 100000;
    StepPolicy step_policy = StepPolicy::ContractionOptimal;
    double rho_override = 0.0;   // > 0 replaces the policy step
    double gamma_override = 0.0; // > 0 replaces the certified Bielecki exponent
    QuadScheme scheme = QuadScheme::Trapezoid;
    double nonlocal_tol = 1e-10;
    long nonlocal_cap = 500;
    bool allow_uncertified = false;

    void validate() const {
        if (!(picard_tol > 0.0) || !(qvi_tol > 0.0) || !(nonlocal_tol > 0.0))
            throw ConfigError("SolverConfig: tolerances must be positive");
        if (picard_cap < 1 || qvi_cap < 1 || nonlocal_cap < 1)
            throw ConfigError("SolverConfig: caps must be at least 1");
    }

    [[nodiscard]] double max_tolerance() const {
        return std::max({picard_tol, qvi_tol, nonlocal_tol});
    }
};

struct Trajectory {
    TimeGrid grid;
    std::vector<Vec> x_samples;
    std::vector<Vec> u_samples;
    std::vector<double> qvi_residuals;
    double integral_residual = 0.0;
    double nonlocal_residual = 0.0;
    long sweeps = 0;                       // Picard sweeps or marching outer passes
    std::vector<double> sweep_distances;   // Bielecki distance per Picard sweep
};

inline double bielecki_distance(const TimeGrid& grid, const std::vector<Vec>& xa,
                                const std::vector<Vec>& xb, double gamma) {
    if (xa.size() != grid.node_count || xb.size() != grid.node_count)
        throw ShapeError("bielecki_distance: sample count does not match the grid");
    double d = 0.0;
    for (std::size_t k = 0; k < grid.node_count; ++k)
        d = std::max(d, std::exp(-gamma * grid.node(k)) * (xa[k] - xb[k]).norm());
    return d;
}

/// Discrete nonlocal functional psi(x) on the grid. The mean is the trapezoid
/// rule; point combinations read grid nodes exactly.
inline Vec eval_psi(const NonlocalSpec& nl, const TimeGrid& grid,
                    const std::vector<Vec>& x_samples) {
    const auto dim = x_samples.at(0).size();
    if (std::holds_alternative<ZeroNonlocal>(nl.rule)) return Vec::Zero(dim);
    if (const auto* ms = std::get_if<MeanScaled>(&nl.rule)) {
        Vec mean = Vec::Zero(dim);
        const std::size_t n = grid.node_count;
        for (std::size_t k = 0; k < n; ++k) {
            double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
            mean += w * x_samples[k];
        }
        mean *= grid.step() / grid.horizon;
        return ms->a.cwiseProduct(mean);
    }
    const auto& pc = std::get<PointCombination>(nl.rule);
    Vec acc = Vec::Zero(dim);
    for (Eigen::Index i = 0; i < pc.iota.size(); ++i)
        acc += pc.iota(i) * x_samples[grid.node_index(pc.times[static_cast<std::size_t>(i)])];
    return acc;
}

namespace detail {

inline double pick_step(const ConstantCertificate& cert, const SolverConfig& cfg) {
    if (cfg.rho_override > 0.0) return cfg.rho_override;
    switch (cfg.step_policy) {
        case StepPolicy::Rho1: return proof_step_rho1(cert);
        case StepPolicy::Rho2: return proof_step_rho2(cert);
        default: return default_step(cert);
    }
}

inline void require_certified(const ConstantCertificate& cert, const SolverConfig& cfg) {
    if (cfg.allow_uncertified) return;
    if (!cert.all_pass())
        throw CertificationError(
            "solver: instance is not certified (set allow_uncertified to force)");
}

struct IntegrandEval {
    const ProblemInstance& p;
    const std::vector<Vec>* forcing; // optional additive h(s_k), may be null

    [[nodiscard]] Vec operator()(std::size_t k, double s, const Vec& x, const Vec& u) const {
        Vec v = p.dynamics.f.eval(s, x, u) + p.dynamics.g.eval(s, x, u);
        if (forcing != nullptr) v += (*forcing)[k];
        return v;
    }
};

} // namespace detail

/// Residuals of a trajectory against the discrete integral formulation,
/// recomputed from scratch.
struct ResidualReport {
    double integral = 0.0;
    double qvi = 0.0;
    double nonlocal = 0.0;
};

inline ResidualReport residual_check(const ProblemInstance& p, const Trajectory& traj,
                                     const SolverConfig& cfg = {},
                                     const std::vector<Vec>* forcing = nullptr) {
    const std::size_t n = p.grid.node_count;
    if (traj.x_samples.size() != n || traj.u_samples.size() != n)
        throw ShapeError("residual_check: trajectory does not match the instance grid");

    auto weights = build_weights(p.grid, p.q, cfg.scheme);
    detail::IntegrandEval integrand{p, forcing};
    std::vector<Vec> f(n);
    for (std::size_t k = 0; k < n; ++k)
        f[k] = integrand(k, p.grid.node(k), traj.x_samples[k], traj.u_samples[k]);
    auto integral = rl_integral_apply(weights, f);

    Vec psi = eval_psi(p.nonlocal, p.grid, traj.x_samples);
    ResidualReport r;
    for (std::size_t k = 0; k < n; ++k)
        r.integral = std::max(
            r.integral, (traj.x_samples[k] - p.nonlocal.x0 - psi - integral[k]).norm());
    r.nonlocal = (traj.x_samples[0] - p.nonlocal.x0 - psi).norm();

    auto cert = derive_constants(p);
    double rho = detail::pick_step(cert, cfg);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec& u = traj.u_samples[k];
        Vec img = project_constraint(p.constraints, u,
                                     u - rho * p.varmap.eval(p.grid.node(k), traj.x_samples[k], u));
        r.qvi = std::max(r.qvi, (u - img).norm());
    }
    return r;
}

/// Picard iteration on the discrete integral map: the normative solver,
/// mirroring the contraction argument sweep for sweep. Convergence is
/// measured in the Bielecki norm at the certified exponent; the final iterate
/// is additionally required to reproduce itself within the Picard tolerance.
inline Trajectory picard_solve(const ProblemInstance& p, const SolverConfig& cfg = {},
                               const std::vector<Vec>* forcing = nullptr) {
    p.validate();
    cfg.validate();
    if (p.grid.node_count < 3)
        throw ConfigError("picard_solve: need at least 3 grid nodes");
    if (forcing != nullptr && forcing->size() != p.grid.node_count)
        throw ShapeError("picard_solve: forcing sample count does not match the grid");

    auto cert = derive_constants(p);
    detail::require_certified(cert, cfg);
    const double rho = detail::pick_step(cert, cfg);
    const double gamma = cfg.gamma_override > 0.0 ? cfg.gamma_override : std::max(cert.gamma, 0.0);
    const std::size_t n = p.grid.node_count;
    auto weights = build_weights(p.grid, p.q, cfg.scheme);
    detail::IntegrandEval integrand{p, forcing};

    Trajectory traj;
    traj.grid = p.grid;
    traj.x_samples.assign(n, p.nonlocal.x0);
    traj.u_samples.assign(n, p.constraints.center());
    traj.qvi_residuals.assign(n, 0.0);

    std::vector<Vec> f(n);
    double last_dist = std::numeric_limits<double>::infinity();
    for (long sweep = 1; sweep <= cfg.picard_cap; ++sweep) {
        Vec psi = eval_psi(p.nonlocal, p.grid, traj.x_samples);
        Vec warm = traj.u_samples[0];
        for (std::size_t k = 0; k < n; ++k) {
            try {
                auto rep = solve_pqvi(p.varmap, p.constraints, p.grid.node(k), traj.x_samples[k],
                                      warm, rho, cfg.qvi_tol, cfg.qvi_cap);
                traj.u_samples[k] = rep.solution;
                traj.qvi_residuals[k] = rep.residual;
                warm = rep.solution;
            } catch (const NonConvergenceError& e) {
                throw NonConvergenceError("picard_solve: PQVI failed at node " +
                                              std::to_string(k) + ": " + e.what(),
                                          e.last_residual, e.iterations);
            }
            f[k] = integrand(k, p.grid.node(k), traj.x_samples[k], traj.u_samples[k]);
        }
        auto integral = rl_integral_apply(weights, f);
        std::vector<Vec> next(n);
        double sup = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            next[k] = p.nonlocal.x0 + psi + integral[k];
            sup = std::max(sup, (next[k] - traj.x_samples[k]).norm());
        }
        last_dist = bielecki_distance(p.grid, next, traj.x_samples, gamma);
        traj.sweep_distances.push_back(last_dist);
        traj.x_samples = std::move(next);
        traj.sweeps = sweep;

        if (sup <= cfg.picard_tol) {
            // consistency pass: u re-solved at the final x, residuals recomputed
            auto rr = residual_check(p, traj, cfg, forcing);
            bool u_stale = false;
            Vec warm2 = traj.u_samples[0];
            for (std::size_t k = 0; k < n; ++k) {
                auto rep = solve_pqvi(p.varmap, p.constraints, p.grid.node(k), traj.x_samples[k],
                                      warm2, rho, cfg.qvi_tol, cfg.qvi_cap);
                if ((rep.solution - traj.u_samples[k]).norm() > cfg.qvi_tol) u_stale = true;
                traj.u_samples[k] = rep.solution;
                traj.qvi_residuals[k] = rep.residual;
                warm2 = rep.solution;
            }
            if (u_stale) rr = residual_check(p, traj, cfg, forcing);
            if (rr.integral <= cfg.picard_tol && rr.nonlocal <= cfg.picard_tol) {
                traj.integral_residual = rr.integral;
                traj.nonlocal_residual = rr.nonlocal;
                return traj;
            }
        }
    }
    throw NonConvergenceError("picard_solve: sweep cap reached (last Bielecki distance " +
                                  std::to_string(last_dist) + ")",
                              last_dist, cfg.picard_cap);
}

/// Time-marching solver: fractional Adams PECE along the grid with an outer
/// fixed-point loop on the nonlocal value. Solves the same discrete equations
/// as picard_solve; exists as an independent cross-check and for speed.
inline Trajectory march_solve(const ProblemInstance& p, const SolverConfig& cfg = {},
                              const std::vector<Vec>* forcing = nullptr) {
    p.validate();
    cfg.validate();
    if (p.grid.node_count < 3)
        throw ConfigError("march_solve: need at least 3 grid nodes");
    if (forcing != nullptr && forcing->size() != p.grid.node_count)
        throw ShapeError("march_solve: forcing sample count does not match the grid");

    auto cert = derive_constants(p);
    detail::require_certified(cert, cfg);
    const double rho = detail::pick_step(cert, cfg);
    const std::size_t n = p.grid.node_count;
    auto trap = build_weights(p.grid, p.q, QuadScheme::Trapezoid);
    auto rect = build_weights(p.grid, p.q, QuadScheme::Rectangle);
    const auto& corr = cfg.scheme == QuadScheme::Trapezoid ? trap : rect;
    detail::IntegrandEval integrand{p, forcing};

    const double inner_tol = 0.01 * std::min(cfg.picard_tol, cfg.qvi_tol);
    const long inner_cap = 200;

    Trajectory traj;
    traj.grid = p.grid;
    traj.x_samples.assign(n, p.nonlocal.x0);
    traj.u_samples.assign(n, p.constraints.center());
    traj.qvi_residuals.assign(n, 0.0);

    std::vector<Vec> f(n);
    Vec w = Vec::Zero(p.n);
    double w_change = std::numeric_limits<double>::infinity();
    for (long outer = 1; outer <= cfg.nonlocal_cap; ++outer) {
        traj.sweeps = outer;
        Vec x_init = p.nonlocal.x0 + w;
        traj.x_samples[0] = x_init;
        {
            auto rep = solve_pqvi(p.varmap, p.constraints, 0.0, x_init, traj.u_samples[0], rho,
                                  cfg.qvi_tol, cfg.qvi_cap);
            traj.u_samples[0] = rep.solution;
            traj.qvi_residuals[0] = rep.residual;
            f[0] = integrand(0, 0.0, x_init, rep.solution);
        }
        for (std::size_t k = 1; k < n; ++k) {
            const double s = p.grid.node(k);
            Vec base = x_init;
            for (std::size_t j = 0; j < k; ++j) base += corr.w[k][j] * f[j];

            // predictor: rectangle history (no implicit term)
            Vec xk = x_init;
            for (std::size_t j = 0; j < k; ++j) xk += rect.w[k][j] * f[j];

            Vec warm = traj.u_samples[k - 1];
            bool settled = false;
            for (long it = 0; it < inner_cap; ++it) {
                auto rep = solve_pqvi(p.varmap, p.constraints, s, xk, warm, rho, cfg.qvi_tol,
                                      cfg.qvi_cap);
                warm = rep.solution;
                Vec fk = integrand(k, s, xk, rep.solution);
                Vec x_next = base + corr.w[k][k] * fk;
                double change = (x_next - xk).norm();
                xk = std::move(x_next);
                traj.u_samples[k] = rep.solution;
                traj.qvi_residuals[k] = rep.residual;
                f[k] = std::move(fk);
                if (change <= inner_tol) {
                    settled = true;
                    break;
                }
            }
            if (!settled)
                throw NonConvergenceError("march_solve: corrector stalled at node " +
                                              std::to_string(k),
                                          0.0, inner_cap);
            traj.x_samples[k] = xk;
            // refresh the implicit integrand at the accepted state
            auto rep = solve_pqvi(p.varmap, p.constraints, s, xk, traj.u_samples[k], rho,
                                  cfg.qvi_tol, cfg.qvi_cap);
            traj.u_samples[k] = rep.solution;
            traj.qvi_residuals[k] = rep.residual;
            f[k] = integrand(k, s, xk, rep.solution);
        }
        Vec w_new = eval_psi(p.nonlocal, p.grid, traj.x_samples);
        w_change = (w_new - w).norm();
        w = std::move(w_new);
        if (w_change <= cfg.nonlocal_tol) {
            auto rr = residual_check(p, traj, cfg, forcing);
            traj.integral_residual = rr.integral;
            traj.nonlocal_residual = rr.nonlocal;
            return traj;
        }
    }
    throw NonConvergenceError("march_solve: nonlocal outer loop cap reached (last change " +
                                  std::to_string(w_change) + ")",
                              w_change, cfg.nonlocal_cap);
}

} // namespace nfdqvi
