#pragma once

#include "nfdqvi/certificate.hpp"
#include "nfdqvi/problem.hpp"

#include <cmath>
#include <cstddef>

namespace nfdqvi {

struct QviSolveReport {
    Vec solution;
    long iterations = 0;
    double residual = 0.0; // fixed-point residual at the returned iterate
    double step = 0.0;
    bool converged = false;
};

inline Vec project_box(const Vec& lo, const Vec& hi, const Vec& point) {
    if (lo.size() != hi.size() || lo.size() != point.size())
        throw ShapeError("project_box: dimension mismatch");
    if (((hi - lo).array() < 0.0).any())
        throw std::domain_error("project_box: lo exceeds hi");
    return point.cwiseMax(lo).cwiseMin(hi);
}

/// Projection onto phi(u) + [base_lo, base_hi]: translate, clamp, translate back.
inline Vec project_moving_set(const MovingBox& spec, const Vec& u, const Vec& point) {
    Vec t = spec.phi(u);
    return t + project_box(spec.base_lo, spec.base_hi, point - t);
}

/// Projection onto K(u) for either constraint variant.
inline Vec project_constraint(const ConstraintSpec& constraints, const Vec& u, const Vec& point) {
    if (const auto* fb = std::get_if<FixedBox>(&constraints.set))
        return project_box(fb->lo, fb->hi, point);
    return project_moving_set(std::get<MovingBox>(constraints.set), u, point);
}

/// Contraction-optimal step eta_G / l_G^2 for strongly monotone Lipschitz maps.
inline double default_step(const ConstantCertificate& cert) {
    if (!(cert.eta_G > 0.0) || !(cert.l_G > 0.0))
        throw std::domain_error("default_step: degenerate constants");
    return cert.eta_G / (cert.l_G * cert.l_G);
}

/// The two proof step sizes, exposed for experiments.
inline double proof_step_rho1(const ConstantCertificate& cert) {
    if (!(cert.eta_G > 0.0) || !(cert.l_G > 0.0))
        throw std::domain_error("proof_step_rho1: degenerate constants");
    double beta1 = std::sqrt(cert.l_G * cert.l_G + cert.eta_G * cert.eta_G) /
                   (cert.l_G * cert.eta_G);
    return beta1 + 1.0 / cert.eta_G;
}

inline double proof_step_rho2(const ConstantCertificate& cert) {
    if (!(cert.eta_G > 0.0) || !(cert.l_G > 0.0))
        throw std::domain_error("proof_step_rho2: degenerate constants");
    double beta2 = std::sqrt(cert.l_G * cert.l_G + 0.5 * cert.eta_G * cert.eta_G) /
                   (cert.l_G * cert.eta_G);
    return beta2 + 1.0 / cert.eta_G;
}

/// Projected fixed-point iteration u <- P_{K(u)}[u - rho G(s, x, u)] for the
/// time-frozen PQVI at (s, x). Converged means the fixed-point residual at the
/// returned iterate is within tol.
inline QviSolveReport solve_pqvi(const VariationalMapSpec& varmap,
                                 const ConstraintSpec& constraints, double s, const Vec& x,
                                 const Vec& u_init, double rho, double tol = 1e-10,
                                 long max_iter = 100000) {
    if (!(tol > 0.0) || max_iter < 1 || !(rho > 0.0))
        throw std::domain_error("solve_pqvi: tolerance, cap and step must be positive");

    Vec u = u_init;
    auto fp_image = [&](const Vec& w) {
        return project_constraint(constraints, w, w - rho * varmap.eval(s, x, w));
    };
    for (long it = 1; it <= max_iter; ++it) {
        Vec next = fp_image(u);
        double change = (next - u).norm();
        u = std::move(next);
        if (change <= tol) {
            double residual = (u - fp_image(u)).norm();
            if (residual <= tol) return {u, it, residual, rho, true};
        }
    }
    double residual = (u - fp_image(u)).norm();
    throw NonConvergenceError("solve_pqvi: iteration cap reached (residual " +
                                  std::to_string(residual) + ")",
                              residual, max_iter);
}

struct SensitivityResult {
    double measured_ratio;
    double bound; // sqrt(kappa / (1 - L))
};

/// Solves the PQVI at (s, x1) and (s, x2) and compares the solution spread
/// against the certified sensitivity bound.
inline SensitivityResult sensitivity_check(const VariationalMapSpec& varmap,
                                           const ConstraintSpec& constraints,
                                           const ConstantCertificate& cert, double s,
                                           const Vec& x1, const Vec& x2, double tol = 1e-10,
                                           long max_iter = 100000) {
    if (!cert.cond_contraction)
        throw std::domain_error("sensitivity_check: contraction condition not certified");
    Vec u0 = constraints.center();
    double rho = default_step(cert);
    auto r1 = solve_pqvi(varmap, constraints, s, x1, u0, rho, tol, max_iter);
    auto r2 = solve_pqvi(varmap, constraints, s, x2, u0, rho, tol, max_iter);
    double dx = (x2 - x1).norm();
    double ratio = dx > 0.0 ? (r2.solution - r1.solution).norm() / dx : 0.0;
    return {ratio, cert.sensitivity};
}

/// Quasi-complementarity verdict for cone-translated sets K(u) = phi(u) + R^m_+:
/// G(s,x,u) must lie in the dual cone and be orthogonal to u - phi(u).
inline bool check_complementarity(const VariationalMapSpec& varmap,
                                  const ConstraintSpec& constraints, double s, const Vec& x,
                                  const Vec& u, double tol) {
    const auto* mb = std::get_if<MovingBox>(&constraints.set);
    if (mb == nullptr || (mb->base_lo.array() != 0.0).any() ||
        !(mb->base_hi.array() == std::numeric_limits<double>::infinity()).all())
        throw std::domain_error("check_complementarity: base set must be the nonnegative orthant");

    Vec g = varmap.eval(s, x, u);
    if ((g.array() < -tol).any()) return false;
    double product = g.dot(u - mb->phi(u));
    return std::abs(product) <= tol;
}

} // namespace nfdqvi
