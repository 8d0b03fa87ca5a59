#pragma once

#include "nfdqvi/problem.hpp"
#include "nfdqvi/special.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace nfdqvi {

/// Thrown when an instance cannot be certified (not a numerical failure).
class CertificationError : public std::runtime_error {
public:
    CertificationError(const std::string& what, double achieved = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(what), achieved(achieved) {}
    double achieved;
};

/// All constants of the contraction/stability machinery, derived from the
/// affine problem data, together with the condition verdicts.
struct ConstantCertificate {
    double q = 1.0; // fractional order, echoed from the instance
    double l_f = 0, l_g = 0, l_G = 0, eta_G = 0, l_K = 0;
    double kl1_lhs = 0;     // left side of the uniqueness condition
    double L = 0;           // contraction constant of the moving-set coupling
    double kappa = 0;
    double sensitivity = 0; // sqrt(kappa / (1 - L))
    double xi = 0;          // l_g (1 + sensitivity)
    double gamma = 0;       // selected Bielecki exponent
    double l_psi = 0;       // nonlocal Lipschitz constant at gamma
    double lambda = 0;      // Picard contraction factor at gamma
    double a = 0, b = 0;    // Mittag-Leffler stability bound constants

    bool h1 = false, h2 = false, h3 = false, h4 = false, h5 = false;
    bool cond_uniqueness = false;  // kl1_lhs < eta_G^2
    bool cond_contraction = false; // L < 1
    bool lambda_feasible = false;  // lambda < 1 at the selected gamma

    [[nodiscard]] bool all_pass() const {
        return h1 && h2 && h3 && h4 && h5 && cond_uniqueness && cond_contraction &&
               lambda_feasible;
    }
};

namespace detail {

inline double nonlocal_lipschitz(const NonlocalSpec& nl, double T, double gamma) {
    if (std::holds_alternative<ZeroNonlocal>(nl.rule)) return 0.0;
    if (const auto* ms = std::get_if<MeanScaled>(&nl.rule)) {
        double amax = ms->a.cwiseAbs().maxCoeff();
        return amax * std::expm1(gamma * T) / (gamma * T);
    }
    const auto& pc = std::get<PointCombination>(nl.rule);
    return pc.iota.cwiseAbs().sum() * std::exp(gamma * T);
}

} // namespace detail

struct GammaSearchResult {
    double gamma;
    double l_psi;
    double lambda;
};

/// Picks gamma > 0 with lambda(gamma) = l_psi(gamma) + (l_f + xi)/gamma^q < 1,
/// maximizing the margin 1 - lambda over the admissible window. Throws
/// CertificationError (carrying the best achieved lambda) if none exists.
inline GammaSearchResult feasible_gamma(const ProblemInstance& p, double lf_plus_xi) {
    const double T = p.grid.horizon;
    const double q = p.q;
    auto lambda_at = [&](double g) {
        return detail::nonlocal_lipschitz(p.nonlocal, T, g) + lf_plus_xi / std::pow(g, q);
    };

    double hi;
    if (std::holds_alternative<ZeroNonlocal>(p.nonlocal.rule)) {
        // no nonlocal term: lambda is decreasing in gamma, so fix lambda = 1/4
        double g = lf_plus_xi > 0.0 ? std::pow(4.0 * lf_plus_xi, 1.0 / q) : 1.0;
        return {g, 0.0, lambda_at(g)};
    }
    if (const auto* ms = std::get_if<MeanScaled>(&p.nonlocal.rule)) {
        hi = std::log(1.0 / ms->a.cwiseAbs().maxCoeff()) / T;
    } else {
        const auto& pc = std::get<PointCombination>(p.nonlocal.rule);
        hi = std::log(1.0 / pc.iota.cwiseAbs().sum()) / T;
        hi *= 1.0 - 1e-9; // open window
    }

    // coarse log-spaced scan, then ternary refinement around the best sample
    const int samples = 512;
    const double lo = hi * 1e-6;
    double best_g = hi, best_l = lambda_at(hi);
    for (int i = 0; i < samples; ++i) {
        double g = lo * std::pow(hi / lo, static_cast<double>(i) / (samples - 1));
        double l = lambda_at(g);
        if (l < best_l) {
            best_l = l;
            best_g = g;
        }
    }
    double a = std::max(lo, best_g / 1.5), b = std::min(hi, best_g * 1.5);
    while (b - a > 1e-6 * std::max(1.0, b)) {
        double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        if (lambda_at(m1) <= lambda_at(m2)) b = m2; else a = m1;
    }
    double g = 0.5 * (a + b);
    if (lambda_at(g) < best_l) { best_g = g; best_l = lambda_at(g); }

    if (!(best_l < 1.0))
        throw CertificationError("feasible_gamma: no gamma with lambda < 1 in the window "
                                 "(best lambda = " + std::to_string(best_l) + ")",
                                 best_l);
    return {best_g, detail::nonlocal_lipschitz(p.nonlocal, T, best_g), best_l};
}

namespace detail {

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index dim, double scale = 2.0) {
    std::normal_distribution<double> d(0.0, scale);
    Vec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = d(rng);
    return v;
}

inline Vec clamp_box(const Vec& lo, const Vec& hi, const Vec& p) {
    return p.cwiseMax(lo).cwiseMin(hi);
}

/// Randomized difference-quotient audit: samples must never exceed the
/// declared constant by more than the stated margin.
template <typename Fn>
bool lipschitz_audit(std::mt19937_64& rng, Fn&& quotient_minus_bound, int pairs = 1000,
                     double margin = 1e-8) {
    for (int i = 0; i < pairs; ++i)
        if (quotient_minus_bound(rng) > margin) return false;
    return true;
}

} // namespace detail

struct HypothesisVerdicts {
    bool h1 = false, h2 = false, h3 = false, h4 = false, h5 = false;
};

/// Structural + sampled verification of (H1)-(H5).
inline HypothesisVerdicts check_hypotheses(const ProblemInstance& p, std::uint64_t seed = 20240101) {
    p.validate();
    std::mt19937_64 rng(seed);
    HypothesisVerdicts v;

    const double l_G = p.varmap.lipschitz();
    const double eta = p.varmap.eta();
    v.h1 = eta > 0.0 &&
           detail::lipschitz_audit(rng, [&](std::mt19937_64& r) {
               double s1 = std::uniform_real_distribution<double>(0.0, p.grid.horizon)(r);
               double s2 = std::uniform_real_distribution<double>(0.0, p.grid.horizon)(r);
               Vec x1 = detail::random_vec(r, p.n), x2 = detail::random_vec(r, p.n);
               Vec u1 = detail::random_vec(r, p.m), u2 = detail::random_vec(r, p.m);
               double num = (p.varmap.eval(s2, x2, u2) - p.varmap.eval(s1, x1, u1)).norm();
               double den = std::abs(s2 - s1) + (x2 - x1).norm() + (u2 - u1).norm();
               return num - l_G * den;
           });

    if (const auto* mb = std::get_if<MovingBox>(&p.constraints.set)) {
        const double l_K = p.constraints.lipschitz_k();
        v.h2 = detail::lipschitz_audit(rng, [&](std::mt19937_64& r) {
            Vec u1 = detail::random_vec(r, p.m), u2 = detail::random_vec(r, p.m);
            Vec w = detail::random_vec(r, p.m, 4.0);
            Vec p1 = mb->phi(u1) + detail::clamp_box(mb->base_lo, mb->base_hi, w - mb->phi(u1));
            Vec p2 = mb->phi(u2) + detail::clamp_box(mb->base_lo, mb->base_hi, w - mb->phi(u2));
            return (p2 - p1).norm() - l_K * (u2 - u1).norm();
        });
    } else {
        v.h2 = true; // fixed set: l_K = 0 trivially
    }

    const double l_g = std::max(p.dynamics.g.lipschitz_x(), p.dynamics.g.lipschitz_u());
    v.h3 = detail::lipschitz_audit(rng, [&](std::mt19937_64& r) {
        double s = std::uniform_real_distribution<double>(0.0, p.grid.horizon)(r);
        Vec x1 = detail::random_vec(r, p.n), x2 = detail::random_vec(r, p.n);
        Vec u1 = detail::random_vec(r, p.m), u2 = detail::random_vec(r, p.m);
        double num = (p.dynamics.g.eval(s, x2, u2) - p.dynamics.g.eval(s, x1, u1)).norm();
        return num - l_g * ((x2 - x1).norm() + (u2 - u1).norm());
    });

    const double l_f = p.dynamics.f.lipschitz_x();
    v.h4 = detail::lipschitz_audit(rng, [&](std::mt19937_64& r) {
        double s = std::uniform_real_distribution<double>(0.0, p.grid.horizon)(r);
        Vec x1 = detail::random_vec(r, p.n), x2 = detail::random_vec(r, p.n);
        Vec dummy;
        double num = (p.dynamics.f.eval(s, x2, dummy) - p.dynamics.f.eval(s, x1, dummy)).norm();
        return num - l_f * (x2 - x1).norm();
    });

    // (H5): coefficient constraints plus l_psi < 1 at some gamma
    v.h5 = false;
    if (std::holds_alternative<ZeroNonlocal>(p.nonlocal.rule)) {
        v.h5 = true;
    } else {
        bool coeffs_ok = true;
        try {
            p.nonlocal.validate(p.n, p.grid.horizon);
        } catch (const ConfigError&) {
            coeffs_ok = false;
        }
        if (coeffs_ok) {
            // any gamma in the admissible window gives l_psi < 1
            double hi = 0.0;
            if (const auto* ms = std::get_if<MeanScaled>(&p.nonlocal.rule))
                hi = std::log(1.0 / ms->a.cwiseAbs().maxCoeff()) / p.grid.horizon;
            else
                hi = std::log(1.0 / std::get<PointCombination>(p.nonlocal.rule).iota.cwiseAbs().sum()) /
                     p.grid.horizon * 0.5;
            v.h5 = detail::nonlocal_lipschitz(p.nonlocal, p.grid.horizon, hi) < 1.0;
        }
    }
    return v;
}

/// Derives every certificate constant from the instance data. Condition
/// failures are verdicts, not exceptions; a non-monotone variational map is
/// an exception because nothing downstream is meaningful without eta_G > 0.
inline ConstantCertificate derive_constants(const ProblemInstance& p) {
    p.validate();
    ConstantCertificate c;
    c.q = p.q;
    c.l_f = p.dynamics.f.lipschitz_x();
    c.l_g = std::max(p.dynamics.g.lipschitz_x(), p.dynamics.g.lipschitz_u());
    c.l_G = p.varmap.lipschitz();
    c.eta_G = p.varmap.eta();
    c.l_K = p.constraints.lipschitz_k();
    if (!(c.eta_G > 0.0))
        throw CertificationError("derive_constants: variational map is not strongly monotone "
                                 "(eta_G <= 0)", c.eta_G);

    const double lG2 = c.l_G * c.l_G, eta2 = c.eta_G * c.eta_G, lK2 = c.l_K * c.l_K;
    c.kl1_lhs = 2.0 * lK2 * (c.l_G * std::sqrt(lG2 + eta2) + lG2 + eta2);
    c.cond_uniqueness = c.kl1_lhs < eta2;
    c.L = 2.0 * lK2 / eta2 * (c.l_G * std::sqrt(4.0 * lG2 + 2.0 * eta2) + 2.0 * lG2 + eta2);
    c.cond_contraction = c.L < 1.0;

    const double root = std::sqrt(lG2 + 0.5 * eta2);
    c.kappa = 2.0 * c.l_G * (root + c.l_G) * (root + c.l_G) / (eta2 * root);

    if (c.cond_contraction) {
        c.sensitivity = std::sqrt(c.kappa / (1.0 - c.L));
        c.xi = c.l_g * (1.0 + c.sensitivity);
    } else {
        c.sensitivity = std::numeric_limits<double>::infinity();
        c.xi = std::numeric_limits<double>::infinity();
    }

    c.a = std::pow(p.grid.horizon, p.q) / gamma_fn(p.q + 1.0);
    c.b = (c.l_f + c.xi) / gamma_fn(p.q);

    auto hv = check_hypotheses(p);
    c.h1 = hv.h1; c.h2 = hv.h2; c.h3 = hv.h3; c.h4 = hv.h4; c.h5 = hv.h5;

    if (c.cond_contraction) {
        try {
            auto gs = feasible_gamma(p, c.l_f + c.xi);
            c.gamma = gs.gamma;
            c.l_psi = gs.l_psi;
            c.lambda = gs.lambda;
            c.lambda_feasible = c.lambda < 1.0;
        } catch (const CertificationError& e) {
            c.lambda = e.achieved;
            c.lambda_feasible = false;
        }
    }
    return c;
}

} // namespace nfdqvi
