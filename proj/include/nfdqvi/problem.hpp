#pragma once

#include "nfdqvi/core.hpp"
#include "nfdqvi/grid.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace nfdqvi {

/// Affine function of (s, x, u). Blocks with zero columns mean the map does
/// not depend on that argument; the Lipschitz constant w.r.t. each argument
/// is the induced 2-norm of the corresponding block.
struct AffineMap {
    Mat x_block; // out_dim x n, may have 0 columns
    Mat u_block; // out_dim x m, may have 0 columns
    Vec s_coeff; // out_dim, coefficient of the scalar time argument
    Vec offset;  // out_dim

    [[nodiscard]] Eigen::Index out_dim() const { return offset.size(); }

    [[nodiscard]] Vec eval(double s, const Vec& x, const Vec& u) const {
        Vec v = offset;
        if (s_coeff.size() > 0) v += s * s_coeff;
        if (x_block.cols() > 0) v += x_block * x;
        if (u_block.cols() > 0) v += u_block * u;
        return v;
    }

    [[nodiscard]] double lipschitz_x() const { return spectral_norm(x_block); }
    [[nodiscard]] double lipschitz_u() const { return spectral_norm(u_block); }
    [[nodiscard]] double lipschitz_s() const { return s_coeff.size() ? s_coeff.norm() : 0.0; }

    void validate(Eigen::Index n, Eigen::Index m, const std::string& name) const {
        auto d = out_dim();
        if (x_block.cols() > 0 && (x_block.rows() != d || x_block.cols() != n))
            throw ConfigError(name + ": x-block shape mismatch");
        if (u_block.cols() > 0 && (u_block.rows() != d || u_block.cols() != m))
            throw ConfigError(name + ": u-block shape mismatch");
        if (s_coeff.size() > 0 && s_coeff.size() != d)
            throw ConfigError(name + ": s-coefficient shape mismatch");
    }

    static AffineMap zero(Eigen::Index out) {
        AffineMap a;
        a.offset = Vec::Zero(out);
        return a;
    }
};

struct DynamicsSpec {
    AffineMap f; // (s, x) -> R^n
    AffineMap g; // (s, x, u) -> R^n
};

/// G(s, x, u) = A u + B x + c0 + c1 s.
struct VariationalMapSpec {
    Mat A;  // m x m
    Mat B;  // m x n, may have 0 columns
    Vec c0; // m
    Vec c1; // m, may be empty

    [[nodiscard]] Vec eval(double s, const Vec& x, const Vec& u) const {
        Vec v = A * u + c0;
        if (B.cols() > 0) v += B * x;
        if (c1.size() > 0) v += s * c1;
        return v;
    }

    [[nodiscard]] double eta() const { return min_symmetric_eigenvalue(A); }
    [[nodiscard]] double lipschitz() const {
        double l = spectral_norm(A);
        l = std::max(l, spectral_norm(B));
        if (c1.size() > 0) l = std::max(l, c1.norm());
        return l;
    }
};

struct FixedBox {
    Vec lo, hi;
};

/// Constraint set phi(u) + [base_lo, base_hi], with phi affine and the j-th
/// component of phi independent of u_j (zero diagonal).
struct MovingBox {
    Mat phi_matrix;
    Vec phi_offset;
    Vec base_lo, base_hi;

    [[nodiscard]] Vec phi(const Vec& u) const { return phi_matrix * u + phi_offset; }
};

struct ConstraintSpec {
    std::variant<FixedBox, MovingBox> set;

    [[nodiscard]] bool is_moving() const { return std::holds_alternative<MovingBox>(set); }

    [[nodiscard]] double lipschitz_k() const {
        if (const auto* mb = std::get_if<MovingBox>(&set)) return spectral_norm(mb->phi_matrix);
        return 0.0;
    }

    [[nodiscard]] Vec center() const {
        const Vec* lo;
        const Vec* hi;
        if (const auto* fb = std::get_if<FixedBox>(&set)) {
            lo = &fb->lo;
            hi = &fb->hi;
        } else {
            const auto& mb = std::get<MovingBox>(set);
            lo = &mb.base_lo;
            hi = &mb.base_hi;
        }
        Vec c(lo->size());
        for (Eigen::Index j = 0; j < c.size(); ++j) {
            // unbounded coordinates (cone bases) start one unit above the floor
            c(j) = std::isfinite((*hi)(j)) ? 0.5 * ((*lo)(j) + (*hi)(j)) : (*lo)(j) + 1.0;
        }
        return c;
    }

    void validate(Eigen::Index m) const {
        if (const auto* fb = std::get_if<FixedBox>(&set)) {
            if (fb->lo.size() != m || fb->hi.size() != m)
                throw ConfigError("ConstraintSpec: box dimension mismatch");
            if (((fb->hi - fb->lo).array() < 0.0).any())
                throw ConfigError("ConstraintSpec: lo must not exceed hi");
        } else {
            const auto& mb = std::get<MovingBox>(set);
            if (mb.base_lo.size() != m || mb.base_hi.size() != m ||
                mb.phi_matrix.rows() != m || mb.phi_matrix.cols() != m ||
                mb.phi_offset.size() != m)
                throw ConfigError("ConstraintSpec: moving-box dimension mismatch");
            if (((mb.base_hi - mb.base_lo).array() < 0.0).any())
                throw ConfigError("ConstraintSpec: base box lo must not exceed hi");
            for (Eigen::Index j = 0; j < m; ++j)
                if (mb.phi_matrix(j, j) != 0.0)
                    throw ConfigError("ConstraintSpec: phi must not depend on its own coordinate "
                                      "(nonzero diagonal at " + std::to_string(j) + ")");
        }
    }
};

struct ZeroNonlocal {};

/// psi_j(x) = a_j * (1/T) * integral of x_j over [0, T].
struct MeanScaled {
    Vec a;
};

/// psi(x) = sum_i iota_i * x(t_i) with interior anchor times.
struct PointCombination {
    Vec iota;
    std::vector<double> times;
};

struct NonlocalSpec {
    std::variant<ZeroNonlocal, MeanScaled, PointCombination> rule;
    Vec x0;

    void validate(Eigen::Index n, double horizon) const {
        if (x0.size() != n) throw ConfigError("NonlocalSpec: x0 dimension mismatch");
        if (const auto* ms = std::get_if<MeanScaled>(&rule)) {
            if (ms->a.size() != n) throw ConfigError("NonlocalSpec: coefficient count mismatch");
            double amax = ms->a.cwiseAbs().maxCoeff();
            if (!(amax > 0.0 && amax < 1.0))
                throw ConfigError("NonlocalSpec: mean-scaled requires 0 < max|a_j| < 1");
        } else if (const auto* pc = std::get_if<PointCombination>(&rule)) {
            if (pc->iota.size() != static_cast<Eigen::Index>(pc->times.size()))
                throw ConfigError("NonlocalSpec: anchor count mismatch");
            double s = pc->iota.cwiseAbs().sum();
            if (!(s > 0.0 && s < 1.0))
                throw ConfigError("NonlocalSpec: point combination requires 0 < sum|iota_i| < 1");
            for (double t : pc->times)
                if (!(t > 0.0 && t < horizon))
                    throw ConfigError("NonlocalSpec: anchor times must lie in (0, T)");
        }
    }
};

struct ProblemInstance {
    double q = 1.0;
    TimeGrid grid;
    DynamicsSpec dynamics;
    VariationalMapSpec varmap;
    ConstraintSpec constraints;
    NonlocalSpec nonlocal;
    Eigen::Index n = 0; // state dimension
    Eigen::Index m = 0; // control dimension

    void validate() const {
        if (!(q > 0.0) || q > 1.0) throw ConfigError("ProblemInstance: q must be in (0,1]");
        if (n < 1 || m < 1) throw ConfigError("ProblemInstance: dimensions must be positive");
        dynamics.f.validate(n, 0, "dynamics.f");
        if (dynamics.f.out_dim() != n) throw ConfigError("dynamics.f: output dimension != n");
        if (dynamics.f.u_block.cols() > 0) throw ConfigError("dynamics.f: must not depend on u");
        dynamics.g.validate(n, m, "dynamics.g");
        if (dynamics.g.out_dim() != n) throw ConfigError("dynamics.g: output dimension != n");
        if (varmap.A.rows() != m || varmap.A.cols() != m || varmap.c0.size() != m)
            throw ConfigError("varmap: A/c0 dimension mismatch");
        if (varmap.B.cols() > 0 && (varmap.B.rows() != m || varmap.B.cols() != n))
            throw ConfigError("varmap: B dimension mismatch");
        if (varmap.c1.size() > 0 && varmap.c1.size() != m)
            throw ConfigError("varmap: c1 dimension mismatch");
        constraints.validate(m);
        nonlocal.validate(n, grid.horizon);
    }
};

} // namespace nfdqvi
