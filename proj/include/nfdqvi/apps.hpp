#pragma once

#include "nfdqvi/certificate.hpp"
#include "nfdqvi/problem.hpp"
#include "nfdqvi/solver.hpp"

#include <cmath>
#include <vector>

namespace nfdqvi {

/// Multi-agent optimization problem: n agents with quadratic costs
/// Theta_j = 1/2 alpha_j u_j^2 + u_j (beta_j x_j + sum_{i != j} coupling_ji u_i),
/// moving strategy boxes K_j(u_{-j}) = phi_j(u_{-j}) + [box_lo_j, box_hi_j],
/// per-agent scalar dynamics, and mean-scaled nonlocal initial data.
struct MaopSpec {
    Eigen::Index agents = 1;
    double q = 1.0;
    double horizon = 1.0;

    Vec alpha;     // own-strategy curvature, > 0
    Vec beta;      // own-state coupling in the cost gradient
    Mat coupling;  // gamma_{ji} off-diagonal, diagonal ignored
    Mat b_override; // optional full x-block of G (empty = diag(beta))

    Mat phi_matrix; // zero diagonal
    Vec phi_offset;
    Vec box_lo, box_hi;

    // diagonal per-agent dynamics: f_j = fx_j x_j + fs_j s + fc_j,
    // g_j = gx_j x_j + gu_j u_j + gs_j s + gc_j
    Vec f_x, f_s, f_c;
    Vec g_x, g_u, g_s, g_c;

    Vec a_coeff; // nonlocal mean coefficients
    Vec x0;

    void validate() const {
        if (agents < 1) throw ConfigError("MaopSpec: need at least one agent");
        const auto n = agents;
        auto check = [n](const Vec& v, const char* name) {
            if (v.size() != n) throw ConfigError(std::string("MaopSpec: ") + name + " size mismatch");
        };
        check(alpha, "alpha"); check(beta, "beta");
        check(box_lo, "box_lo"); check(box_hi, "box_hi");
        check(f_x, "f_x"); check(f_s, "f_s"); check(f_c, "f_c");
        check(g_x, "g_x"); check(g_u, "g_u"); check(g_s, "g_s"); check(g_c, "g_c");
        check(a_coeff, "a_coeff"); check(x0, "x0");
        check(phi_offset, "phi_offset");
        if (coupling.rows() != n || coupling.cols() != n)
            throw ConfigError("MaopSpec: coupling matrix shape mismatch");
        if (phi_matrix.rows() != n || phi_matrix.cols() != n)
            throw ConfigError("MaopSpec: phi matrix shape mismatch");
        if ((alpha.array() <= 0.0).any())
            throw ConfigError("MaopSpec: alpha must be positive (convexity in own strategy)");
        double amax = a_coeff.cwiseAbs().maxCoeff();
        if (!(amax > 0.0 && amax < 1.0))
            throw ConfigError("MaopSpec: need 0 < max|a_j| < 1");
    }

    /// Own-strategy cost gradient of agent j at (x, u), straight from Theta_j.
    [[nodiscard]] double cost_gradient(Eigen::Index j, const Vec& x, const Vec& u) const {
        double g = alpha(j) * u(j) + beta(j) * x(j);
        for (Eigen::Index i = 0; i < agents; ++i)
            if (i != j) g += coupling(j, i) * u(i);
        return g;
    }
};

inline ProblemInstance maop_to_nfdqvi(const MaopSpec& spec, std::size_t nodes = 257) {
    spec.validate();
    const auto n = spec.agents;

    ProblemInstance p;
    p.q = spec.q;
    p.grid = TimeGrid(spec.horizon, nodes);
    p.n = n;
    p.m = n;

    // stacked own-strategy gradients: A has alpha on the diagonal,
    // the couplings off it
    Mat A = spec.coupling;
    A.diagonal() = spec.alpha;
    p.varmap.A = A;
    p.varmap.B = spec.b_override.size() > 0 ? spec.b_override : Mat(spec.beta.asDiagonal());
    p.varmap.c0 = Vec::Zero(n);
    if (min_symmetric_eigenvalue(A) <= 0.0)
        throw ConfigError("maop_to_nfdqvi: assembled G is not strongly monotone");

    p.dynamics.f.x_block = spec.f_x.asDiagonal();
    p.dynamics.f.s_coeff = spec.f_s;
    p.dynamics.f.offset = spec.f_c;
    p.dynamics.g.x_block = spec.g_x.asDiagonal();
    p.dynamics.g.u_block = spec.g_u.asDiagonal();
    p.dynamics.g.s_coeff = spec.g_s;
    p.dynamics.g.offset = spec.g_c;

    p.constraints.set = MovingBox{spec.phi_matrix, spec.phi_offset, spec.box_lo, spec.box_hi};
    p.nonlocal.rule = MeanScaled{spec.a_coeff};
    p.nonlocal.x0 = spec.x0;
    p.validate();
    return p;
}

/// First-order Nash condition at every node and agent: the own-cost gradient
/// paired with both endpoints of K_j(u_{-j}) must be >= -tol. By convexity of
/// Theta_j in u_j this certifies per-agent optimality.
inline bool check_nash(const MaopSpec& spec, const Trajectory& traj, double tol) {
    spec.validate();
    for (std::size_t k = 0; k < traj.grid.node_count; ++k) {
        const Vec& x = traj.x_samples[k];
        const Vec& u = traj.u_samples[k];
        Vec phi = spec.phi_matrix * u + spec.phi_offset;
        for (Eigen::Index j = 0; j < spec.agents; ++j) {
            double grad = spec.cost_gradient(j, x, u);
            double lo = phi(j) + spec.box_lo(j);
            double hi = phi(j) + spec.box_hi(j);
            if (u(j) < lo - tol || u(j) > hi + tol) return false;
            if (grad * (lo - u(j)) < -tol) return false;
            if (grad * (hi - u(j)) < -tol) return false;
        }
    }
    return true;
}

/// gamma-feasibility function of the mean-scaled nonlocal rule:
/// negative values witness l_psi(gamma) < 1.
inline double maop_gamma_feasibility(double a_max, double horizon, double gamma) {
    return std::exp(gamma * horizon) - horizon / a_max * gamma - 1.0;
}

/// Price control problem: m commodities with affine supply S(u,x) and demand
/// D(u,x), price corridors phi_j(u_{-j}) + [corridor_lo_j, corridor_hi_j],
/// exogenous dynamics, and point-combination nonlocal initial data.
struct PcpSpec {
    Eigen::Index commodities = 1;
    Eigen::Index state_dim = 1;
    double q = 1.0;
    double horizon = 1.0;

    Mat supply_u, supply_x;  // S(u, x) = supply_u u + supply_x x + supply_c
    Vec supply_c;
    Mat demand_u, demand_x;
    Vec demand_c;

    Mat phi_matrix; // zero diagonal
    Vec corridor_lo, corridor_hi;

    AffineMap chi;      // f-role, (s, x) -> R^n
    AffineMap vartheta; // g-role, (s, x, u) -> R^n

    Vec iota;
    std::vector<double> times;
    Vec x0;

    void validate() const {
        const auto m = commodities, n = state_dim;
        if (m < 1 || n < 1) throw ConfigError("PcpSpec: dimensions must be positive");
        if (supply_u.rows() != m || supply_u.cols() != m || demand_u.rows() != m ||
            demand_u.cols() != m)
            throw ConfigError("PcpSpec: price-block shape mismatch");
        if (supply_x.rows() != m || supply_x.cols() != n || demand_x.rows() != m ||
            demand_x.cols() != n)
            throw ConfigError("PcpSpec: state-block shape mismatch");
        if (supply_c.size() != m || demand_c.size() != m)
            throw ConfigError("PcpSpec: offset size mismatch");
        if (phi_matrix.rows() != m || phi_matrix.cols() != m)
            throw ConfigError("PcpSpec: phi matrix shape mismatch");
        if (corridor_lo.size() != m || corridor_hi.size() != m)
            throw ConfigError("PcpSpec: corridor size mismatch");
        if (((corridor_hi - corridor_lo).array() <= 0.0).any())
            throw ConfigError("PcpSpec: corridor requires c_j < d_j");
        if (x0.size() != n) throw ConfigError("PcpSpec: x0 size mismatch");
        double s = iota.cwiseAbs().sum();
        if (!(s > 0.0 && s < 1.0)) throw ConfigError("PcpSpec: need 0 < sum|iota_i| < 1");
    }

    [[nodiscard]] Vec supply(const Vec& u, const Vec& x) const {
        return supply_u * u + supply_x * x + supply_c;
    }
    [[nodiscard]] Vec demand(const Vec& u, const Vec& x) const {
        return demand_u * u + demand_x * x + demand_c;
    }
};

inline ProblemInstance pcp_to_nfdqvi(const PcpSpec& spec, std::size_t nodes = 257) {
    spec.validate();
    ProblemInstance p;
    p.q = spec.q;
    p.grid = TimeGrid(spec.horizon, nodes);
    p.n = spec.state_dim;
    p.m = spec.commodities;

    p.varmap.A = spec.supply_u - spec.demand_u;
    p.varmap.B = spec.supply_x - spec.demand_x;
    p.varmap.c0 = spec.supply_c - spec.demand_c;

    p.dynamics.f = spec.chi;
    p.dynamics.g = spec.vartheta;

    p.constraints.set = MovingBox{spec.phi_matrix, Vec::Zero(spec.commodities), spec.corridor_lo,
                                  spec.corridor_hi};
    p.nonlocal.rule = PointCombination{spec.iota, spec.times};
    p.nonlocal.x0 = spec.x0;
    p.validate();
    return p;
}

/// Three-case market equilibrium condition: per node and commodity, excess
/// supply must be <=0 at the ceiling, 0 in the interior, >=0 at the floor.
inline bool check_market_equilibrium(const PcpSpec& spec, const Trajectory& traj, double tol) {
    spec.validate();
    for (std::size_t k = 0; k < traj.grid.node_count; ++k) {
        const Vec& x = traj.x_samples[k];
        const Vec& u = traj.u_samples[k];
        Vec excess = spec.supply(u, x) - spec.demand(u, x);
        Vec phi = spec.phi_matrix * u;
        for (Eigen::Index j = 0; j < spec.commodities; ++j) {
            double lo = phi(j) + spec.corridor_lo(j);
            double hi = phi(j) + spec.corridor_hi(j);
            bool at_floor = std::abs(u(j) - lo) <= tol;
            bool at_ceiling = std::abs(u(j) - hi) <= tol;
            bool interior = u(j) > lo + tol && u(j) < hi - tol;
            if (at_ceiling && excess(j) > tol) return false;
            if (at_floor && excess(j) < -tol) return false;
            if (interior && std::abs(excess(j)) > tol) return false;
            if (!at_floor && !at_ceiling && !interior) return false; // outside the corridor
        }
    }
    return true;
}

/// (A1)-(A4) verdicts in the row-wise 1-norm arithmetic, with the sharper
/// 2-norm constants reported alongside for comparison.
struct PcpVerdicts {
    bool a1 = false, a2 = false, a3 = false, a4 = false;
    double l_S_1 = 0, l_D_1 = 0, l_phi_1 = 0, eta_SD = 0;
    double L1 = 0;       // the printed (A2) condition value
    double l_G_2 = 0;    // 2-norm Lipschitz constant of G = S - D
    double L_2 = 0;      // 2-norm contraction constant from the core certificate

    [[nodiscard]] bool all_pass() const { return a1 && a2 && a3 && a4; }
};

inline PcpVerdicts verify_A1_A4(const PcpSpec& spec) {
    spec.validate();
    PcpVerdicts v;
    auto row_const = [](const Mat& mu, const Mat& mx, Eigen::Index j) {
        return std::max(mu.row(j).norm(), mx.cols() > 0 ? mx.row(j).norm() : 0.0);
    };
    for (Eigen::Index j = 0; j < spec.commodities; ++j) {
        v.l_S_1 += row_const(spec.supply_u, spec.supply_x, j);
        v.l_D_1 += row_const(spec.demand_u, spec.demand_x, j);
        v.l_phi_1 += spec.phi_matrix.row(j).norm();
    }
    v.eta_SD = min_symmetric_eigenvalue(spec.supply_u - spec.demand_u);
    v.a1 = v.eta_SD > 0.0;

    const double lg = v.l_S_1 + v.l_D_1;
    const double eta2 = v.eta_SD * v.eta_SD;
    v.L1 = 2.0 * v.l_phi_1 * v.l_phi_1 / eta2 *
           (lg * std::sqrt(4.0 * lg * lg + 2.0 * eta2) + 2.0 * lg * lg + eta2);
    bool corridor_ok = ((spec.corridor_hi - spec.corridor_lo).array() > 0.0).all();
    bool diag_ok = true;
    for (Eigen::Index j = 0; j < spec.commodities; ++j)
        if (spec.phi_matrix(j, j) != 0.0) diag_ok = false;
    v.a2 = corridor_ok && diag_ok && v.L1 < 1.0;

    v.a3 = spec.vartheta.out_dim() == spec.state_dim;
    v.a4 = spec.chi.out_dim() == spec.state_dim && spec.chi.u_block.cols() == 0;

    auto p = pcp_to_nfdqvi(spec);
    auto cert = derive_constants(p);
    v.l_G_2 = cert.l_G;
    v.L_2 = cert.L;
    return v;
}

/// Shipped two-agent scenario with certified constants.
inline MaopSpec demo_maop_spec() {
    MaopSpec s;
    s.agents = 2;
    s.q = 0.5;
    s.horizon = 1.0;
    s.alpha = Vec::Constant(2, 2.0);
    s.beta = Vec::Constant(2, 0.3);
    s.coupling = Mat::Zero(2, 2);
    s.coupling(0, 1) = s.coupling(1, 0) = 0.1;
    s.phi_matrix = Mat::Zero(2, 2);
    s.phi_matrix(0, 1) = s.phi_matrix(1, 0) = 0.05;
    s.phi_offset = Vec::Zero(2);
    s.box_lo = Vec::Constant(2, -1.0);
    s.box_hi = Vec::Constant(2, 1.0);
    s.f_x = Vec::Constant(2, -0.3);
    s.f_s = Vec::Zero(2);
    s.f_c = Vec::Zero(2);
    s.g_x = Vec::Constant(2, 0.05);
    s.g_u = Vec::Constant(2, 0.05);
    s.g_s = Vec::Zero(2);
    s.g_c = Vec::Zero(2);
    s.a_coeff = Vec::Constant(2, 0.1);
    s.x0 = (Vec(2) << 1.0, 0.5).finished();
    return s;
}

/// Shipped two-commodity scenario with certified constants.
inline PcpSpec demo_pcp_spec() {
    PcpSpec s;
    s.commodities = 2;
    s.state_dim = 2;
    s.q = 0.5;
    s.horizon = 1.0;
    s.supply_u = Mat::Zero(2, 2);
    s.supply_u << 2.0, 0.1, 0.1, 2.0;
    s.supply_x = 0.1 * Mat::Identity(2, 2);
    s.supply_c = Vec::Zero(2);
    s.demand_u = -0.5 * Mat::Identity(2, 2);
    s.demand_x = 0.2 * Mat::Identity(2, 2);
    s.demand_c = Vec::Constant(2, 4.0);
    s.phi_matrix = Mat::Zero(2, 2);
    s.phi_matrix(0, 1) = s.phi_matrix(1, 0) = 0.05;
    s.corridor_lo = Vec::Constant(2, 0.5);
    s.corridor_hi = Vec::Constant(2, 3.0);
    s.chi.x_block = -0.1 * Mat::Identity(2, 2);
    s.chi.s_coeff = Vec::Zero(2);
    s.chi.offset = Vec::Zero(2);
    s.vartheta.x_block = 0.02 * Mat::Identity(2, 2);
    s.vartheta.u_block = 0.02 * Mat::Identity(2, 2);
    s.vartheta.s_coeff = Vec::Zero(2);
    s.vartheta.offset = Vec::Zero(2);
    s.iota = Vec::Constant(2, 0.1);
    s.times = {0.25, 0.5};
    s.x0 = Vec::Constant(2, 1.0);
    return s;
}

} // namespace nfdqvi
