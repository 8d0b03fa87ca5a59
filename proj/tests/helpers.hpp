#pragma once

#include <nfdqvi/problem.hpp>

#include <cstdint>
#include <random>

namespace testing {

using namespace nfdqvi;

/// Scalar decay instance: cD^q x = -x, x(0) = 1, control decoupled.
inline ProblemInstance scalar_decay(double q, std::size_t nodes, double horizon = 1.0) {
    ProblemInstance p;
    p.q = q;
    p.grid = TimeGrid(horizon, nodes);
    p.n = 1;
    p.m = 1;
    p.dynamics.f.x_block = -Mat::Identity(1, 1);
    p.dynamics.f.offset = Vec::Zero(1);
    p.dynamics.g = AffineMap::zero(1);
    p.varmap.A = Mat::Identity(1, 1);
    p.varmap.c0 = Vec::Zero(1);
    p.constraints.set = FixedBox{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
    p.nonlocal.rule = ZeroNonlocal{};
    p.nonlocal.x0 = Vec::Constant(1, 1.0);
    return p;
}

/// Pure nonlocal fixed point: f = g = 0, mean-scaled psi with coefficient a.
inline ProblemInstance mean_fixed_point(double a, std::size_t nodes, double q = 1.0) {
    ProblemInstance p;
    p.q = q;
    p.grid = TimeGrid(1.0, nodes);
    p.n = 1;
    p.m = 1;
    p.dynamics.f = AffineMap::zero(1);
    p.dynamics.g = AffineMap::zero(1);
    p.varmap.A = Mat::Identity(1, 1);
    p.varmap.c0 = Vec::Zero(1);
    p.constraints.set = FixedBox{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
    p.nonlocal.rule = MeanScaled{Vec::Constant(1, a)};
    p.nonlocal.x0 = Vec::Constant(1, 1.0);
    return p;
}

/// Pure nonlocal fixed point with a single interior anchor at t = T/2.
inline ProblemInstance point_fixed_point(double iota, std::size_t nodes, double q = 1.0) {
    ProblemInstance p;
    p.q = q;
    p.grid = TimeGrid(1.0, nodes);
    p.n = 1;
    p.m = 1;
    p.dynamics.f = AffineMap::zero(1);
    p.dynamics.g = AffineMap::zero(1);
    p.varmap.A = Mat::Identity(1, 1);
    p.varmap.c0 = Vec::Zero(1);
    p.constraints.set = FixedBox{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
    p.nonlocal.rule = PointCombination{Vec::Constant(1, iota), {0.5}};
    p.nonlocal.x0 = Vec::Constant(1, 1.0);
    return p;
}

/// Fully coupled certified 2-state/2-control instance with a moving box.
inline ProblemInstance coupled_instance(double q, std::size_t nodes) {
    ProblemInstance p;
    p.q = q;
    p.grid = TimeGrid(1.0, nodes);
    p.n = 2;
    p.m = 2;
    p.dynamics.f.x_block = -0.3 * Mat::Identity(2, 2);
    p.dynamics.f.offset = Vec::Zero(2);
    p.dynamics.g.x_block = 0.05 * Mat::Identity(2, 2);
    p.dynamics.g.u_block = 0.05 * Mat::Identity(2, 2);
    p.dynamics.g.offset = Vec::Zero(2);
    p.varmap.A = (Mat(2, 2) << 2.0, 0.1, 0.1, 2.0).finished();
    p.varmap.B = 0.3 * Mat::Identity(2, 2);
    p.varmap.c0 = Vec::Zero(2);
    Mat phi = Mat::Zero(2, 2);
    phi(0, 1) = phi(1, 0) = 0.05;
    p.constraints.set = MovingBox{phi, Vec::Zero(2), Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)};
    p.nonlocal.rule = MeanScaled{Vec::Constant(2, 0.1)};
    p.nonlocal.x0 = (Vec(2) << 1.0, 0.5).finished();
    return p;
}

/// Random 2-D PQVI data with eta_G = 2, ||B|| <= 1, l_K = 0.1: the
/// sensitivity-bound reference family.
struct PqviFamily {
    VariationalMapSpec varmap;
    ConstraintSpec constraints;
};

inline PqviFamily sensitivity_family(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    PqviFamily f;
    double skew = 0.5 * uni(rng);
    f.varmap.A = (Mat(2, 2) << 2.0, skew, -skew, 2.0).finished(); // sym part = 2 I
    Mat b(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) b(i, j) = uni(rng);
    double bn = b.norm();
    if (bn > 0.0) b *= std::min(1.0, 1.0 / bn);
    f.varmap.B = b;
    f.varmap.c0 = (Vec(2) << uni(rng), uni(rng)).finished();
    Mat phi = Mat::Zero(2, 2);
    phi(0, 1) = uni(rng) < 0.0 ? -0.1 : 0.1;
    phi(1, 0) = uni(rng) < 0.0 ? -0.1 : 0.1;
    f.constraints.set =
        MovingBox{phi, Vec::Zero(2), Vec::Constant(2, -2.0), Vec::Constant(2, 2.0)};
    return f;
}

} // namespace testing
