#include <doctest.h>

#include <nfdqvi/solver.hpp>
#include <nfdqvi/special.hpp>

#include "helpers.hpp"

#include <cmath>

using namespace nfdqvi;

TEST_CASE("bielecki_distance") {
    TimeGrid grid(1.0, 5);
    std::vector<Vec> a(5, Vec::Constant(1, 1.0));
    std::vector<Vec> b(5, Vec::Constant(1, 2.0));

    CHECK(bielecki_distance(grid, a, a, 1.0) == 0.0);
    // gamma = 0 is the plain sup distance
    CHECK(bielecki_distance(grid, a, b, 0.0) == doctest::Approx(1.0));
    // constant unit difference: the weighted max sits at s = 0
    CHECK(bielecki_distance(grid, a, b, 1.0) == doctest::Approx(1.0));
    std::vector<Vec> c(4, Vec::Zero(1));
    CHECK_THROWS_AS(bielecki_distance(grid, a, c, 1.0), ShapeError);
}

TEST_CASE("eval_psi discretizations") {
    TimeGrid grid(1.0, 101);
    std::vector<Vec> x(grid.node_count);
    for (std::size_t k = 0; k < grid.node_count; ++k)
        x[k] = Vec::Constant(1, grid.node(k)); // mean is 1/2

    NonlocalSpec mean{MeanScaled{Vec::Constant(1, 0.5)}, Vec::Zero(1)};
    CHECK(eval_psi(mean, grid, x)(0) == doctest::Approx(0.25).epsilon(1e-10));

    NonlocalSpec pt{PointCombination{Vec::Constant(1, 0.3), {0.5}}, Vec::Zero(1)};
    CHECK(eval_psi(pt, grid, x)(0) == doctest::Approx(0.15).epsilon(1e-12));

    NonlocalSpec zero{ZeroNonlocal{}, Vec::Zero(1)};
    CHECK(eval_psi(zero, grid, x).norm() == 0.0);
}

TEST_CASE("picard_solve closed-form scenarios") {
    SUBCASE("pure nonlocal mean fixed point x = 2") {
        auto traj = picard_solve(testing::mean_fixed_point(0.5, 33));
        for (const auto& xk : traj.x_samples)
            CHECK(xk(0) == doctest::Approx(2.0).epsilon(1e-8));
    }
    SUBCASE("classical decay q = 1") {
        auto traj = picard_solve(testing::scalar_decay(1.0, 257));
        double err = 0.0;
        for (std::size_t k = 0; k < traj.grid.node_count; ++k)
            err = std::max(err, std::abs(traj.x_samples[k](0) - std::exp(-traj.grid.node(k))));
        CHECK(err <= 1e-4); // refined to 1e-6 at N = 1025 in the acceptance run
    }
    SUBCASE("fractional decay q = 0.5 hits the Mittag-Leffler curve") {
        auto traj = picard_solve(testing::scalar_decay(0.5, 257));
        double err = 0.0;
        for (std::size_t k = 0; k < traj.grid.node_count; ++k) {
            double exact = mittag_leffler(0.5, -std::sqrt(traj.grid.node(k)));
            err = std::max(err, std::abs(traj.x_samples[k](0) - exact));
        }
        CHECK(err <= 5e-3);
        CHECK(traj.x_samples.back()(0) == doctest::Approx(0.42758357615580700).epsilon(5e-3));
    }
}

TEST_CASE("march_solve mirrors picard_solve") {
    SUBCASE("zero nonlocal settles in one outer pass") {
        auto traj = march_solve(testing::scalar_decay(1.0, 33));
        CHECK(traj.sweeps == 1);
    }
    SUBCASE("point-combination fixed point x = 1/0.7") {
        auto traj = march_solve(testing::point_fixed_point(0.3, 33));
        for (const auto& xk : traj.x_samples)
            CHECK(xk(0) == doctest::Approx(1.0 / 0.7).epsilon(1e-8));
    }
    SUBCASE("cross-solver agreement on the coupled instance") {
        auto p = testing::coupled_instance(0.5, 65);
        SolverConfig cfg;
        auto a = picard_solve(p, cfg);
        auto b = march_solve(p, cfg);
        double err = 0.0;
        for (std::size_t k = 0; k < p.grid.node_count; ++k)
            err = std::max(err, (a.x_samples[k] - b.x_samples[k]).norm());
        CHECK(err <= 10.0 * cfg.max_tolerance());
    }
}

TEST_CASE("residual_check") {
    auto p = testing::coupled_instance(0.5, 33);
    SolverConfig cfg;
    auto traj = picard_solve(p, cfg);

    SUBCASE("solver output satisfies its own tolerances") {
        auto r = residual_check(p, traj, cfg);
        CHECK(r.integral <= cfg.picard_tol);
        CHECK(r.nonlocal <= cfg.picard_tol);
        CHECK(r.qvi <= cfg.qvi_tol * 10.0);
        CHECK(traj.integral_residual == doctest::Approx(r.integral));
    }
    SUBCASE("a displaced node is detected") {
        auto bad = traj;
        bad.x_samples[bad.x_samples.size() / 2](0) += 0.1;
        auto r = residual_check(p, bad, cfg);
        CHECK(r.integral >= 0.05);
    }
    SUBCASE("exact closed form has scheme-order residual") {
        auto decay = testing::scalar_decay(1.0, 129);
        Trajectory exact;
        exact.grid = decay.grid;
        exact.x_samples.resize(decay.grid.node_count);
        exact.u_samples.assign(decay.grid.node_count, Vec::Zero(1));
        for (std::size_t k = 0; k < decay.grid.node_count; ++k)
            exact.x_samples[k] = Vec::Constant(1, std::exp(-decay.grid.node(k)));
        auto r = residual_check(decay, exact, cfg);
        double h = decay.grid.step();
        CHECK(r.integral <= 5.0 * h * h);
    }
}

TEST_CASE("picard sweeps contract at the certified rate") {
    auto p = testing::coupled_instance(0.5, 33);
    auto cert = derive_constants(p);
    auto traj = picard_solve(p);
    REQUIRE(traj.sweep_distances.size() >= 3);
    for (std::size_t i = 2; i < traj.sweep_distances.size(); ++i) {
        double prev = traj.sweep_distances[i - 1];
        if (prev < 1e-12) break; // rounding floor
        CHECK(traj.sweep_distances[i] / prev <= cert.lambda + 0.05);
    }
}

TEST_CASE("grid refinement improves closed-form accuracy") {
    auto sup_err_q1 = [](std::size_t n) {
        auto traj = picard_solve(testing::scalar_decay(1.0, n));
        double err = 0.0;
        for (std::size_t k = 0; k < traj.grid.node_count; ++k)
            err = std::max(err, std::abs(traj.x_samples[k](0) - std::exp(-traj.grid.node(k))));
        return err;
    };
    CHECK(sup_err_q1(65) / sup_err_q1(129) >= 3.0);

    auto sup_err_q05 = [](std::size_t n) {
        auto traj = picard_solve(testing::scalar_decay(0.5, n));
        double err = 0.0;
        for (std::size_t k = 0; k < traj.grid.node_count; ++k)
            err = std::max(err, std::abs(traj.x_samples[k](0) -
                                         mittag_leffler(0.5, -std::sqrt(traj.grid.node(k)))));
        return err;
    };
    CHECK(sup_err_q05(65) / sup_err_q05(129) >= 1.8);
}

TEST_CASE("determinism: identical inputs give bit-identical trajectories") {
    auto p = testing::coupled_instance(0.5, 33);
    auto a = picard_solve(p);
    auto b = picard_solve(p);
    for (std::size_t k = 0; k < p.grid.node_count; ++k) {
        CHECK((a.x_samples[k].array() == b.x_samples[k].array()).all());
        CHECK((a.u_samples[k].array() == b.u_samples[k].array()).all());
    }
}

TEST_CASE("solver guards") {
    SUBCASE("degenerate grid is a config error") {
        auto p = testing::scalar_decay(1.0, 33);
        p.grid = TimeGrid(1.0, 2);
        CHECK_THROWS_AS(picard_solve(p), ConfigError);
        CHECK_THROWS_AS(march_solve(p), ConfigError);
    }
    SUBCASE("uncertified instances are rejected unless forced") {
        auto p = testing::coupled_instance(0.5, 17);
        p.dynamics.f.x_block = -40.0 * Mat::Identity(2, 2); // lambda cannot reach 1
        CHECK_THROWS_AS(picard_solve(p), CertificationError);
        SolverConfig cfg;
        cfg.allow_uncertified = true;
        cfg.picard_cap = 5;
        CHECK_THROWS_AS(picard_solve(p, cfg), NonConvergenceError);
    }
    SUBCASE("trajectory invariants hold on solver output") {
        auto p = testing::coupled_instance(0.5, 33);
        auto traj = picard_solve(p);
        Vec psi = eval_psi(p.nonlocal, p.grid, traj.x_samples);
        CHECK((traj.x_samples[0] - p.nonlocal.x0 - psi).norm() <= 1e-10);
        for (std::size_t k = 0; k < p.grid.node_count; ++k) {
            const Vec& u = traj.u_samples[k];
            Vec img = project_constraint(p.constraints, u, u);
            CHECK((u - img).norm() <= 1e-9); // u in K(u)
        }
    }
}
