#include <doctest.h>

#include <nfdqvi/apps.hpp>
#include <nfdqvi/qvi.hpp>

#include <cmath>

using namespace nfdqvi;

namespace {

MaopSpec scalar_maop(double alpha, double beta) {
    MaopSpec s;
    s.agents = 1;
    s.q = 1.0;
    s.horizon = 1.0;
    s.alpha = Vec::Constant(1, alpha);
    s.beta = Vec::Constant(1, beta);
    s.coupling = Mat::Zero(1, 1);
    s.phi_matrix = Mat::Zero(1, 1);
    s.phi_offset = Vec::Zero(1);
    s.box_lo = Vec::Constant(1, 0.0);
    s.box_hi = Vec::Constant(1, 1.0);
    s.f_x = Vec::Constant(1, -0.2);
    s.f_s = Vec::Zero(1);
    s.f_c = Vec::Zero(1);
    s.g_x = Vec::Constant(1, 0.05);
    s.g_u = Vec::Constant(1, 0.05);
    s.g_s = Vec::Zero(1);
    s.g_c = Vec::Zero(1);
    s.a_coeff = Vec::Constant(1, 0.5);
    s.x0 = Vec::Constant(1, 0.5);
    return s;
}

PcpSpec scalar_pcp() {
    // excess supply 3u - 3 with the state decoupled: the market clears at u = 1
    PcpSpec s;
    s.commodities = 1;
    s.state_dim = 1;
    s.q = 1.0;
    s.horizon = 1.0;
    s.supply_u = Mat::Constant(1, 1, 3.0);
    s.supply_x = Mat::Zero(1, 1);
    s.supply_c = Vec::Zero(1);
    s.demand_u = Mat::Zero(1, 1);
    s.demand_x = Mat::Zero(1, 1);
    s.demand_c = Vec::Constant(1, 3.0);
    s.phi_matrix = Mat::Zero(1, 1);
    s.corridor_lo = Vec::Constant(1, 0.5);
    s.corridor_hi = Vec::Constant(1, 2.0);
    s.chi.x_block = Mat::Constant(1, 1, -0.2);
    s.chi.s_coeff = Vec::Zero(1);
    s.chi.offset = Vec::Zero(1);
    s.vartheta.x_block = Mat::Constant(1, 1, 0.05);
    s.vartheta.u_block = Mat::Constant(1, 1, 0.02);
    s.vartheta.s_coeff = Vec::Zero(1);
    s.vartheta.offset = Vec::Zero(1);
    s.iota = Vec::Constant(1, 0.1);
    s.times = {0.5};
    s.x0 = Vec::Constant(1, 0.5);
    return s;
}


double vi_step(const VariationalMapSpec& vm) {
    double l = vm.lipschitz();
    return vm.eta() / (l * l);
}

} // namespace

TEST_CASE("single agent with quadratic cost Theta = (u - x)^2") {
    // alpha = 2, beta = -2 gives cost gradient 2(u - x)
    auto spec = scalar_maop(2.0, -2.0);
    auto p = maop_to_nfdqvi(spec, 17);
    Vec x = Vec::Constant(1, 0.5);
    auto rep = solve_pqvi(p.varmap, p.constraints, 0.0, x, Vec::Zero(1), vi_step(p.varmap));
    CHECK(rep.solution(0) == doctest::Approx(0.5).epsilon(1e-9));

    SUBCASE("boundary solution when the unconstrained optimum leaves the box") {
        Vec big = Vec::Constant(1, 3.0); // wants u = 3, box caps at 1
        auto r2 = solve_pqvi(p.varmap, p.constraints, 0.0, big, Vec::Zero(1), vi_step(p.varmap));
        CHECK(r2.solution(0) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("decoupled agents reduce to independent scalar problems") {
    MaopSpec s = scalar_maop(2.0, 1.0);
    s.agents = 2;
    s.alpha = (Vec(2) << 2.0, 4.0).finished();
    s.beta = (Vec(2) << 1.0, -2.0).finished();
    s.coupling = Mat::Zero(2, 2);
    s.phi_matrix = Mat::Zero(2, 2);
    s.phi_offset = Vec::Zero(2);
    s.box_lo = Vec::Constant(2, -1.0);
    s.box_hi = Vec::Constant(2, 1.0);
    s.f_x = Vec::Constant(2, -0.2);
    s.f_s = s.f_c = s.g_s = s.g_c = Vec::Zero(2);
    s.g_x = s.g_u = Vec::Constant(2, 0.05);
    s.a_coeff = Vec::Constant(2, 0.5);
    s.x0 = Vec::Constant(2, 0.5);

    auto p = maop_to_nfdqvi(s, 17);
    Vec x = (Vec(2) << 0.4, 0.6).finished();
    auto rep = solve_pqvi(p.varmap, p.constraints, 0.0, x, Vec::Zero(2), vi_step(p.varmap));
    // each agent independently clamps -beta_j x_j / alpha_j to the box
    CHECK(rep.solution(0) == doctest::Approx(-0.2).epsilon(1e-9));
    CHECK(rep.solution(1) == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("assembled maop certificate constants") {
    MaopSpec s = demo_maop_spec();
    SUBCASE("coupling strength drives the monotonicity margin") {
        s.coupling(0, 1) = s.coupling(1, 0) = 0.5;
        auto p = maop_to_nfdqvi(s, 17);
        auto cert = derive_constants(p);
        CHECK(cert.eta_G == doctest::Approx(1.5).epsilon(1e-12));
    }
    SUBCASE("non-monotone assembly is rejected") {
        s.coupling(0, 1) = s.coupling(1, 0) = 2.5;
        CHECK_THROWS_AS(maop_to_nfdqvi(s, 17), ConfigError);
    }
    SUBCASE("spec validation") {
        MaopSpec bad = demo_maop_spec();
        bad.alpha(0) = -1.0;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
        bad = demo_maop_spec();
        bad.a_coeff = Vec::Constant(2, 1.0);
        CHECK_THROWS_AS(bad.validate(), ConfigError);
        bad = demo_maop_spec();
        bad.beta = Vec::Zero(3);
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
}

TEST_CASE("shipped two-agent scenario certifies and reaches a Nash point") {
    auto spec = demo_maop_spec();
    auto p = maop_to_nfdqvi(spec, 65);
    auto cert = derive_constants(p);
    CHECK(cert.all_pass());

    auto traj = picard_solve(p);
    CHECK(check_nash(spec, traj, 1e-7));

    SUBCASE("a displaced strategy profile is not a Nash point") {
        auto displaced = traj;
        displaced.u_samples[32](0) += 0.3;
        CHECK_FALSE(check_nash(spec, displaced, 1e-7));
    }
}

TEST_CASE("mean-scaling feasibility function") {
    // rho(gamma) = exp(gamma T) - (T / a_max) gamma - 1
    CHECK(maop_gamma_feasibility(0.5, 1.0, std::log(2.0)) ==
          doctest::Approx(-0.3862943611198906).epsilon(1e-14));
    for (double a : {0.1, 0.5, 0.9}) {
        double gamma_star = std::log(1.0 / a);
        CHECK(maop_gamma_feasibility(a, 1.0, gamma_star) < 0.0);
        CHECK(maop_gamma_feasibility(a, 1.0, 0.0) == doctest::Approx(0.0));
    }
}

TEST_CASE("single commodity market clears inside the corridor") {
    auto spec = scalar_pcp();
    auto p = pcp_to_nfdqvi(spec, 33);
    Vec x = Vec::Constant(1, 0.5);
    auto rep = solve_pqvi(p.varmap, p.constraints, 0.0, x, Vec::Constant(1, 0.5),
                          vi_step(p.varmap));
    CHECK(rep.solution(0) == doctest::Approx(1.0).epsilon(1e-9));

    auto traj = picard_solve(p);
    CHECK(check_market_equilibrium(spec, traj, 1e-6));

    SUBCASE("a displaced price path fails the three-case condition") {
        auto displaced = traj;
        for (auto& u : displaced.u_samples) u = Vec::Constant(1, 1.5); // excess supply 1.5
        CHECK_FALSE(check_market_equilibrium(spec, displaced, 1e-6));
    }
    SUBCASE("a price outside the corridor fails regardless of excess") {
        auto displaced = traj;
        displaced.u_samples[5] = Vec::Constant(1, 3.0);
        CHECK_FALSE(check_market_equilibrium(spec, displaced, 1e-6));
    }
}

TEST_CASE("pcp spec validation") {
    auto spec = scalar_pcp();
    spec.iota = Vec::Constant(1, 1.0);
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = scalar_pcp();
    spec.corridor_hi = Vec::Constant(1, 0.4); // below corridor_lo
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = scalar_pcp();
    spec.supply_x = Mat::Zero(2, 1);
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("market hypothesis verdicts") {
    SUBCASE("a single commodity with no corridor coupling is trivially fine") {
        auto v = verify_A1_A4(scalar_pcp());
        CHECK(v.all_pass());
        CHECK(v.l_phi_1 == 0.0);
        CHECK(v.L1 == 0.0);
        CHECK(v.eta_SD == doctest::Approx(3.0).epsilon(1e-12));
    }
    SUBCASE("shipped scenario constants are pinned") {
        auto v = verify_A1_A4(demo_pcp_spec());
        CHECK(v.all_pass());
        CHECK(v.l_S_1 == doctest::Approx(4.0049968789001573).epsilon(1e-14));
        CHECK(v.l_D_1 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(v.eta_SD == doctest::Approx(2.4).epsilon(1e-14));
        CHECK(v.L1 == doctest::Approx(0.37764457813412333).epsilon(1e-13));
        // aggregate row-norm arithmetic can only be coarser than the 2-norm
        CHECK(v.l_S_1 + v.l_D_1 >= v.l_G_2);
        CHECK(v.L_2 <= v.L1);
    }
    SUBCASE("strong corridor coupling breaks the contraction condition") {
        auto spec = demo_pcp_spec();
        spec.phi_matrix(0, 1) = spec.phi_matrix(1, 0) = 0.5;
        auto v = verify_A1_A4(spec);
        CHECK_FALSE(v.a2);
        CHECK(v.L1 > 1.0);
    }
}

TEST_CASE("shipped two-commodity scenario certifies and clears the market") {
    auto spec = demo_pcp_spec();
    auto p = pcp_to_nfdqvi(spec, 65);
    auto cert = derive_constants(p);
    CHECK(cert.all_pass());

    auto traj = picard_solve(p);
    CHECK(check_market_equilibrium(spec, traj, 1e-6));
    auto res = residual_check(p, traj);
    CHECK(res.qvi <= 1e-9);
    CHECK(res.nonlocal <= 1e-9);
}
