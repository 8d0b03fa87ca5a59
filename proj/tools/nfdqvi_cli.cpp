#include <nfdqvi/apps.hpp>
#include <nfdqvi/certificate.hpp>
#include <nfdqvi/config.hpp>
#include <nfdqvi/csv.hpp>
#include <nfdqvi/solver.hpp>
#include <nfdqvi/stability.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <variant>

namespace {

using namespace nfdqvi;

constexpr int kExitOk = 0;
constexpr int kExitCondition = 1;
constexpr int kExitNonConvergence = 2;
constexpr int kExitConfig = 3;

struct Options {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::size_t> nodes;
    std::uint64_t seed = 1;
    double epsilon = 1e-2;
    std::optional<double> gamma;
    std::string scheme = "trap";
    std::string solver = "picard";
};

SolverConfig make_solver_config(const Options& opt) {
    SolverConfig cfg;
    if (opt.scheme == "rect")
        cfg.scheme = QuadScheme::Rectangle;
    else if (opt.scheme == "trap")
        cfg.scheme = QuadScheme::Trapezoid;
    else
        throw ConfigError("--scheme: must be rect or trap");
    if (opt.solver != "picard" && opt.solver != "march")
        throw ConfigError("--solver: must be picard or march");
    if (opt.gamma) {
        if (*opt.gamma <= 0.0) throw ConfigError("--gamma: must be positive");
        cfg.gamma_override = *opt.gamma;
    }
    return cfg;
}

ProblemInstance to_instance(const LoadedConfig& loaded, const Options& opt) {
    std::size_t nodes = opt.nodes.value_or(257);
    if (const auto* p = std::get_if<ProblemInstance>(&loaded)) {
        ProblemInstance out = *p;
        if (opt.nodes) out.grid = TimeGrid(out.grid.horizon, *opt.nodes);
        return out;
    }
    if (const auto* m = std::get_if<MaopSpec>(&loaded)) return maop_to_nfdqvi(*m, nodes);
    return pcp_to_nfdqvi(std::get<PcpSpec>(loaded), nodes);
}

const char* word(bool b) { return b ? "pass" : "fail"; }

std::string verdict_summary(const ConstantCertificate& c) {
    std::string s;
    s += std::string("h1:") + word(c.h1) + " h2:" + word(c.h2) + " h3:" + word(c.h3) +
         " h4:" + word(c.h4) + " h5:" + word(c.h5);
    s += std::string(" uniqueness:") + word(c.cond_uniqueness);
    s += std::string(" contraction:") + word(c.cond_contraction);
    s += std::string(" gamma:") + word(c.lambda_feasible);
    return s;
}

void print_certificate(const ConstantCertificate& c) {
    auto line = [](const char* k, double v) {
        std::cout << "  " << k << " = " << format_number(v) << "\n";
    };
    std::cout << "constants:\n";
    line("q", c.q);
    line("l_f", c.l_f);
    line("l_g", c.l_g);
    line("l_G", c.l_G);
    line("eta_G", c.eta_G);
    line("l_K", c.l_K);
    line("uniqueness_lhs", c.kl1_lhs);
    line("L", c.L);
    line("kappa", c.kappa);
    line("sensitivity", c.sensitivity);
    line("xi", c.xi);
    line("gamma", c.gamma);
    line("l_psi", c.l_psi);
    line("lambda", c.lambda);
    line("a", c.a);
    line("b", c.b);
    std::cout << "verdicts: " << verdict_summary(c) << "\n";
}

CsvMeta make_meta(const ProblemInstance& p, const ConstantCertificate& cert,
                  const SolverConfig& cfg, const Options& opt) {
    CsvMeta meta;
    meta.q = p.q;
    meta.horizon = p.grid.horizon;
    meta.nodes = p.grid.node_count;
    meta.gamma = cfg.gamma_override > 0.0 ? cfg.gamma_override : cert.gamma;
    meta.rho = cfg.rho_override > 0.0 ? cfg.rho_override : detail::pick_step(cert, cfg);
    meta.seed = opt.seed;
    meta.verdicts = verdict_summary(cert);
    return meta;
}

int run_check(const ProblemInstance& p) {
    auto cert = derive_constants(p);
    print_certificate(cert);
    std::cout << (cert.all_pass() ? "certified" : "not certified") << "\n";
    return cert.all_pass() ? kExitOk : kExitCondition;
}

int run_solve(const ProblemInstance& p, const Options& opt) {
    auto cfg = make_solver_config(opt);
    auto cert = derive_constants(p);
    Trajectory traj =
        opt.solver == "march" ? march_solve(p, cfg) : picard_solve(p, cfg);
    write_trajectory_csv(opt.out_dir + "/trajectory.csv", traj, make_meta(p, cert, cfg, opt));
    std::cout << "trajectory written to " << opt.out_dir << "/trajectory.csv\n";
    std::cout << "integral_residual = " << format_number(traj.integral_residual) << "\n";
    std::cout << "nonlocal_residual = " << format_number(traj.nonlocal_residual) << "\n";
    double qr = 0.0;
    for (double r : traj.qvi_residuals) qr = std::max(qr, r);
    std::cout << "max_qvi_residual = " << format_number(qr) << "\n";
    return kExitOk;
}

int run_stability(const ProblemInstance& p, const Options& opt) {
    auto cfg = make_solver_config(opt);
    auto cert = derive_constants(p);
    PerturbationSpec pert;
    pert.mode = PerturbationMode::Uniform;
    pert.epsilon = opt.epsilon;
    pert.shape = PerturbationShape::Random;
    pert.seed = opt.seed;
    auto report = run_stability_experiment(p, cfg, pert);
    write_stability_csv(opt.out_dir + "/stability.csv", p.grid, report,
                        make_meta(p, cert, cfg, opt));
    std::cout << "stability report written to " << opt.out_dir << "/stability.csv\n";
    std::cout << "max_ratio = " << format_number(report.max_ratio) << "\n";
    std::cout << "verdict = " << word(report.verdict) << "\n";
    return report.verdict ? kExitOk : kExitCondition;
}

int run_demo_maop(const Options& opt) {
    auto spec = demo_maop_spec();
    auto p = maop_to_nfdqvi(spec, opt.nodes.value_or(257));
    int rc = run_check(p);
    if (rc != kExitOk) return rc;
    rc = run_solve(p, opt);
    if (rc != kExitOk) return rc;

    auto cfg = make_solver_config(opt);
    auto traj = opt.solver == "march" ? march_solve(p, cfg) : picard_solve(p, cfg);
    bool nash = check_nash(spec, traj, 1e-6);
    std::cout << "nash_condition = " << word(nash) << "\n";
    if (!nash) return kExitCondition;
    return run_stability(p, opt);
}

int run_demo_pcp(const Options& opt) {
    auto spec = demo_pcp_spec();
    auto verdicts = verify_A1_A4(spec);
    std::cout << "a1:" << word(verdicts.a1) << " a2:" << word(verdicts.a2)
              << " a3:" << word(verdicts.a3) << " a4:" << word(verdicts.a4)
              << " L1=" << format_number(verdicts.L1) << "\n";
    if (!verdicts.all_pass()) return kExitCondition;

    auto p = pcp_to_nfdqvi(spec, opt.nodes.value_or(257));
    int rc = run_check(p);
    if (rc != kExitOk) return rc;
    rc = run_solve(p, opt);
    if (rc != kExitOk) return rc;

    auto cfg = make_solver_config(opt);
    auto traj = opt.solver == "march" ? march_solve(p, cfg) : picard_solve(p, cfg);
    bool eq = check_market_equilibrium(spec, traj, 1e-6);
    std::cout << "market_equilibrium = " << word(eq) << "\n";
    if (!eq) return kExitCondition;
    return run_stability(p, opt);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonlocal fractional differential quasi-variational inequality toolkit"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opt.config_path, "problem configuration (JSON)");
        if (needs_config) c->required();
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--nodes", opt.nodes, "grid node count override");
        sub->add_option("--seed", opt.seed, "random seed");
        sub->add_option("--epsilon", opt.epsilon, "perturbation magnitude");
        sub->add_option("--gamma", opt.gamma, "Bielecki exponent override");
        sub->add_option("--scheme", opt.scheme, "quadrature scheme: rect | trap");
        sub->add_option("--solver", opt.solver, "solver: picard | march");
    };

    auto* cmd_check = app.add_subcommand("check", "derive and print the constant certificate");
    auto* cmd_solve = app.add_subcommand("solve", "solve and emit the trajectory CSV");
    auto* cmd_stab = app.add_subcommand("stability", "perturbation experiment vs. the bound");
    auto* cmd_maop = app.add_subcommand("demo-maop", "shipped multi-agent scenario end-to-end");
    auto* cmd_pcp = app.add_subcommand("demo-pcp", "shipped price-control scenario end-to-end");
    add_common(cmd_check, true);
    add_common(cmd_solve, true);
    add_common(cmd_stab, true);
    add_common(cmd_maop, false);
    add_common(cmd_pcp, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_maop->parsed()) return run_demo_maop(opt);
        if (cmd_pcp->parsed()) return run_demo_pcp(opt);
        auto loaded = load_config(opt.config_path);
        auto p = to_instance(loaded, opt);
        if (cmd_check->parsed()) return run_check(p);
        if (cmd_solve->parsed()) return run_solve(p, opt);
        return run_stability(p, opt);
    } catch (const NonConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const CertificationError& e) {
        std::cerr << "condition failure: " << e.what() << "\n";
        return kExitCondition;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ShapeError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    }
}
