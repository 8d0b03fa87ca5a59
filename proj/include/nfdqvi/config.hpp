#pragma once

#include "nfdqvi/apps.hpp"
#include "nfdqvi/problem.hpp"

#include <json.hpp>

#include <fstream>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace nfdqvi {

using LoadedConfig = std::variant<ProblemInstance, MaopSpec, PcpSpec>;

namespace config_detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

inline const json& field(const json& j, const std::string& path, const std::string& key) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "missing required field");
    return *it;
}

inline double number(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto& s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    fail(path, "expected a number (or \"inf\"/\"-inf\")");
}

inline Vec vec(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

inline Mat mat(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected a nested array (rows of numbers)");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Mat(0, 0);
    Mat m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        Vec row = vec(j[static_cast<std::size_t>(r)], path + "[" + std::to_string(r) + "]");
        if (r == 0) m.resize(rows, row.size());
        if (row.size() != m.cols()) fail(path, "ragged rows");
        m.row(r) = row.transpose();
    }
    return m;
}

inline Vec vec_field(const json& j, const std::string& path, const std::string& key) {
    return vec(field(j, path, key), path + "." + key);
}

inline Mat mat_field(const json& j, const std::string& path, const std::string& key) {
    return mat(field(j, path, key), path + "." + key);
}

inline double num_field(const json& j, const std::string& path, const std::string& key) {
    return number(field(j, path, key), path + "." + key);
}

inline AffineMap affine(const json& j, const std::string& path) {
    AffineMap a;
    a.offset = vec_field(j, path, "offset");
    if (j.contains("x")) a.x_block = mat(j["x"], path + ".x");
    if (j.contains("u")) a.u_block = mat(j["u"], path + ".u");
    if (j.contains("s")) a.s_coeff = vec(j["s"], path + ".s");
    return a;
}

inline ProblemInstance parse_problem(const json& j) {
    ProblemInstance p;
    p.q = num_field(j, "", "q");
    double horizon = num_field(j, "", "horizon");
    auto nodes = field(j, "", "nodes").get<std::size_t>();
    p.grid = TimeGrid(horizon, nodes);

    const auto& dyn = field(j, "", "dynamics");
    p.dynamics.f = affine(field(dyn, "dynamics", "f"), "dynamics.f");
    p.dynamics.g = affine(field(dyn, "dynamics", "g"), "dynamics.g");

    const auto& vm = field(j, "", "variational_map");
    p.varmap.A = mat_field(vm, "variational_map", "A");
    if (vm.contains("B")) p.varmap.B = mat(vm["B"], "variational_map.B");
    p.varmap.c0 = vec_field(vm, "variational_map", "c0");
    if (vm.contains("c1")) p.varmap.c1 = vec(vm["c1"], "variational_map.c1");

    const auto& cs = field(j, "", "constraints");
    auto kind = field(cs, "constraints", "type").get<std::string>();
    if (kind == "fixed_box") {
        p.constraints.set = FixedBox{vec_field(cs, "constraints", "lo"),
                                     vec_field(cs, "constraints", "hi")};
    } else if (kind == "moving_box") {
        MovingBox mb;
        mb.phi_matrix = mat_field(cs, "constraints", "phi_matrix");
        mb.base_lo = vec_field(cs, "constraints", "lo");
        mb.base_hi = vec_field(cs, "constraints", "hi");
        mb.phi_offset = cs.contains("phi_offset")
                            ? vec(cs["phi_offset"], "constraints.phi_offset")
                            : Vec(Vec::Zero(mb.base_lo.size()));
        p.constraints.set = mb;
    } else {
        fail("constraints.type", "must be \"fixed_box\" or \"moving_box\"");
    }

    const auto& nl = field(j, "", "nonlocal");
    p.nonlocal.x0 = vec_field(nl, "nonlocal", "x0");
    auto rule = field(nl, "nonlocal", "rule").get<std::string>();
    if (rule == "zero") {
        p.nonlocal.rule = ZeroNonlocal{};
    } else if (rule == "mean_scaled") {
        p.nonlocal.rule = MeanScaled{vec_field(nl, "nonlocal", "a")};
    } else if (rule == "point_combination") {
        PointCombination pc;
        pc.iota = vec_field(nl, "nonlocal", "iota");
        Vec t = vec_field(nl, "nonlocal", "times");
        pc.times.assign(t.data(), t.data() + t.size());
        p.nonlocal.rule = pc;
    } else {
        fail("nonlocal.rule", "must be \"zero\", \"mean_scaled\" or \"point_combination\"");
    }

    p.n = p.nonlocal.x0.size();
    p.m = p.varmap.A.rows();
    p.validate();
    return p;
}

inline MaopSpec parse_maop(const json& j) {
    MaopSpec s;
    s.agents = static_cast<Eigen::Index>(field(j, "", "agents").get<int>());
    s.q = num_field(j, "", "q");
    s.horizon = num_field(j, "", "horizon");
    s.alpha = vec_field(j, "", "alpha");
    s.beta = vec_field(j, "", "beta");
    s.coupling = mat_field(j, "", "coupling");
    if (j.contains("b_override")) s.b_override = mat(j["b_override"], "b_override");
    s.phi_matrix = mat_field(j, "", "phi_matrix");
    s.phi_offset = j.contains("phi_offset") ? vec(j["phi_offset"], "phi_offset")
                                            : Vec(Vec::Zero(s.agents));
    s.box_lo = vec_field(j, "", "box_lo");
    s.box_hi = vec_field(j, "", "box_hi");
    s.f_x = vec_field(j, "", "f_x");
    s.f_s = vec_field(j, "", "f_s");
    s.f_c = vec_field(j, "", "f_c");
    s.g_x = vec_field(j, "", "g_x");
    s.g_u = vec_field(j, "", "g_u");
    s.g_s = vec_field(j, "", "g_s");
    s.g_c = vec_field(j, "", "g_c");
    s.a_coeff = vec_field(j, "", "a_coeff");
    s.x0 = vec_field(j, "", "x0");
    s.validate();
    return s;
}

inline PcpSpec parse_pcp(const json& j) {
    PcpSpec s;
    s.commodities = static_cast<Eigen::Index>(field(j, "", "commodities").get<int>());
    s.state_dim = static_cast<Eigen::Index>(field(j, "", "state_dim").get<int>());
    s.q = num_field(j, "", "q");
    s.horizon = num_field(j, "", "horizon");
    s.supply_u = mat_field(j, "", "supply_u");
    s.supply_x = mat_field(j, "", "supply_x");
    s.supply_c = vec_field(j, "", "supply_c");
    s.demand_u = mat_field(j, "", "demand_u");
    s.demand_x = mat_field(j, "", "demand_x");
    s.demand_c = vec_field(j, "", "demand_c");
    s.phi_matrix = mat_field(j, "", "phi_matrix");
    s.corridor_lo = vec_field(j, "", "corridor_lo");
    s.corridor_hi = vec_field(j, "", "corridor_hi");
    s.chi = affine(field(j, "", "chi"), "chi");
    s.vartheta = affine(field(j, "", "vartheta"), "vartheta");
    s.iota = vec_field(j, "", "iota");
    Vec t = vec_field(j, "", "times");
    s.times.assign(t.data(), t.data() + t.size());
    s.x0 = vec_field(j, "", "x0");
    s.validate();
    return s;
}

} // namespace config_detail

inline LoadedConfig load_config_json(const nlohmann::json& j) {
    auto kind = config_detail::field(j, "", "kind").get<std::string>();
    if (kind == "nfdqvi") return config_detail::parse_problem(j);
    if (kind == "maop") return config_detail::parse_maop(j);
    if (kind == "pcp") return config_detail::parse_pcp(j);
    config_detail::fail("kind", "must be \"nfdqvi\", \"maop\" or \"pcp\"");
}

inline LoadedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open configuration file");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return load_config_json(j);
}

} // namespace nfdqvi
