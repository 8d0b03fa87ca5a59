#pragma once

#include "nfdqvi/solver.hpp"
#include "nfdqvi/stability.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>

namespace nfdqvi {

/// Shortest round-trip decimal form at 17 significant digits; locale-free.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Provenance line written as a comment above every CSV header.
struct CsvMeta {
    double q = 1.0;
    double horizon = 1.0;
    std::size_t nodes = 0;
    double gamma = 0.0;
    double rho = 0.0;
    std::uint64_t seed = 0;
    std::string verdicts; // e.g. "h1:pass h2:pass ... contraction:pass"

    [[nodiscard]] std::string comment_line() const {
        std::string s = "# q=" + format_number(q) + " T=" + format_number(horizon) +
                        " N=" + std::to_string(nodes) + " gamma=" + format_number(gamma) +
                        " rho=" + format_number(rho) + " seed=" + std::to_string(seed);
        if (!verdicts.empty()) s += " verdicts=" + verdicts;
        return s;
    }
};

inline std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary keeps line endings stable
    if (!out) throw ConfigError(path + ": cannot open output file");
    return out;
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                                 const CsvMeta& meta) {
    auto out = open_csv(path);
    out << meta.comment_line() << "\n";
    const auto n = traj.x_samples.front().size();
    const auto m = traj.u_samples.front().size();
    out << "s";
    for (Eigen::Index i = 1; i <= n; ++i) out << ",x_" << i;
    for (Eigen::Index i = 1; i <= m; ++i) out << ",u_" << i;
    out << ",qvi_residual\n";
    for (std::size_t k = 0; k < traj.grid.node_count; ++k) {
        out << format_number(traj.grid.node(k));
        for (Eigen::Index i = 0; i < n; ++i) out << "," << format_number(traj.x_samples[k](i));
        for (Eigen::Index i = 0; i < m; ++i) out << "," << format_number(traj.u_samples[k](i));
        out << "," << format_number(traj.qvi_residuals[k]) << "\n";
    }
}

inline void write_stability_csv(const std::string& path, const TimeGrid& grid,
                                const StabilityReport& report, const CsvMeta& meta) {
    auto out = open_csv(path);
    out << meta.comment_line() << "\n";
    out << "s,deviation,bound,ratio\n";
    for (std::size_t k = 0; k < grid.node_count; ++k) {
        double dev = report.deviation[k];
        double bound = report.bound[k];
        double ratio = bound > 0.0 ? dev / bound : (dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        out << format_number(grid.node(k)) << "," << format_number(dev) << ","
            << format_number(bound) << "," << format_number(ratio) << "\n";
    }
}

} // namespace nfdqvi
