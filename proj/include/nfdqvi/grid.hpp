#pragma once

#include "nfdqvi/core.hpp"

#include <cmath>
#include <cstddef>

namespace nfdqvi {

/// Uniform grid on [0, T] with nodes s_k = k*h, h = T/(N-1).
struct TimeGrid {
    double horizon = 1.0;
    std::size_t node_count = 2;

    TimeGrid() = default;
    TimeGrid(double T, std::size_t N) : horizon(T), node_count(N) {
        if (!(T > 0.0)) throw ConfigError("TimeGrid: horizon must be positive");
        if (N < 2) throw ConfigError("TimeGrid: need at least 2 nodes");
    }

    [[nodiscard]] double step() const { return horizon / static_cast<double>(node_count - 1); }
    [[nodiscard]] double node(std::size_t k) const { return static_cast<double>(k) * step(); }

    /// Index of the node equal to t, or throws if t is not a node (within tolerance).
    [[nodiscard]] std::size_t node_index(double t, double tol = 1e-9) const {
        double pos = t / step();
        auto k = static_cast<std::size_t>(std::llround(pos));
        if (k >= node_count || std::abs(node(k) - t) > tol * std::max(1.0, horizon))
            throw ConfigError("TimeGrid: time " + std::to_string(t) + " is not a grid node");
        return k;
    }

    bool operator==(const TimeGrid&) const = default;
};

} // namespace nfdqvi
