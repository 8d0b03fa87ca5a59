#pragma once

#include "nfdqvi/core.hpp"
#include "nfdqvi/grid.hpp"
#include "nfdqvi/special.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace nfdqvi {

enum class QuadScheme { Rectangle, Trapezoid };

/// Discrete convolution weights for the Riemann-Liouville integral of order q
/// on a uniform grid: (I^q f)(s_k) ~= sum_j w[k][j] f(s_j).
///
/// Rectangle uses left-endpoint samples (w[k][k] = 0); Trapezoid is the
/// product-trapezoid (fractional Adams-Moulton) rule. Both reproduce
/// s_k^q / Gamma(q+1) exactly on constant integrands.
struct QuadratureWeights {
    TimeGrid grid;
    double q = 1.0;
    QuadScheme scheme = QuadScheme::Trapezoid;
    std::vector<std::vector<double>> w; // row k holds weights for j = 0..k

    [[nodiscard]] double row_sum(std::size_t k) const {
        double s = 0.0;
        for (double v : w[k]) s += v;
        return s;
    }
};

inline QuadratureWeights build_weights(const TimeGrid& grid, double q,
                                       QuadScheme scheme = QuadScheme::Trapezoid) {
    if (!(q > 0.0) || q > 1.0) throw std::domain_error("build_weights: q must be in (0,1]");
    if (grid.node_count < 2) throw ConfigError("build_weights: grid needs at least 2 nodes");

    const std::size_t n = grid.node_count;
    const double h = grid.step();
    QuadratureWeights out{grid, q, scheme, {}};
    out.w.resize(n);

    if (scheme == QuadScheme::Rectangle) {
        const double c = std::pow(h, q) / gamma_fn(q + 1.0);
        for (std::size_t k = 0; k < n; ++k) {
            out.w[k].assign(k + 1, 0.0);
            for (std::size_t j = 0; j < k; ++j) {
                double d = static_cast<double>(k - j);
                out.w[k][j] = c * (std::pow(d, q) - std::pow(d - 1.0, q));
            }
        }
    } else {
        const double c = std::pow(h, q) / gamma_fn(q + 2.0);
        for (std::size_t k = 0; k < n; ++k) {
            out.w[k].assign(k + 1, 0.0);
            if (k == 0) continue;
            double kd = static_cast<double>(k);
            out.w[k][0] = c * (std::pow(kd - 1.0, q + 1.0) - (kd - 1.0 - q) * std::pow(kd, q));
            for (std::size_t j = 1; j < k; ++j) {
                double d = static_cast<double>(k - j);
                out.w[k][j] =
                    c * (std::pow(d + 1.0, q + 1.0) - 2.0 * std::pow(d, q + 1.0) +
                         std::pow(d - 1.0, q + 1.0));
            }
            out.w[k][k] = c;
        }
    }
    return out;
}

/// Componentwise discrete convolution; linear in the samples.
inline std::vector<Vec> rl_integral_apply(const QuadratureWeights& weights,
                                          const std::vector<Vec>& samples) {
    const std::size_t n = weights.grid.node_count;
    if (samples.size() != n)
        throw ShapeError("rl_integral_apply: sample count does not match the grid");
    std::vector<Vec> out(n);
    const auto dim = samples.empty() ? 0 : samples[0].size();
    for (std::size_t k = 0; k < n; ++k) {
        if (samples[k].size() != dim)
            throw ShapeError("rl_integral_apply: inconsistent sample dimensions");
        Vec acc = Vec::Zero(dim);
        for (std::size_t j = 0; j <= k; ++j) acc += weights.w[k][j] * samples[j];
        out[k] = std::move(acc);
    }
    return out;
}

/// Max residual of the L1-scheme Caputo derivative against a given right-hand
/// side, over the nodes s_1..s_{N-1}. Verification/diagnostic use only.
inline double caputo_residual(const TimeGrid& grid, double q,
                              const std::vector<Vec>& x_samples,
                              const std::vector<Vec>& rhs_samples) {
    const std::size_t n = grid.node_count;
    if (n < 3) throw ConfigError("caputo_residual: need at least 3 nodes");
    if (x_samples.size() != n || rhs_samples.size() != n)
        throw ShapeError("caputo_residual: sample count does not match the grid");

    const double h = grid.step();
    const double c = std::pow(h, -q) / gamma_fn(2.0 - q);
    auto frac_pow = [q](std::size_t j) {
        return j == 0 ? 0.0 : std::pow(static_cast<double>(j), 1.0 - q);
    };

    double worst = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        Vec est = Vec::Zero(x_samples[0].size());
        for (std::size_t j = 0; j < k; ++j) {
            double b = frac_pow(j + 1) - frac_pow(j);
            est += b * (x_samples[k - j] - x_samples[k - j - 1]);
        }
        est *= c;
        worst = std::max(worst, (est - rhs_samples[k]).norm());
    }
    return worst;
}

} // namespace nfdqvi
