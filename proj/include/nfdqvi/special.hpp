#pragma once

#include "nfdqvi/core.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

namespace nfdqvi {

namespace detail {

// Lanczos approximation, g = 7, 9 terms (Godfrey's coefficients).
inline constexpr double lanczos_g = 7.0;
inline constexpr std::array<double, 9> lanczos_coeff = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

inline double lanczos_gamma(double x) {
    if (x < 0.5) {
        // reflection keeps the series argument in its accurate range
        return std::numbers::pi / (std::sin(std::numbers::pi * x) * lanczos_gamma(1.0 - x));
    }
    x -= 1.0;
    double acc = lanczos_coeff[0];
    for (std::size_t i = 1; i < lanczos_coeff.size(); ++i)
        acc += lanczos_coeff[i] / (x + static_cast<double>(i));
    double t = x + lanczos_g + 0.5;
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, x + 0.5) * std::exp(-t) * acc;
}

} // namespace detail

/// Gamma function on the positive half-line.
inline double gamma_fn(double x) {
    if (!(x > 0.0)) throw std::domain_error("gamma_fn: argument must be positive");
    return detail::lanczos_gamma(x);
}

inline double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma: argument must be positive");
    return std::lgamma(x);
}

inline constexpr double mittag_leffler_envelope = 50.0;

/// One-parameter Mittag-Leffler function E_q(z) = sum_n z^n / Gamma(n q + 1),
/// evaluated by direct series with Kahan summation. Truncates when the current
/// term drops below 1e-14 of the running sum and terms are decreasing.
inline double mittag_leffler(double q, double z) {
    if (!(q > 0.0) || q > 1.0) throw std::domain_error("mittag_leffler: q must be in (0,1]");
    if (std::abs(z) > mittag_leffler_envelope)
        throw std::domain_error("mittag_leffler: |z| exceeds the convergence envelope");
    if (z == 0.0) return 1.0;

    const double log_abs_z = std::log(std::abs(z));
    const bool negative = z < 0.0;
    const std::size_t cap = 10000;

    double sum = 1.0;   // n = 0 term
    double comp = 0.0;  // Kahan compensation
    double prev_mag = 1.0;
    for (std::size_t n = 1; n <= cap; ++n) {
        double mag = std::exp(static_cast<double>(n) * log_abs_z -
                              std::lgamma(static_cast<double>(n) * q + 1.0));
        // a single term beyond double range: for z > 0 the value itself
        // overflows; for z < 0 the alternating sum cannot cancel in double
        if (std::isinf(mag)) {
            if (!negative) return mag;
            throw NonConvergenceError(
                "mittag_leffler: series terms overflow before cancellation", mag,
                static_cast<long>(n));
        }
        double term = (negative && (n % 2 == 1)) ? -mag : mag;

        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;

        if (mag <= 1e-14 * std::abs(sum) && mag < prev_mag) return sum;
        prev_mag = mag;
    }
    throw NonConvergenceError("mittag_leffler: series did not converge within the iteration cap",
                              prev_mag, static_cast<long>(cap));
}

} // namespace nfdqvi
