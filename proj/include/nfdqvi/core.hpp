#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace nfdqvi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when an iterative process exhausts its iteration budget.
/// Carries the last residual/distance so callers can report how close it got.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, double last_residual, long iterations)
        : std::runtime_error(what), last_residual(last_residual), iterations(iterations) {}

    double last_residual;
    long iterations;
};

/// Thrown on dimension/length mismatches between coupled objects.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when instance data violates a structural invariant.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline double spectral_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

/// Smallest eigenvalue of the symmetric part (A + A^T)/2.
inline double min_symmetric_eigenvalue(const Mat& a) {
    if (a.size() == 0) return 0.0;
    Mat sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    return es.eigenvalues().minCoeff();
}

} // namespace nfdqvi
