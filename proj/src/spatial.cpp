#include "spatial.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace csigpr {

Eigen::MatrixXcd build_covariance(const ArrayGeometry& geometry) {
    if (geometry.num_elements < 1)
        throw std::invalid_argument("build_covariance: num_elements must be >= 1");
    if (geometry.spacing_wavelengths <= 0.0)
        throw std::invalid_argument("build_covariance: spacing must be positive");
    if (geometry.angle_spread <= 0.0)
        throw std::invalid_argument("build_covariance: angle spread must be positive");

    const int n = geometry.num_elements;
    const double d = geometry.spacing_wavelengths;
    const double phi = geometry.mean_angle;
    const double sigma = geometry.angle_spread;

    Eigen::MatrixXcd r(n, n);
    for (int m = 0; m < n; ++m) {
        for (int k = 0; k < n; ++k) {
            const double gap = static_cast<double>(m - k);
            const double phase = 2.0 * M_PI * d * gap * std::sin(phi);
            const double damp = 2.0 * M_PI * d * gap * std::cos(phi) * sigma;
            r(m, k) = std::polar(std::exp(-0.5 * damp * damp), phase);
        }
    }
    return 0.5 * (r + r.adjoint().eval());
}

Eigen::MatrixXcd matrix_sqrt(const Eigen::MatrixXcd& cov) {
    if (!cov.isApprox(cov.adjoint(), 1e-10))
        throw std::invalid_argument("matrix_sqrt: input is not Hermitian");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("matrix_sqrt: eigendecomposition failed");

    Eigen::VectorXd vals = eig.eigenvalues();
    const double floor = 1e-12 * std::max(vals.maxCoeff(), 0.0);
    Eigen::VectorXd roots(vals.size());
    for (Eigen::Index i = 0; i < vals.size(); ++i)
        roots(i) = vals(i) > floor ? std::sqrt(vals(i)) : 0.0;

    return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().adjoint();
}

} // namespace csigpr
