#pragma once

#include <Eigen/Dense>

namespace csigpr {

/// Uniform linear array described by the quantities the correlation
/// model consumes: element count, spacing in wavelengths, mean
/// angle-of-arrival/departure and angle spread (both radians).
struct ArrayGeometry {
    int num_elements = 1;
    double spacing_wavelengths = 0.5;
    double mean_angle = 0.0;
    double angle_spread = M_PI / 6.0;
};

/// Gaussian local-scattering spatial covariance for a ULA:
///   R(m,n) = exp(j 2pi d (m-n) sin(phi)) * exp(-0.5 (2pi d (m-n) cos(phi) sigma)^2)
/// Hermitian with unit diagonal by construction; the result is
/// additionally Hermitian-symmetrized against round-off.
Eigen::MatrixXcd build_covariance(const ArrayGeometry& geometry);

/// Hermitian PSD square root via eigendecomposition; eigenvalues below
/// 1e-12 * max are clamped to zero before the square root.
Eigen::MatrixXcd matrix_sqrt(const Eigen::MatrixXcd& cov);

} // namespace csigpr
