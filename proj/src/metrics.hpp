#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "gpr.hpp"

namespace csigpr {

/// 95% chi-square(2) quantile scaling the error ellipse.
constexpr double kChi2Quantile95 = 5.991465;

/// Pooled complex prediction errors with their 95% covariance ellipse.
struct ErrorCloud {
    Eigen::MatrixX2d samples;     // (Re eps, Im eps) rows
    Eigen::Vector2d center;       // sample mean
    Eigen::Matrix2d covariance;   // sample covariance
    double confidence = 0.95;
};

/// Cloud from raw (re, im) samples; needs at least 3 of them.
ErrorCloud error_cloud_from_samples(const Eigen::MatrixX2d& samples);

/// Errors truth - estimate collected at the masked (unobserved) entries.
ErrorCloud error_cloud(const Eigen::MatrixXcd& truth, const Eigen::MatrixXcd& estimate,
                       const std::vector<std::pair<int, int>>& mask);

/// Area of the 95% ellipse: pi * q95 * sqrt(det covariance).
double ellipse_area(const ErrorCloud& cloud);

/// log2 det(I + (rho / N_t) H H^H) for one realization.
double mutual_information(const Eigen::MatrixXcd& channel, double snr_linear);

/// First-order low-SNR expansion (rho / (N_t ln 2)) tr(H H^H).
double low_snr_mi_approx(const Eigen::MatrixXcd& channel, double snr_linear);

/// 100 * estimate / truth.
double relative_mi(double estimate_mi, double truth_mi);

struct CoverageReport {
    double nominal = 0.95;
    double empirical = 0.0;     // both components inside their intervals
    double empirical_re = 0.0;
    double empirical_im = 0.0;
    long long count = 0;
};

/// Empirical coverage of the per-component +-1.96 sigma latent intervals
/// at the masked entries. An entry counts as covered when BOTH parts lie
/// inside their own intervals; per-component rates are reported alongside.
CoverageReport coverage(const Eigen::MatrixXcd& truth, const GprPosterior& posterior,
                        const std::vector<std::pair<int, int>>& mask);

} // namespace csigpr
