#include "metrics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace csigpr {

ErrorCloud error_cloud_from_samples(const Eigen::MatrixX2d& samples) {
    if (samples.rows() < 3)
        throw std::invalid_argument("error_cloud: need at least 3 samples");

    ErrorCloud cloud;
    cloud.samples = samples;
    cloud.center = samples.colwise().mean();
    const Eigen::MatrixX2d centered = samples.rowwise() - cloud.center.transpose();
    cloud.covariance =
        (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
    return cloud;
}

ErrorCloud error_cloud(const Eigen::MatrixXcd& truth, const Eigen::MatrixXcd& estimate,
                       const std::vector<std::pair<int, int>>& mask) {
    if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
        throw std::invalid_argument("error_cloud: shape mismatch");

    Eigen::MatrixX2d samples(static_cast<Eigen::Index>(mask.size()), 2);
    for (std::size_t k = 0; k < mask.size(); ++k) {
        const auto [r, t] = mask[k];
        const std::complex<double> eps = truth(r - 1, t - 1) - estimate(r - 1, t - 1);
        samples(static_cast<Eigen::Index>(k), 0) = eps.real();
        samples(static_cast<Eigen::Index>(k), 1) = eps.imag();
    }
    return error_cloud_from_samples(samples);
}

double ellipse_area(const ErrorCloud& cloud) {
    const double det = cloud.covariance.determinant();
    return M_PI * kChi2Quantile95 * std::sqrt(std::max(det, 0.0));
}

double mutual_information(const Eigen::MatrixXcd& channel, double snr_linear) {
    if (snr_linear <= 0.0)
        throw std::invalid_argument("mutual_information: SNR must be positive");
    if (!channel.allFinite())
        throw std::invalid_argument("mutual_information: non-finite channel entries");

    const double scale = snr_linear / static_cast<double>(channel.cols());
    Eigen::MatrixXcd m = scale * (channel * channel.adjoint());
    m.diagonal().array() += 1.0;

    const Eigen::LLT<Eigen::MatrixXcd> llt(m);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("mutual_information: Gram matrix not positive definite");
    const double log_det =
        2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
    return log_det / std::log(2.0);
}

double low_snr_mi_approx(const Eigen::MatrixXcd& channel, double snr_linear) {
    const double trace = channel.squaredNorm();
    return snr_linear / (static_cast<double>(channel.cols()) * std::log(2.0)) * trace;
}

double relative_mi(double estimate_mi, double truth_mi) {
    if (truth_mi <= 0.0)
        throw std::invalid_argument("relative_mi: truth MI must be positive");
    return 100.0 * estimate_mi / truth_mi;
}

CoverageReport coverage(const Eigen::MatrixXcd& truth, const GprPosterior& posterior,
                        const std::vector<std::pair<int, int>>& mask) {
    std::map<std::pair<int, int>, Eigen::Index> where;
    for (Eigen::Index k = 0; k < posterior.test_points.rows(); ++k)
        where[{static_cast<int>(posterior.test_points(k, 0)),
               static_cast<int>(posterior.test_points(k, 1))}] = k;

    CoverageReport report;
    long long covered_both = 0, covered_re = 0, covered_im = 0;
    for (const auto& entry : mask) {
        const auto it = where.find(entry);
        if (it == where.end())
            throw std::invalid_argument("coverage: posterior does not cover the mask");
        const Eigen::Index k = it->second;
        const std::complex<double> h = truth(entry.first - 1, entry.second - 1);

        const double half_re = 1.96 * std::sqrt(posterior.var_re(k));
        const double half_im = 1.96 * std::sqrt(posterior.var_im(k));
        const bool in_re = std::abs(h.real() - posterior.mean_re(k)) <= half_re;
        const bool in_im = std::abs(h.imag() - posterior.mean_im(k)) <= half_im;
        covered_re += in_re;
        covered_im += in_im;
        covered_both += in_re && in_im;
    }

    report.count = static_cast<long long>(mask.size());
    if (report.count > 0) {
        report.empirical = static_cast<double>(covered_both) / report.count;
        report.empirical_re = static_cast<double>(covered_re) / report.count;
        report.empirical_im = static_cast<double>(covered_im) / report.count;
    }
    return report;
}

} // namespace csigpr
