#include "kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace csigpr {

namespace {

void check_spec(const KernelSpec& spec) {
    if (spec.gamma <= 0.0 || spec.ell <= 0.0)
        throw std::invalid_argument("kernel: gamma and lengthscale must be positive");
    if (spec.family == KernelFamily::RQ && spec.alpha <= 0.0)
        throw std::invalid_argument("kernel: RQ alpha must be positive");
}

constexpr double kSqrt3 = 1.7320508075688772;

} // namespace

KernelSpec default_kernel(KernelFamily family) {
    KernelSpec spec;
    spec.family = family;
    if (family == KernelFamily::RQ)
        spec.ell_hi = 5.0;
    return spec;
}

const char* kernel_name(KernelFamily family) {
    switch (family) {
        case KernelFamily::RBF: return "rbf";
        case KernelFamily::Matern: return "matern15";
        case KernelFamily::RQ: return "rq";
    }
    return "?";
}

double kernel_eval_r2(const KernelSpec& spec, double r2) {
    check_spec(spec);
    switch (spec.family) {
        case KernelFamily::RBF:
            return spec.gamma * std::exp(-r2 / (2.0 * spec.ell * spec.ell));
        case KernelFamily::RQ:
            return spec.gamma *
                   std::pow(1.0 + r2 / (2.0 * spec.alpha * spec.ell * spec.ell), -spec.alpha);
        case KernelFamily::Matern: {
            const double s = kSqrt3 * std::sqrt(r2) / spec.ell;
            return spec.gamma * (1.0 + s) * std::exp(-s);
        }
    }
    return 0.0;
}

double kernel_eval(const KernelSpec& spec, const Eigen::Vector2d& z,
                   const Eigen::Vector2d& z_prime) {
    return kernel_eval_r2(spec, (z - z_prime).squaredNorm());
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixX2d& rows,
                                  const Eigen::MatrixX2d& cols) {
    Eigen::MatrixXd r2(rows.rows(), cols.rows());
    for (Eigen::Index a = 0; a < rows.rows(); ++a)
        for (Eigen::Index b = 0; b < cols.rows(); ++b)
            r2(a, b) = (rows.row(a) - cols.row(b)).squaredNorm();
    return r2;
}

void gram_from_r2_into(const KernelSpec& spec, const Eigen::MatrixXd& r2,
                       Eigen::MatrixXd& out) {
    check_spec(spec);
    const double g = spec.gamma;
    const double l2 = spec.ell * spec.ell;
    out.resize(r2.rows(), r2.cols());
    switch (spec.family) {
        case KernelFamily::RBF:
            out.array() = g * (-r2.array() / (2.0 * l2)).exp();
            break;
        case KernelFamily::RQ: {
            const double a = spec.alpha;
            out.array() = g * (1.0 + r2.array() / (2.0 * a * l2)).pow(-a);
            break;
        }
        case KernelFamily::Matern: {
            const Eigen::ArrayXXd s = kSqrt3 * r2.array().sqrt() / spec.ell;
            out.array() = g * (1.0 + s) * (-s).exp();
            break;
        }
    }
}

Eigen::MatrixXd gram_from_r2(const KernelSpec& spec, const Eigen::MatrixXd& r2) {
    Eigen::MatrixXd out;
    gram_from_r2_into(spec, r2, out);
    return out;
}

Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixX2d& rows,
                     const Eigen::MatrixX2d& cols) {
    if (rows.rows() == 0 || cols.rows() == 0)
        throw std::invalid_argument("gram: empty point list");
    return gram_from_r2(spec, squared_distances(rows, cols));
}

void kernel_gradient_r2_into(const KernelSpec& spec, const Eigen::MatrixXd& r2,
                             const Eigen::MatrixXd& k,
                             std::map<std::string, Eigen::MatrixXd>& out) {
    check_spec(spec);
    const double l2 = spec.ell * spec.ell;
    out["log_gamma"] = k;

    switch (spec.family) {
        case KernelFamily::RBF:
            out["log_ell"] = (k.array() * r2.array() / l2).matrix();
            break;
        case KernelFamily::RQ: {
            const double a = spec.alpha;
            const Eigen::ArrayXXd base = 1.0 + r2.array() / (2.0 * a * l2);
            out["log_ell"] = (k.array() * r2.array() / (l2 * base)).matrix();
            out["log_alpha"] =
                (k.array() * (-a * base.log() + r2.array() / (2.0 * l2 * base))).matrix();
            break;
        }
        case KernelFamily::Matern: {
            const Eigen::ArrayXXd s = kSqrt3 * r2.array().sqrt() / spec.ell;
            out["log_ell"] = (spec.gamma * s.square() * (-s).exp()).matrix();
            break;
        }
    }
}

std::map<std::string, Eigen::MatrixXd> kernel_gradient_r2(const KernelSpec& spec,
                                                          const Eigen::MatrixXd& r2) {
    std::map<std::string, Eigen::MatrixXd> grad;
    kernel_gradient_r2_into(spec, r2, gram_from_r2(spec, r2), grad);
    return grad;
}

std::map<std::string, Eigen::MatrixXd> kernel_gradient(const KernelSpec& spec,
                                                       const Eigen::MatrixX2d& rows,
                                                       const Eigen::MatrixX2d& cols) {
    return kernel_gradient_r2(spec, squared_distances(rows, cols));
}

} // namespace csigpr
