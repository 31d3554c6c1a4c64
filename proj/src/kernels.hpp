#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>

namespace csigpr {

enum class KernelFamily { RBF, Matern, RQ };

/// Kernel hyperparameters with their box bounds. nu is fixed at 1.5
/// and never optimized; alpha is meaningful for RQ only.
struct KernelSpec {
    KernelFamily family = KernelFamily::RBF;
    double gamma = 1.0;
    double ell = 0.5;
    double alpha = 0.5;
    double nu = 1.5;
    double gamma_lo = 1e-2, gamma_hi = 1e2;
    double ell_lo = 1e-2, ell_hi = 10.0;
    double alpha_lo = 1e-1, alpha_hi = 5.0;
};

/// Spec with the default initialization and bounds for a family
/// (RQ narrows the lengthscale box to [1e-2, 5]).
KernelSpec default_kernel(KernelFamily family);

const char* kernel_name(KernelFamily family);

/// Kernel value at squared distance r2 = ||z - z'||^2.
double kernel_eval_r2(const KernelSpec& spec, double r2);

/// Kernel value for a pair of 2-D grid points.
double kernel_eval(const KernelSpec& spec, const Eigen::Vector2d& z,
                   const Eigen::Vector2d& z_prime);

/// Matrix of squared Euclidean distances between two point sets
/// (rows of P x 2 matrices).
Eigen::MatrixXd squared_distances(const Eigen::MatrixX2d& rows,
                                  const Eigen::MatrixX2d& cols);

/// Elementwise kernel over a precomputed squared-distance matrix.
Eigen::MatrixXd gram_from_r2(const KernelSpec& spec, const Eigen::MatrixXd& r2);

/// As gram_from_r2 but writing into out, reusing its storage when the
/// shape already matches (hot-loop variant).
void gram_from_r2_into(const KernelSpec& spec, const Eigen::MatrixXd& r2,
                       Eigen::MatrixXd& out);

/// Gram matrix K(rows, cols); no jitter is added here.
Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixX2d& rows,
                     const Eigen::MatrixX2d& cols);

/// Partial derivatives of the Gram matrix in log-parameter space,
/// keyed "log_gamma", "log_ell" and, for RQ, "log_alpha".
std::map<std::string, Eigen::MatrixXd> kernel_gradient(const KernelSpec& spec,
                                                       const Eigen::MatrixX2d& rows,
                                                       const Eigen::MatrixX2d& cols);

/// Same derivatives from a precomputed squared-distance matrix.
std::map<std::string, Eigen::MatrixXd> kernel_gradient_r2(const KernelSpec& spec,
                                                          const Eigen::MatrixXd& r2);

/// As kernel_gradient_r2 but taking the matching Gram matrix k and
/// writing into out's entries, reusing their storage (hot-loop variant).
void kernel_gradient_r2_into(const KernelSpec& spec, const Eigen::MatrixXd& r2,
                             const Eigen::MatrixXd& k,
                             std::map<std::string, Eigen::MatrixXd>& out);

} // namespace csigpr
