#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>

#include "kernels.hpp"
#include "probing.hpp"

namespace csigpr {

/// Fitted GP over one probing scheme's training set. Re and Im parts
/// share the kernel, the noise level and the single stored Cholesky
/// factor of K + (sigma_n^2 + jitter) I.
struct GprModel {
    KernelSpec kernel;
    double noise_variance = 0.0;
    Eigen::MatrixX2d train_points;
    Eigen::VectorXd train_re;
    Eigen::VectorXd train_im;
    Eigen::MatrixXd chol_lower;
    Eigen::VectorXd alpha_re; // (K + sigma^2 I)^{-1} h, per part
    Eigen::VectorXd alpha_im;
    double objective = 0.0; // summed Re+Im LML at the fitted parameters
};

/// Marginal posterior at test points, per part. var_re and var_im are
/// equal by construction (shared kernel and noise) but both are kept
/// because downstream consumers treat the parts independently.
struct GprPosterior {
    Eigen::MatrixX2d test_points;
    Eigen::VectorXd mean_re;
    Eigen::VectorXd mean_im;
    Eigen::VectorXd var_re;
    Eigen::VectorXd var_im;
};

double log_marginal_likelihood(const KernelSpec& kernel, double noise_variance,
                               const Eigen::MatrixX2d& z, const Eigen::VectorXd& h);

/// Gradient of the LML in log-parameter space, keyed like kernel_gradient.
std::map<std::string, double> lml_gradient(const KernelSpec& kernel, double noise_variance,
                                           const Eigen::MatrixX2d& z, const Eigen::VectorXd& h);

/// Maximize the summed Re+Im LML over bounded log-space hyperparameters
/// with a projected quasi-Newton method. Restart 1 starts from the inits
/// in kernel_init; further restarts draw log-uniform starts from a fixed
/// seed sequence. Best objective wins, ties to the lowest restart index.
/// P = 1 training sets optimize gamma only (distances carry no
/// information about lengthscale or shape there).
GprModel fit(const KernelSpec& kernel_init, double noise_variance, const Eigen::MatrixX2d& z,
             const Eigen::VectorXd& h_re, const Eigen::VectorXd& h_im, int restarts,
             int max_iters = 200, double grad_tol = 1e-6);

/// Posterior means and marginal variances at z_star via the stored
/// Cholesky factor; no explicit matrix inverse.
GprPosterior predict(const GprModel& model, const Eigen::MatrixX2d& z_star);

/// Full complex channel matrix: observed entries carry the training
/// values, unobserved entries the posterior means mean_re + j mean_im.
Eigen::MatrixXcd reconstruct(const GprModel& model, const GprPosterior& posterior,
                             const ProbingScheme& scheme, int n_rx, int n_tx);

/// Best linear unbiased predictor u = K B^H (B K B^H + sigma^2 I)^{-1} h
/// evaluated literally with dense algebra; selector rows pick observed
/// coordinates of the vectorized grid.
Eigen::VectorXcd blup_oracle(const Eigen::MatrixXcd& k_full, const Eigen::MatrixXd& selector,
                             double noise_variance, const Eigen::VectorXcd& h);

} // namespace csigpr
