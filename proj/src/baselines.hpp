#pragma once

#include <Eigen/Dense>

namespace csigpr {

/// Full-array training round: Y = H S + N with row-orthonormal pilots S
/// spanning all transmit antennas (T >= N_t).
struct FullPilotObservation {
    Eigen::MatrixXcd received; // N_r x T
    Eigen::MatrixXcd pilots;   // N_t x T, S S^H = I
    double noise_variance = 0.0;
};

/// Least squares: H_LS = Y S^H (S S^H)^{-1}.
Eigen::MatrixXcd estimate_ls(const FullPilotObservation& obs);

/// Linear MMSE filter W = R_H A^H (A R_H A^H + sigma_n^2 I)^{-1} with
/// A = S^T kron I_{N_r}; W depends only on (pilots, R_H, noise), so the
/// harness builds it once per model and SNR and applies it per trial.
class MmseFilter {
public:
    MmseFilter(const Eigen::MatrixXcd& pilots, const Eigen::MatrixXcd& r_h,
               double noise_variance, int n_rx);

    Eigen::MatrixXcd apply(const Eigen::MatrixXcd& received) const;

private:
    Eigen::MatrixXcd w_;
    int n_rx_;
    int n_tx_;
};

/// MMSE estimate via the filter above.
Eigen::MatrixXcd estimate_mmse(const FullPilotObservation& obs, const Eigen::MatrixXcd& r_h);

} // namespace csigpr
