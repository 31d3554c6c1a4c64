#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace csigpr {

enum class ModelKind { Kronecker, Weichselberger };

/// Channel statistics: spatial covariances plus, for Weichselberger,
/// the eigenbases of both sides and the power-coupling matrix Omega.
/// Factor caches (square roots, eigenbases) are filled by the factories
/// so per-trial sampling does no decompositions.
struct ChannelModel {
    ModelKind kind = ModelKind::Kronecker;
    Eigen::MatrixXcd r_tx;
    Eigen::MatrixXcd r_rx;
    Eigen::MatrixXd coupling;      // Omega (n_rx x n_tx), Weichselberger only
    Eigen::MatrixXcd r_tx_sqrt;    // Kronecker factors
    Eigen::MatrixXcd r_rx_sqrt;
    Eigen::MatrixXcd u_tx;         // Weichselberger eigenbases
    Eigen::MatrixXcd u_rx;

    int n_rx() const { return static_cast<int>(r_rx.rows()); }
    int n_tx() const { return static_cast<int>(r_tx.rows()); }
};

ChannelModel make_kronecker(const Eigen::MatrixXcd& r_tx, const Eigen::MatrixXcd& r_rx);

ChannelModel make_weichselberger(const Eigen::MatrixXcd& r_tx, const Eigen::MatrixXcd& r_rx,
                                 const Eigen::MatrixXd& coupling);

/// H = R_rx^{1/2} G R_tx^{1/2}, G i.i.d. CN(0,1); deterministic in seed.
Eigen::MatrixXcd sample_kronecker(const ChannelModel& model, std::uint64_t rng_seed);

/// H = U_rx A U_tx^H with A_ij ~ CN(0, Omega_ij); deterministic in seed.
Eigen::MatrixXcd sample_weichselberger(const ChannelModel& model, std::uint64_t rng_seed);

/// Dispatch on model.kind.
Eigen::MatrixXcd sample_channel(const ChannelModel& model, std::uint64_t rng_seed);

/// Covariance of vec(H) under column-major vectorization:
/// Kronecker -> R_tx^T kron R_rx; Weichselberger ->
/// (U_tx^* kron U_rx) diag(vec(Omega)) (U_tx^T kron U_rx^H).
Eigen::MatrixXcd vectorized_covariance(const ChannelModel& model);

/// Omega = (1-richness) * lambda_rx lambda_tx^T + richness * Exp(1) i.i.d.,
/// rescaled so the total power is n_rx * n_tx.
Eigen::MatrixXd default_coupling(const Eigen::MatrixXcd& r_tx, const Eigen::MatrixXcd& r_rx,
                                 double richness, std::uint64_t rng_seed);

} // namespace csigpr
