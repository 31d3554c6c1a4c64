#include "baselines.hpp"

#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>

namespace csigpr {

Eigen::MatrixXcd estimate_ls(const FullPilotObservation& obs) {
    const Eigen::MatrixXcd& s = obs.pilots;
    if (obs.received.cols() != s.cols())
        throw std::invalid_argument("estimate_ls: pilot/observation length mismatch");

    const Eigen::MatrixXcd gram = s * s.adjoint();
    Eigen::LDLT<Eigen::MatrixXcd> ldlt(gram);
    const double dmax = ldlt.vectorD().real().maxCoeff();
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().real().minCoeff() <= 1e-12 * dmax)
        throw std::invalid_argument("estimate_ls: rank-deficient pilot matrix");

    return ldlt.solve((obs.received * s.adjoint()).adjoint()).adjoint();
}

MmseFilter::MmseFilter(const Eigen::MatrixXcd& pilots, const Eigen::MatrixXcd& r_h,
                       double noise_variance, int n_rx)
    : n_rx_(n_rx), n_tx_(static_cast<int>(pilots.rows())) {
    const Eigen::Index dim = static_cast<Eigen::Index>(n_rx_) * n_tx_;
    if (r_h.rows() != dim || r_h.cols() != dim)
        throw std::invalid_argument("MmseFilter: R_H size must be (N_r N_t)^2");

    const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(n_rx_, n_rx_);
    const Eigen::MatrixXcd a = Eigen::kroneckerProduct(pilots.transpose(), identity);
    const Eigen::MatrixXcd cross = r_h * a.adjoint();
    Eigen::MatrixXcd inner = a * cross;
    inner.diagonal().array() += noise_variance;

    Eigen::LDLT<Eigen::MatrixXcd> ldlt(inner);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("MmseFilter: singular inner matrix");
    w_ = ldlt.solve(cross.adjoint()).adjoint();
    if (!w_.allFinite())
        throw std::runtime_error("MmseFilter: singular inner matrix");
}

Eigen::MatrixXcd MmseFilter::apply(const Eigen::MatrixXcd& received) const {
    if (received.rows() != n_rx_)
        throw std::invalid_argument("MmseFilter: receive dimension mismatch");
    const Eigen::Map<const Eigen::VectorXcd> y(received.data(), received.size());
    const Eigen::VectorXcd u = w_ * y;
    return Eigen::Map<const Eigen::MatrixXcd>(u.data(), n_rx_, n_tx_);
}

Eigen::MatrixXcd estimate_mmse(const FullPilotObservation& obs, const Eigen::MatrixXcd& r_h) {
    const MmseFilter filter(obs.pilots, r_h, obs.noise_variance,
                            static_cast<int>(obs.received.rows()));
    return filter.apply(obs.received);
}

} // namespace csigpr
