#include "channel.hpp"

#include <cmath>
#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>

#include "rng.hpp"
#include "spatial.hpp"

namespace csigpr {

namespace {

Eigen::VectorXd clamped_eigenvalues(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>& eig) {
    return eig.eigenvalues().cwiseMax(0.0);
}

} // namespace

ChannelModel make_kronecker(const Eigen::MatrixXcd& r_tx, const Eigen::MatrixXcd& r_rx) {
    ChannelModel model;
    model.kind = ModelKind::Kronecker;
    model.r_tx = r_tx;
    model.r_rx = r_rx;
    model.r_tx_sqrt = matrix_sqrt(r_tx);
    model.r_rx_sqrt = matrix_sqrt(r_rx);
    return model;
}

ChannelModel make_weichselberger(const Eigen::MatrixXcd& r_tx, const Eigen::MatrixXcd& r_rx,
                                 const Eigen::MatrixXd& coupling) {
    if (coupling.rows() != r_rx.rows() || coupling.cols() != r_tx.rows())
        throw std::invalid_argument("make_weichselberger: coupling shape mismatch");
    if ((coupling.array() < 0.0).any())
        throw std::invalid_argument("make_weichselberger: coupling must be nonnegative");

    ChannelModel model;
    model.kind = ModelKind::Weichselberger;
    model.r_tx = r_tx;
    model.r_rx = r_rx;
    model.coupling = coupling;
    model.u_tx = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(r_tx).eigenvectors();
    model.u_rx = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(r_rx).eigenvectors();
    return model;
}

Eigen::MatrixXcd sample_kronecker(const ChannelModel& model, std::uint64_t rng_seed) {
    if (model.kind != ModelKind::Kronecker)
        throw std::invalid_argument("sample_kronecker: model is not Kronecker");

    Rng rng(rng_seed);
    const int nr = model.n_rx(), nt = model.n_tx();
    Eigen::MatrixXcd g(nr, nt);
    for (int j = 0; j < nt; ++j)
        for (int i = 0; i < nr; ++i)
            g(i, j) = rng.complex_normal(1.0);
    return model.r_rx_sqrt * g * model.r_tx_sqrt;
}

Eigen::MatrixXcd sample_weichselberger(const ChannelModel& model, std::uint64_t rng_seed) {
    if (model.kind != ModelKind::Weichselberger)
        throw std::invalid_argument("sample_weichselberger: model is not Weichselberger");

    Rng rng(rng_seed);
    const int nr = model.n_rx(), nt = model.n_tx();
    Eigen::MatrixXcd a(nr, nt);
    for (int j = 0; j < nt; ++j)
        for (int i = 0; i < nr; ++i)
            a(i, j) = rng.complex_normal(model.coupling(i, j));
    return model.u_rx * a * model.u_tx.adjoint();
}

Eigen::MatrixXcd sample_channel(const ChannelModel& model, std::uint64_t rng_seed) {
    return model.kind == ModelKind::Kronecker ? sample_kronecker(model, rng_seed)
                                              : sample_weichselberger(model, rng_seed);
}

Eigen::MatrixXcd vectorized_covariance(const ChannelModel& model) {
    if (model.kind == ModelKind::Kronecker)
        return Eigen::kroneckerProduct(model.r_tx.transpose(), model.r_rx);

    const Eigen::MatrixXcd basis =
        Eigen::kroneckerProduct(model.u_tx.conjugate(), model.u_rx);
    Eigen::VectorXd omega_vec(model.coupling.size());
    const int nr = model.n_rx(), nt = model.n_tx();
    for (int j = 0; j < nt; ++j)
        for (int i = 0; i < nr; ++i)
            omega_vec(i + j * nr) = model.coupling(i, j);
    return basis * omega_vec.asDiagonal() * basis.adjoint();
}

Eigen::MatrixXd default_coupling(const Eigen::MatrixXcd& r_tx, const Eigen::MatrixXcd& r_rx,
                                 double richness, std::uint64_t rng_seed) {
    if (richness < 0.0 || richness > 1.0)
        throw std::invalid_argument("default_coupling: richness must lie in [0, 1]");

    const Eigen::VectorXd lambda_rx =
        clamped_eigenvalues(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(r_rx));
    const Eigen::VectorXd lambda_tx =
        clamped_eigenvalues(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(r_tx));

    const int nr = static_cast<int>(lambda_rx.size());
    const int nt = static_cast<int>(lambda_tx.size());
    Eigen::MatrixXd omega = (1.0 - richness) * (lambda_rx * lambda_tx.transpose());

    Rng rng(rng_seed);
    for (int j = 0; j < nt; ++j)
        for (int i = 0; i < nr; ++i)
            omega(i, j) += richness * (-std::log(1.0 - rng.uniform()));

    const double total = omega.sum();
    if (total <= 0.0)
        throw std::runtime_error("default_coupling: degenerate coupling");
    return omega * (static_cast<double>(nr) * nt / total);
}

} // namespace csigpr
