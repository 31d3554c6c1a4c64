#include "gpr.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "optimizer.hpp"
#include "rng.hpp"

namespace csigpr {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

Eigen::MatrixXd chol_with_jitter(const Eigen::MatrixXd& k, double gamma, double noise_variance) {
    double jitter = 1e-10 * gamma;
    for (int attempt = 0; attempt < 4; ++attempt) {
        Eigen::MatrixXd a = k;
        a.diagonal().array() += noise_variance + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() == Eigen::Success)
            return llt.matrixL();
        jitter *= 100.0;
    }
    throw std::runtime_error("gpr: ill-conditioned kernel matrix (Cholesky failed after jitter escalation)");
}

void check_training_inputs(const Eigen::MatrixX2d& z, const Eigen::VectorXd& h,
                           double noise_variance) {
    if (z.rows() < 1)
        throw std::invalid_argument("gpr: empty training set");
    if (z.rows() != h.size())
        throw std::invalid_argument("gpr: point/value count mismatch");
    if (noise_variance < 0.0)
        throw std::invalid_argument("gpr: negative noise variance");
}

double lml_from_factor(const Eigen::MatrixXd& chol_lower, const Eigen::VectorXd& h,
                       const Eigen::VectorXd& alpha) {
    const double quad = h.dot(alpha);
    const double logdet = 2.0 * chol_lower.diagonal().array().log().sum();
    return -0.5 * quad - 0.5 * logdet - 0.5 * static_cast<double>(h.size()) * kLog2Pi;
}

Eigen::VectorXd solve_with_factor(const Eigen::MatrixXd& chol_lower, const Eigen::VectorXd& h) {
    Eigen::VectorXd v = chol_lower.triangularView<Eigen::Lower>().solve(h);
    return chol_lower.triangularView<Eigen::Lower>().transpose().solve(v);
}

// Hyperparameter packing for the optimizer: [log gamma, log ell, (log alpha)].
struct ParamPack {
    bool has_alpha;

    explicit ParamPack(const KernelSpec& spec) : has_alpha(spec.family == KernelFamily::RQ) {}

    int size() const { return has_alpha ? 3 : 2; }

    Eigen::VectorXd pack(const KernelSpec& spec) const {
        Eigen::VectorXd x(size());
        x(0) = std::log(spec.gamma);
        x(1) = std::log(spec.ell);
        if (has_alpha)
            x(2) = std::log(spec.alpha);
        return x;
    }

    KernelSpec unpack(const KernelSpec& base, const Eigen::VectorXd& x) const {
        KernelSpec spec = base;
        spec.gamma = std::exp(x(0));
        spec.ell = std::exp(x(1));
        if (has_alpha)
            spec.alpha = std::exp(x(2));
        return spec;
    }

    Eigen::VectorXd lower(const KernelSpec& spec) const {
        Eigen::VectorXd lo(size());
        lo(0) = std::log(spec.gamma_lo);
        lo(1) = std::log(spec.ell_lo);
        if (has_alpha)
            lo(2) = std::log(spec.alpha_lo);
        return lo;
    }

    Eigen::VectorXd upper(const KernelSpec& spec) const {
        Eigen::VectorXd hi(size());
        hi(0) = std::log(spec.gamma_hi);
        hi(1) = std::log(spec.ell_hi);
        if (has_alpha)
            hi(2) = std::log(spec.alpha_hi);
        return hi;
    }

    Eigen::VectorXd gradient_vector(const std::map<std::string, double>& grad) const {
        Eigen::VectorXd g(size());
        g(0) = grad.at("log_gamma");
        g(1) = grad.at("log_ell");
        if (has_alpha)
            g(2) = grad.at("log_alpha");
        return g;
    }
};

} // namespace

double log_marginal_likelihood(const KernelSpec& kernel, double noise_variance,
                               const Eigen::MatrixX2d& z, const Eigen::VectorXd& h) {
    check_training_inputs(z, h, noise_variance);
    const Eigen::MatrixXd k = gram(kernel, z, z);
    const Eigen::MatrixXd l = chol_with_jitter(k, kernel.gamma, noise_variance);
    const Eigen::VectorXd alpha = solve_with_factor(l, h);
    return lml_from_factor(l, h, alpha);
}

std::map<std::string, double> lml_gradient(const KernelSpec& kernel, double noise_variance,
                                           const Eigen::MatrixX2d& z, const Eigen::VectorXd& h) {
    check_training_inputs(z, h, noise_variance);
    const Eigen::MatrixXd r2 = squared_distances(z, z);
    const Eigen::MatrixXd k = gram_from_r2(kernel, r2);
    const Eigen::MatrixXd l = chol_with_jitter(k, kernel.gamma, noise_variance);
    const Eigen::VectorXd alpha = solve_with_factor(l, h);

    Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(z.rows(), z.rows());
    Eigen::MatrixXd k_inv = l.triangularView<Eigen::Lower>().solve(identity);
    k_inv = l.triangularView<Eigen::Lower>().transpose().solve(k_inv);

    std::map<std::string, double> out;
    for (const auto& [name, dk] : kernel_gradient_r2(kernel, r2)) {
        const double data_term = alpha.dot(dk * alpha);
        const double trace_term = k_inv.cwiseProduct(dk).sum();
        out[name] = 0.5 * (data_term - trace_term);
    }
    return out;
}

GprModel fit(const KernelSpec& kernel_init, double noise_variance, const Eigen::MatrixX2d& z,
             const Eigen::VectorXd& h_re, const Eigen::VectorXd& h_im, int restarts,
             int max_iters, double grad_tol) {
    check_training_inputs(z, h_re, noise_variance);
    check_training_inputs(z, h_im, noise_variance);
    if (restarts < 1)
        throw std::invalid_argument("fit: restarts must be >= 1");

    const ParamPack pack(kernel_init);
    const Eigen::MatrixXd r2 = squared_distances(z, z);
    const Eigen::Index p = z.rows();

    Eigen::VectorXd lo = pack.lower(kernel_init);
    Eigen::VectorXd hi = pack.upper(kernel_init);
    Eigen::VectorXd init = pack.pack(kernel_init).cwiseMax(lo).cwiseMin(hi);
    if (p == 1) {
        // A single observation identifies only gamma; pin the rest at init.
        for (int i = 1; i < pack.size(); ++i)
            lo(i) = hi(i) = init(i);
    }

    // Negated summed LML of both parts, sharing one factorization per
    // point. All big buffers live in one workspace reused across calls,
    // and the factorization at x is kept so the gradient call right
    // after a line-search acceptance at the same x skips the refactor.
    struct Workspace {
        Eigen::VectorXd x;
        bool valid = false;
        Eigen::MatrixXd k;       // pristine Gram
        Eigen::MatrixXd shifted; // K + (noise + jitter) I
        Eigen::LLT<Eigen::MatrixXd> llt;
        Eigen::VectorXd a_re, a_im;
        Eigen::MatrixXd k_inv;
        std::map<std::string, Eigen::MatrixXd> dk;
        double neg_obj = 0.0;
    };
    auto work = std::make_shared<Workspace>();

    const auto lml_packed = [p](const Eigen::LLT<Eigen::MatrixXd>& llt,
                                const Eigen::VectorXd& h, const Eigen::VectorXd& a) {
        const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        return -0.5 * h.dot(a) - 0.5 * logdet - 0.5 * static_cast<double>(p) * kLog2Pi;
    };
    const auto objective = [&, work](const Eigen::VectorXd& x) {
        if (work->valid && work->x.size() == x.size() &&
            (work->x.array() == x.array()).all())
            return work->neg_obj;
        work->valid = false;
        const KernelSpec spec = pack.unpack(kernel_init, x);
        gram_from_r2_into(spec, r2, work->k);
        double jitter = 1e-10 * spec.gamma;
        work->shifted = work->k;
        work->shifted.diagonal().array() += noise_variance + jitter;
        work->llt.compute(work->shifted);
        for (int attempt = 1; work->llt.info() != Eigen::Success; ++attempt) {
            if (attempt >= 4)
                throw std::runtime_error(
                    "gpr: ill-conditioned kernel matrix (Cholesky failed after jitter escalation)");
            work->shifted.diagonal().array() += 99.0 * jitter;
            jitter *= 100.0;
            work->llt.compute(work->shifted);
        }
        work->a_re = h_re;
        work->llt.solveInPlace(work->a_re);
        work->a_im = h_im;
        work->llt.solveInPlace(work->a_im);
        work->neg_obj = -(lml_packed(work->llt, h_re, work->a_re) +
                          lml_packed(work->llt, h_im, work->a_im));
        work->x = x;
        work->valid = true;
        return work->neg_obj;
    };
    const auto objective_grad = [&, work, objective](const Eigen::VectorXd& x,
                                                     Eigen::VectorXd& grad) {
        const double value = objective(x);
        const KernelSpec spec = pack.unpack(kernel_init, x);
        work->k_inv.setIdentity(p, p);
        work->llt.solveInPlace(work->k_inv);
        kernel_gradient_r2_into(spec, r2, work->k, work->dk);
        std::map<std::string, double> g;
        for (const auto& [name, dk] : work->dk) {
            const double data_term =
                work->a_re.dot(dk * work->a_re) + work->a_im.dot(dk * work->a_im);
            const double trace_term = 2.0 * work->k_inv.cwiseProduct(dk).sum();
            g[name] = -0.5 * (data_term - trace_term);
        }
        grad = pack.gradient_vector(g);
        return value;
    };

    BoxProblem problem{objective, objective_grad, lo, hi};

    Eigen::VectorXd best_x;
    double best_value = std::numeric_limits<double>::infinity();
    bool any_finite = false;
    for (int r = 1; r <= restarts; ++r) {
        Eigen::VectorXd x0 = init;
        if (r > 1) {
            Rng rng(mix_seed(0x6f17c5169a11ULL, {static_cast<std::uint64_t>(r)}));
            for (int i = 0; i < pack.size(); ++i)
                x0(i) = lo(i) < hi(i) ? rng.uniform(lo(i), hi(i)) : lo(i);
        }
        OptimResult res;
        try {
            res = minimize_box(problem, x0, max_iters, grad_tol);
        } catch (const std::runtime_error&) {
            continue; // this start failed to produce a finite objective
        }
        if (std::isfinite(res.value) && res.value < best_value) {
            best_value = res.value;
            best_x = res.x;
            any_finite = true;
        }
    }
    if (!any_finite)
        throw std::runtime_error("fit: no restart produced a finite objective");

    GprModel model;
    model.kernel = pack.unpack(kernel_init, best_x);
    model.noise_variance = noise_variance;
    model.train_points = z;
    model.train_re = h_re;
    model.train_im = h_im;
    const Eigen::MatrixXd k = gram_from_r2(model.kernel, r2);
    model.chol_lower = chol_with_jitter(k, model.kernel.gamma, noise_variance);
    model.alpha_re = solve_with_factor(model.chol_lower, h_re);
    model.alpha_im = solve_with_factor(model.chol_lower, h_im);
    model.objective = -best_value;
    return model;
}

GprPosterior predict(const GprModel& model, const Eigen::MatrixX2d& z_star) {
    GprPosterior post;
    post.test_points = z_star;
    const Eigen::Index m = z_star.rows();
    post.mean_re.resize(m);
    post.mean_im.resize(m);
    post.var_re.resize(m);
    post.var_im.resize(m);
    if (m == 0)
        return post;

    const Eigen::MatrixXd k_star = gram(model.kernel, model.train_points, z_star);
    post.mean_re = k_star.transpose() * model.alpha_re;
    post.mean_im = k_star.transpose() * model.alpha_im;

    const Eigen::MatrixXd w = model.chol_lower.triangularView<Eigen::Lower>().solve(k_star);
    const double prior_var = kernel_eval_r2(model.kernel, 0.0);
    for (Eigen::Index j = 0; j < m; ++j) {
        double v = prior_var - w.col(j).squaredNorm();
        if (v < -1e-8 * model.kernel.gamma)
            throw std::runtime_error("predict: negative posterior variance (broken factorization)");
        post.var_re(j) = std::max(v, 0.0);
    }
    post.var_im = post.var_re;
    return post;
}

Eigen::MatrixXcd reconstruct(const GprModel& model, const GprPosterior& posterior,
                             const ProbingScheme& scheme, int n_rx, int n_tx) {
    if (static_cast<Eigen::Index>(scheme.observed_indices.size()) != model.train_points.rows())
        throw std::invalid_argument("reconstruct: scheme/model training size mismatch");

    Eigen::MatrixXcd out(n_rx, n_tx);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> written(n_rx, n_tx);
    written.setConstant(false);

    for (Eigen::Index k = 0; k < model.train_points.rows(); ++k) {
        const int r = static_cast<int>(model.train_points(k, 0));
        const int t = static_cast<int>(model.train_points(k, 1));
        out(r - 1, t - 1) = {model.train_re(k), model.train_im(k)};
        written(r - 1, t - 1) = true;
    }
    for (Eigen::Index k = 0; k < posterior.test_points.rows(); ++k) {
        const int r = static_cast<int>(posterior.test_points(k, 0));
        const int t = static_cast<int>(posterior.test_points(k, 1));
        if (written(r - 1, t - 1))
            throw std::invalid_argument("reconstruct: posterior overlaps an observed entry");
        out(r - 1, t - 1) = {posterior.mean_re(k), posterior.mean_im(k)};
        written(r - 1, t - 1) = true;
    }
    if (!written.all())
        throw std::invalid_argument("reconstruct: coverage gap, some grid entries unfilled");
    return out;
}

Eigen::VectorXcd blup_oracle(const Eigen::MatrixXcd& k_full, const Eigen::MatrixXd& selector,
                             double noise_variance, const Eigen::VectorXcd& h) {
    if (selector.cols() != k_full.rows())
        throw std::invalid_argument("blup_oracle: selector width must match K");
    if (selector.rows() != h.size())
        throw std::invalid_argument("blup_oracle: selector height must match h");
    for (Eigen::Index r = 0; r < selector.rows(); ++r) {
        int ones = 0;
        for (Eigen::Index c = 0; c < selector.cols(); ++c) {
            const double v = selector(r, c);
            if (v == 1.0)
                ++ones;
            else if (v != 0.0)
                throw std::invalid_argument("blup_oracle: selector must be 0/1");
        }
        if (ones != 1)
            throw std::invalid_argument("blup_oracle: selector rows must have exactly one 1");
    }

    const Eigen::MatrixXcd b = selector.cast<std::complex<double>>();
    const Eigen::MatrixXcd cross = k_full * b.adjoint();
    Eigen::MatrixXcd inner = b * cross;
    inner.diagonal().array() += noise_variance;

    Eigen::LDLT<Eigen::MatrixXcd> ldlt(inner);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("blup_oracle: singular inner matrix");
    const Eigen::VectorXcd solved = ldlt.solve(h);
    if (!solved.allFinite())
        throw std::runtime_error("blup_oracle: singular inner matrix");
    return cross * solved;
}

} // namespace csigpr
