#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "channel.hpp"
#include "gpr.hpp"
#include "kernels.hpp"
#include "probing.hpp"
#include "rng.hpp"
#include "spatial.hpp"

using namespace csigpr;

namespace {

Eigen::MatrixX2d grid_points(int n_rx, int n_tx) {
    Eigen::MatrixX2d z(n_rx * n_tx, 2);
    for (int t = 1; t <= n_tx; ++t)
        for (int r = 1; r <= n_rx; ++r) {
            const int k = (t - 1) * n_rx + (r - 1);
            z(k, 0) = r;
            z(k, 1) = t;
        }
    return z;
}

Eigen::MatrixX2d random_points(Rng& rng, int n, double span) {
    Eigen::MatrixX2d pts(n, 2);
    for (int i = 0; i < n; ++i) {
        pts(i, 0) = rng.uniform(0.0, span);
        pts(i, 1) = rng.uniform(0.0, span);
    }
    return pts;
}

Eigen::VectorXd random_vector(Rng& rng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i)
        v(i) = rng.normal();
    return v;
}

// Exact model assembly without the fit path (and without jitter).
GprModel manual_model(const KernelSpec& kernel, double noise_variance,
                      const Eigen::MatrixX2d& z, const Eigen::VectorXd& h_re,
                      const Eigen::VectorXd& h_im) {
    GprModel model;
    model.kernel = kernel;
    model.noise_variance = noise_variance;
    model.train_points = z;
    model.train_re = h_re;
    model.train_im = h_im;
    Eigen::MatrixXd shifted = gram(kernel, z, z);
    shifted.diagonal().array() += noise_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    REQUIRE(llt.info() == Eigen::Success);
    model.chol_lower = llt.matrixL();
    model.alpha_re = llt.solve(h_re);
    model.alpha_im = llt.solve(h_im);
    return model;
}

KernelSpec matern(double gamma, double ell) {
    KernelSpec spec = default_kernel(KernelFamily::Matern);
    spec.gamma = gamma;
    spec.ell = ell;
    return spec;
}

const std::vector<KernelFamily> kFamilies = {
    KernelFamily::RBF, KernelFamily::Matern, KernelFamily::RQ};

} // namespace

TEST_SUITE("gpr") {

TEST_CASE("scalar marginal likelihood closed forms") {
    Eigen::MatrixX2d z(1, 2);
    z << 1.0, 1.0;
    KernelSpec spec = default_kernel(KernelFamily::RBF);

    Eigen::VectorXd zero(1), two(1);
    zero << 0.0;
    two << 2.0;

    // -0.5 log(2 pi) for a unit-variance zero observation.
    CHECK(log_marginal_likelihood(spec, 0.0, z, zero) ==
          doctest::Approx(-0.918938533205).epsilon(1e-9));
    // -0.5 * 4/2 - 0.5 log 2 - 0.5 log(2 pi) with unit kernel and noise.
    CHECK(log_marginal_likelihood(spec, 1.0, z, two) ==
          doctest::Approx(-2.26551212348).epsilon(1e-9));
}

TEST_CASE("marginal likelihood matches a dense-inverse reference") {
    Rng rng(71);
    for (auto family : kFamilies) {
        KernelSpec spec = default_kernel(family);
        spec.gamma = 1.7;
        spec.ell = 1.2;
        const auto z = random_points(rng, 3, 5.0);
        const auto h = random_vector(rng, 3);
        const double noise = 0.3;

        Eigen::MatrixXd shifted = gram(spec, z, z);
        shifted.diagonal().array() += noise;
        const Eigen::MatrixXd inv = shifted.inverse();
        const double want = -0.5 * h.dot(inv * h) - 0.5 * std::log(shifted.determinant()) -
                            1.5 * std::log(2.0 * M_PI);
        CHECK(log_marginal_likelihood(spec, noise, z, h) ==
              doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("likelihood gradient agrees with finite differences") {
    Rng rng(72);
    const double step = 1e-6;
    for (auto family : kFamilies) {
        for (int draw = 0; draw < 50; ++draw) {
            KernelSpec spec = default_kernel(family);
            spec.gamma = std::exp(rng.uniform(std::log(spec.gamma_lo) + 0.5,
                                              std::log(spec.gamma_hi) - 0.5));
            spec.ell = std::exp(rng.uniform(std::log(spec.ell_lo) + 0.5,
                                            std::log(spec.ell_hi) - 0.5));
            if (family == KernelFamily::RQ)
                spec.alpha = std::exp(rng.uniform(std::log(spec.alpha_lo) + 0.2,
                                                  std::log(spec.alpha_hi) - 0.2));
            const auto z = random_points(rng, 10, 8.0);
            const auto h = random_vector(rng, 10);
            const double noise = 0.25;

            const auto grads = lml_gradient(spec, noise, z, h);
            for (const auto& [name, grad] : grads) {
                KernelSpec up = spec, dn = spec;
                double* up_field = nullptr;
                double* dn_field = nullptr;
                if (name == "log_gamma") { up_field = &up.gamma; dn_field = &dn.gamma; }
                else if (name == "log_ell") { up_field = &up.ell; dn_field = &dn.ell; }
                else if (name == "log_alpha") { up_field = &up.alpha; dn_field = &dn.alpha; }
                REQUIRE(up_field != nullptr);
                *up_field *= std::exp(step);
                *dn_field *= std::exp(-step);
                const double fd = (log_marginal_likelihood(up, noise, z, h) -
                                   log_marginal_likelihood(dn, noise, z, h)) /
                                  (2.0 * step);
                CHECK(std::abs(grad - fd) / std::max(1.0, std::abs(grad)) < 1e-5);
            }
        }
    }
}

TEST_CASE("zero data pulls the variance down") {
    Rng rng(73);
    KernelSpec spec = default_kernel(KernelFamily::RBF);
    const auto z = random_points(rng, 6, 4.0);
    const Eigen::VectorXd h = Eigen::VectorXd::Zero(6);
    const auto grads = lml_gradient(spec, 0.5, z, h);
    CHECK(grads.at("log_gamma") < 0.0);
}

TEST_CASE("matched scalar variance is stationary") {
    Eigen::MatrixX2d z(1, 2);
    z << 1.0, 1.0;
    Eigen::VectorXd h(1);
    h << 1.0;
    const auto grads = lml_gradient(default_kernel(KernelFamily::RBF), 0.0, z, h);
    CHECK(std::abs(grads.at("log_gamma")) < 1e-6);
}

TEST_CASE("fit recovers a known lengthscale") {
    KernelSpec truth = default_kernel(KernelFamily::RBF);
    truth.gamma = 1.0;
    truth.ell = 2.0;
    const auto z = grid_points(20, 10);
    Eigen::MatrixXd k = gram(truth, z, z);
    k.diagonal().array() += 1e-6;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    REQUIRE(llt.info() == Eigen::Success);

    Rng rng(74);
    const double noise_sd = 0.1;
    Eigen::VectorXd h_re = Eigen::MatrixXd(llt.matrixL()) * random_vector(rng, 200);
    Eigen::VectorXd h_im = Eigen::MatrixXd(llt.matrixL()) * random_vector(rng, 200);
    for (int i = 0; i < 200; ++i) {
        h_re(i) += noise_sd * rng.normal();
        h_im(i) += noise_sd * rng.normal();
    }

    const auto model = fit(default_kernel(KernelFamily::RBF), noise_sd * noise_sd, z,
                           h_re, h_im, 1);
    CHECK(model.kernel.ell > 1.5);
    CHECK(model.kernel.ell < 2.7);
}

TEST_CASE("fit never loses to its starting point and respects bounds") {
    const auto r = build_covariance({8, 0.5, 0.0, M_PI / 6});
    const auto h = sample_channel(make_kronecker(r, r), 4242);
    const auto scheme = make_scheme(ProbeCase::CaseII, 8, 8);
    const auto obs = observe(h, scheme, 0.1, 17);
    const auto [z, values] = extract_training_set(obs);

    for (auto family : kFamilies) {
        const KernelSpec init = default_kernel(family);
        const double start = log_marginal_likelihood(init, 0.05, z, values.real()) +
                             log_marginal_likelihood(init, 0.05, z, values.imag());
        const auto model = fit(init, 0.05, z, values.real(), values.imag(), 2);
        CHECK(model.objective >= start - 1e-9);
        CHECK(model.kernel.gamma >= init.gamma_lo);
        CHECK(model.kernel.gamma <= init.gamma_hi);
        CHECK(model.kernel.ell >= init.ell_lo);
        CHECK(model.kernel.ell <= init.ell_hi);
        if (family == KernelFamily::RQ) {
            CHECK(model.kernel.alpha >= init.alpha_lo);
            CHECK(model.kernel.alpha <= init.alpha_hi);
        }
    }
}

TEST_CASE("a single training point tunes only the variance") {
    Eigen::MatrixX2d z(1, 2);
    z << 3.0, 2.0;
    Eigen::VectorXd h_re(1), h_im(1);
    h_re << 1.2;
    h_im << -0.4;
    const KernelSpec init = default_kernel(KernelFamily::RQ);
    const auto model = fit(init, 0.5, z, h_re, h_im, 3);
    CHECK(model.kernel.ell == init.ell);
    CHECK(model.kernel.alpha == init.alpha);
    // Optimum of the summed scalar likelihoods: gamma + sigma^2 = |h|^2 / 2.
    CHECK(model.kernel.gamma == doctest::Approx(0.3).epsilon(1e-4));
}

TEST_CASE("fit is deterministic") {
    Rng rng(75);
    const auto z = random_points(rng, 12, 6.0);
    const auto h_re = random_vector(rng, 12);
    const auto h_im = random_vector(rng, 12);
    const auto a = fit(default_kernel(KernelFamily::RQ), 0.2, z, h_re, h_im, 3);
    const auto b = fit(default_kernel(KernelFamily::RQ), 0.2, z, h_re, h_im, 3);
    CHECK(a.kernel.gamma == b.kernel.gamma);
    CHECK(a.kernel.ell == b.kernel.ell);
    CHECK(a.kernel.alpha == b.kernel.alpha);
    CHECK(a.objective == b.objective);
}

TEST_CASE("noiseless posterior interpolates the training data") {
    Rng rng(76);
    const auto z = grid_points(4, 4);
    const auto h_re = random_vector(rng, 16);
    const auto h_im = random_vector(rng, 16);
    const auto model = manual_model(matern(2.0, 1.0), 0.0, z, h_re, h_im);
    const auto post = predict(model, z);
    CHECK((post.mean_re - h_re).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((post.mean_im - h_im).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(post.var_re.maxCoeff() <= 1e-8 * model.kernel.gamma);
    CHECK(post.var_re.minCoeff() >= 0.0);
}

TEST_CASE("posterior reverts to the prior far from the data") {
    Rng rng(77);
    const auto z = grid_points(3, 3);
    const auto model =
        manual_model(matern(2.5, 1.0), 0.1, z, random_vector(rng, 9), random_vector(rng, 9));
    Eigen::MatrixX2d far(1, 2);
    far << 100.0, 100.0;
    const auto post = predict(model, far);
    CHECK(std::abs(post.mean_re(0)) < 1e-6);
    CHECK(std::abs(post.mean_im(0)) < 1e-6);
    CHECK(post.var_re(0) == doctest::Approx(2.5).epsilon(1e-6));
}

TEST_CASE("posterior matches the textbook dense formula") {
    Rng rng(78);
    for (auto family : kFamilies) {
        KernelSpec spec = default_kernel(family);
        spec.gamma = 1.4;
        spec.ell = 1.1;
        Eigen::MatrixX2d z(3, 2), z_star(2, 2);
        z << 1.0, 1.0, 2.0, 3.0, 4.0, 2.0;
        z_star << 1.0, 2.0, 3.0, 3.0;
        const auto h_re = random_vector(rng, 3);
        const auto h_im = random_vector(rng, 3);
        const double noise = 0.2;
        const auto model = manual_model(spec, noise, z, h_re, h_im);
        const auto post = predict(model, z_star);

        Eigen::MatrixXd shifted = gram(spec, z, z);
        shifted.diagonal().array() += noise;
        const Eigen::MatrixXd inv = shifted.inverse();
        Eigen::MatrixXd cross(3, 2);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j)
                cross(i, j) = kernel_eval(spec, z.row(i).transpose(), z_star.row(j).transpose());
        const Eigen::VectorXd mean_re = cross.transpose() * inv * h_re;
        const Eigen::VectorXd mean_im = cross.transpose() * inv * h_im;
        const Eigen::MatrixXd cov =
            gram(spec, z_star, z_star) - cross.transpose() * inv * cross;

        CHECK((post.mean_re - mean_re).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((post.mean_im - mean_im).cwiseAbs().maxCoeff() < 1e-9);
        for (int j = 0; j < 2; ++j)
            CHECK(post.var_re(j) == doctest::Approx(cov(j, j)).epsilon(1e-9));
    }
}

TEST_CASE("posterior variance never exceeds the prior variance") {
    Rng rng(79);
    for (int instance = 0; instance < 50; ++instance) {
        KernelSpec spec = default_kernel(kFamilies[instance % kFamilies.size()]);
        spec.gamma = std::exp(rng.uniform(-1.0, 2.0));
        spec.ell = std::exp(rng.uniform(-1.0, 1.5));
        const int p = 2 + static_cast<int>(rng.uniform(0.0, 18.0));
        const auto z = random_points(rng, p, 8.0);
        const auto model = manual_model(spec, rng.uniform(0.1, 1.0), z,
                                        random_vector(rng, p), random_vector(rng, p));
        const auto post = predict(model, random_points(rng, 10, 8.0));
        CHECK(post.var_re.maxCoeff() <= spec.gamma + 1e-10);
        CHECK(post.var_re.minCoeff() >= 0.0);
    }
}

TEST_CASE("the two real parts share one predictive variance") {
    Rng rng(80);
    const auto z = grid_points(4, 4);
    const auto model =
        manual_model(matern(1.5, 0.8), 0.3, z, random_vector(rng, 16), random_vector(rng, 16));
    const auto post = predict(model, random_points(rng, 12, 5.0));
    CHECK((post.var_re - post.var_im).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("predicting at no points yields empty output") {
    Rng rng(81);
    const auto z = grid_points(2, 2);
    const auto model =
        manual_model(matern(1.0, 1.0), 0.1, z, random_vector(rng, 4), random_vector(rng, 4));
    const auto post = predict(model, Eigen::MatrixX2d(0, 2));
    CHECK(post.mean_re.size() == 0);
    CHECK(post.var_re.size() == 0);
}

TEST_CASE("reconstruction passes observations through and fills the rest") {
    const auto r = build_covariance({8, 0.5, 0.0, M_PI / 6});
    const auto h = sample_channel(make_kronecker(r, r), 606);
    const auto scheme = make_scheme(ProbeCase::CaseII, 8, 8);
    const auto obs = observe(h, scheme, 0.05, 3);
    const auto [z, values] = extract_training_set(obs);
    const auto model =
        fit(default_kernel(KernelFamily::RQ), 0.025, z, values.real(),
            values.imag(), 2);

    const auto test = test_indices(scheme);
    Eigen::MatrixX2d z_star(static_cast<Eigen::Index>(test.size()), 2);
    for (std::size_t k = 0; k < test.size(); ++k) {
        z_star(static_cast<Eigen::Index>(k), 0) = test[k].first;
        z_star(static_cast<Eigen::Index>(k), 1) = test[k].second;
    }
    const auto post = predict(model, z_star);
    const auto rec = reconstruct(model, post, scheme, 8, 8);

    REQUIRE(rec.rows() == 8);
    REQUIRE(rec.cols() == 8);
    CHECK(rec.cwiseAbs().allFinite());
    for (Eigen::Index k = 0; k < z.rows(); ++k) {
        const auto got = rec(static_cast<int>(z(k, 0)) - 1, static_cast<int>(z(k, 1)) - 1);
        CHECK(std::abs(got - values(k)) == 0.0);
    }
    // The posterior fill should beat predicting zero off the pilots.
    CHECK((rec - h).norm() < h.norm());

    // Overlapping or incomplete posteriors are rejected.
    const auto overlap = predict(model, z.topRows(1));
    CHECK_THROWS_AS(reconstruct(model, overlap, scheme, 8, 8), std::invalid_argument);
    const auto partial = predict(model, z_star.topRows(z_star.rows() - 1));
    CHECK_THROWS_AS(reconstruct(model, partial, scheme, 8, 8), std::invalid_argument);
}

TEST_CASE("blup with a trivial selector returns the data") {
    const int n = 6;
    const auto kernel = matern(1.3, 1.2);
    const Eigen::MatrixXcd k_full =
        gram(kernel, grid_points(3, 2), grid_points(3, 2)).cast<std::complex<double>>();
    Rng rng(82);
    Eigen::VectorXcd h(n);
    for (int i = 0; i < n; ++i)
        h(i) = rng.complex_normal(1.0);
    const auto u = blup_oracle(k_full, Eigen::MatrixXd::Identity(n, n), 1e-12, h);
    CHECK((u - h).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("blup with a white prior shrinks by half") {
    const Eigen::MatrixXcd k_full = Eigen::MatrixXcd::Identity(4, 4);
    Eigen::MatrixXd selector = Eigen::MatrixXd::Zero(2, 4);
    selector(0, 1) = 1.0;
    selector(1, 3) = 1.0;
    Eigen::VectorXcd h(2);
    h << std::complex<double>(2.0, -1.0), std::complex<double>(0.5, 3.0);
    const auto u = blup_oracle(k_full, selector, 1.0, h);
    const Eigen::VectorXcd want = 0.5 * selector.transpose().cast<std::complex<double>>() * h;
    CHECK((u - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gp posterior mean is the blup over the full grid") {
    const int nr = 8, nt = 8;
    const auto r = build_covariance({8, 0.5, 0.0, M_PI / 6});
    const auto h = sample_channel(make_kronecker(r, r), 991);
    const auto scheme = make_scheme(ProbeCase::CaseII, nr, nt);
    const double noise = 0.1;
    const auto obs = observe(h, scheme, noise, 12);
    const auto [z, values] = extract_training_set(obs);

    KernelSpec kernel = default_kernel(KernelFamily::RQ);
    kernel.gamma = 0.9;
    kernel.ell = 1.3;
    kernel.alpha = 0.8;
    const auto model = manual_model(kernel, noise, z, values.real(), values.imag());

    const auto full = grid_points(nr, nt);
    const auto post = predict(model, full);

    const Eigen::MatrixXcd k_full = gram(kernel, full, full).cast<std::complex<double>>();
    Eigen::MatrixXd selector = Eigen::MatrixXd::Zero(z.rows(), nr * nt);
    for (Eigen::Index k = 0; k < z.rows(); ++k) {
        const int vec_idx =
            (static_cast<int>(z(k, 1)) - 1) * nr + (static_cast<int>(z(k, 0)) - 1);
        selector(k, vec_idx) = 1.0;
    }
    const auto u = blup_oracle(k_full, selector, noise, values);
    for (Eigen::Index k = 0; k < full.rows(); ++k) {
        const std::complex<double> mean(post.mean_re(k), post.mean_im(k));
        CHECK(std::abs(mean - u(k)) < 1e-8);
    }
}

TEST_CASE("fit and blup validate their inputs") {
    Rng rng(83);
    const auto z = grid_points(2, 2);
    const auto good = random_vector(rng, 4);
    CHECK_THROWS_AS(fit(default_kernel(KernelFamily::RBF), 0.1, Eigen::MatrixX2d(0, 2),
                        Eigen::VectorXd(), Eigen::VectorXd(), 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit(default_kernel(KernelFamily::RBF), 0.1, z, good,
                        random_vector(rng, 3), 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit(default_kernel(KernelFamily::RBF), -0.1, z, good, good, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit(default_kernel(KernelFamily::RBF), 0.1, z, good, good, 0),
                    std::invalid_argument);

    const Eigen::MatrixXcd k_full = Eigen::MatrixXcd::Identity(4, 4);
    Eigen::VectorXcd h(2);
    h << 1.0, 1.0;
    Eigen::MatrixXd two_ones = Eigen::MatrixXd::Zero(2, 4);
    two_ones(0, 0) = 1.0;
    two_ones(0, 1) = 1.0;
    two_ones(1, 2) = 1.0;
    CHECK_THROWS_AS(blup_oracle(k_full, two_ones, 0.1, h), std::invalid_argument);
    Eigen::MatrixXd fractional = Eigen::MatrixXd::Zero(2, 4);
    fractional(0, 0) = 0.5;
    fractional(1, 1) = 1.0;
    CHECK_THROWS_AS(blup_oracle(k_full, fractional, 0.1, h), std::invalid_argument);
    CHECK_THROWS_AS(blup_oracle(k_full, Eigen::MatrixXd::Identity(3, 3), 0.1, h),
                    std::invalid_argument);
}

}
