#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kernels.hpp"
#include "rng.hpp"

using namespace csigpr;

namespace {

KernelSpec make_spec(KernelFamily family, double gamma, double ell, double alpha = 0.5) {
    KernelSpec spec = default_kernel(family);
    spec.gamma = gamma;
    spec.ell = ell;
    spec.alpha = alpha;
    return spec;
}

Eigen::MatrixX2d random_points(Rng& rng, int n, double span) {
    Eigen::MatrixX2d pts(n, 2);
    for (int i = 0; i < n; ++i) {
        pts(i, 0) = rng.uniform(0.0, span);
        pts(i, 1) = rng.uniform(0.0, span);
    }
    return pts;
}

const std::vector<KernelFamily> kFamilies = {
    KernelFamily::RBF, KernelFamily::Matern, KernelFamily::RQ};

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("zero distance returns the variance for every family") {
    for (auto family : kFamilies) {
        const auto spec = make_spec(family, 3.7, 1.3, 0.8);
        CHECK(kernel_eval_r2(spec, 0.0) == doctest::Approx(3.7).epsilon(1e-14));
    }
}

TEST_CASE("rbf at r equal to ell") {
    // exp(-2) at r = 2, ell = 1.
    const auto spec = make_spec(KernelFamily::RBF, 1.0, 1.0);
    CHECK(kernel_eval_r2(spec, 4.0) == doctest::Approx(0.135335283237).epsilon(1e-10));
}

TEST_CASE("rational quadratic approaches rbf as alpha grows") {
    const auto rbf = make_spec(KernelFamily::RBF, 1.0, 1.5);
    auto rq = make_spec(KernelFamily::RQ, 1.0, 1.5);
    rq.alpha = 1e6;
    for (double r : {1.0, 2.0, 3.0}) {
        CHECK(kernel_eval_r2(rq, r * r) ==
              doctest::Approx(kernel_eval_r2(rbf, r * r)).epsilon(1e-4));
    }
}

TEST_CASE("matern 1.5 matches a Bessel-function reference") {
    // Rows of {r, ell, gamma, value}; values from an arbitrary-precision
    // evaluation of the half-integer Matern form.
    const double table[][4] = {
        {3.919802, 1.291708, 32.564177, 1.06258270372038645},
        {0.915614, 4.333468, 18.316161, 17.3515249572233999},
        {0.743087, 4.108742, 1.922908, 1.84613367344535103},
        {5.232066, 0.651858, 4.581115, 0.0000626048144442163145},
        {5.123004, 6.632132, 6.233908, 3.82417025210069687},
        {2.717706, 5.056722, 47.388062, 36.0701576155763396},
        {6.94638, 3.233776, 48.813943, 5.5810516256553529},
        {0.606663, 6.881901, 14.515984, 14.3630542874603598},
        {1.773848, 1.030559, 15.458667, 3.12203795902928292},
        {9.80271, 1.527738, 29.100928, 0.0052550022121596878},
        {7.685016, 3.041941, 27.409836, 1.85342017676138185},
        {0.800328, 0.570849, 10.337638, 3.12531758286535934},
        {8.18078, 3.477979, 15.741651, 1.35850407292577502},
        {7.047464, 3.680157, 15.023361, 2.35202025349687393},
        {9.542835, 5.622056, 12.242621, 2.55008481143985487},
        {6.914363, 4.249052, 43.763118, 9.97553965777642472},
        {8.766871, 2.374708, 49.009734, 0.605562587686125508},
        {1.460886, 3.40317, 37.869189, 31.3910683868976142},
        {1.866215, 3.962808, 2.008402, 1.6130388610100541},
        {8.035179, 6.14011, 28.672646, 9.70920704723027419},
    };
    for (const auto& row : table) {
        const auto spec = make_spec(KernelFamily::Matern, row[2], row[1]);
        CHECK(kernel_eval_r2(spec, row[0] * row[0]) ==
              doctest::Approx(row[3]).epsilon(1e-10));
    }
}

TEST_CASE("gram matrices are symmetric and positive semidefinite") {
    Rng rng(41);
    for (auto family : kFamilies) {
        const auto spec = make_spec(family, 2.0, 1.1, 0.7);
        const auto pts = random_points(rng, 20, 12.0);
        const auto k = gram(spec, pts, pts);
        CHECK((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-14);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * spec.gamma);
    }
}

TEST_CASE("collinear equispaced points give a Toeplitz gram matrix") {
    Eigen::MatrixX2d pts(5, 2);
    for (int i = 0; i < 5; ++i) {
        pts(i, 0) = static_cast<double>(i + 1);
        pts(i, 1) = 1.0;
    }
    for (auto family : kFamilies) {
        const auto k = gram(make_spec(family, 1.0, 0.9), pts, pts);
        for (Eigen::Index i = 1; i < 5; ++i)
            for (Eigen::Index j = 1; j < 5; ++j)
                CHECK(std::abs(k(i, j) - k(i - 1, j - 1)) < 1e-14);
    }
}

TEST_CASE("log-gamma gradient equals the gram matrix") {
    Rng rng(42);
    for (auto family : kFamilies) {
        const auto spec = make_spec(family, 2.9, 1.7, 1.2);
        const auto pts = random_points(rng, 8, 6.0);
        const auto r2 = squared_distances(pts, pts);
        const auto k = gram_from_r2(spec, r2);
        const auto grads = kernel_gradient_r2(spec, r2);
        CHECK((grads.at("log_gamma") - k).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("rbf log-ell gradient at unit distance and scale") {
    // gamma * (r^2 / ell^2) * exp(-r^2 / (2 ell^2)) = exp(-1/2) at r = ell = gamma = 1.
    const auto spec = make_spec(KernelFamily::RBF, 1.0, 1.0);
    Eigen::MatrixXd r2(1, 1);
    r2(0, 0) = 1.0;
    const auto grads = kernel_gradient_r2(spec, r2);
    CHECK(grads.at("log_ell")(0, 0) == doctest::Approx(0.606530659713).epsilon(1e-10));
}

TEST_CASE("analytic gradients agree with finite differences") {
    Rng rng(43);
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
            const auto pts = random_points(rng, 10, 8.0);
            const auto r2 = squared_distances(pts, pts);
            const auto grads = kernel_gradient_r2(spec, r2);
            for (const auto& [name, grad] : grads) {
                KernelSpec up = spec;
                KernelSpec dn = spec;
                double* up_field = nullptr;
                double* dn_field = nullptr;
                if (name == "log_gamma") { up_field = &up.gamma; dn_field = &dn.gamma; }
                else if (name == "log_ell") { up_field = &up.ell; dn_field = &dn.ell; }
                else if (name == "log_alpha") { up_field = &up.alpha; dn_field = &dn.alpha; }
                REQUIRE(up_field != nullptr);
                *up_field *= std::exp(step);
                *dn_field *= std::exp(-step);
                const Eigen::MatrixXd fd =
                    (gram_from_r2(up, r2) - gram_from_r2(dn, r2)) / (2.0 * step);
                const double scale = std::max(1.0, grad.cwiseAbs().maxCoeff());
                CHECK((grad - fd).cwiseAbs().maxCoeff() / scale < 1e-5);
            }
        }
    }
}

TEST_CASE("kernels decay monotonically in distance") {
    for (auto family : kFamilies) {
        const auto spec = make_spec(family, 1.0, 1.4, 0.6);
        double prev = kernel_eval_r2(spec, 0.0);
        for (int r = 1; r <= 50; ++r) {
            const double cur = kernel_eval_r2(spec, static_cast<double>(r) * r);
            CHECK(cur <= prev);
            prev = cur;
        }
    }
}

TEST_CASE("kernel_eval is symmetric in its arguments") {
    Rng rng(44);
    const auto spec = make_spec(KernelFamily::RQ, 1.5, 0.8, 0.9);
    for (int i = 0; i < 1000; ++i) {
        Eigen::Vector2d a(rng.uniform(0.0, 30.0), rng.uniform(0.0, 30.0));
        Eigen::Vector2d b(rng.uniform(0.0, 30.0), rng.uniform(0.0, 30.0));
        CHECK(kernel_eval(spec, a, b) == kernel_eval(spec, b, a));
    }
}

TEST_CASE("non-positive hyperparameters are rejected") {
    for (auto family : kFamilies) {
        auto bad = make_spec(family, 0.0, 1.0);
        CHECK_THROWS_AS(kernel_eval_r2(bad, 1.0), std::invalid_argument);
        bad = make_spec(family, 1.0, -1.0);
        CHECK_THROWS_AS(kernel_eval_r2(bad, 1.0), std::invalid_argument);
    }
    auto bad = make_spec(KernelFamily::RQ, 1.0, 1.0, 0.0);
    CHECK_THROWS_AS(kernel_eval_r2(bad, 1.0), std::invalid_argument);
}

TEST_CASE("only the rational quadratic exposes an alpha gradient") {
    Eigen::MatrixXd r2(2, 2);
    r2 << 0.0, 1.0, 1.0, 0.0;
    for (auto family : {KernelFamily::RBF, KernelFamily::Matern}) {
        const auto spec = make_spec(family, 1.0, 1.0);
        const auto grads = kernel_gradient_r2(spec, r2);
        CHECK(grads.count("log_alpha") == 0);
        CHECK(grads.count("log_gamma") == 1);
        CHECK(grads.count("log_ell") == 1);
    }
    const auto rq = make_spec(KernelFamily::RQ, 1.0, 1.0);
    CHECK(kernel_gradient_r2(rq, r2).count("log_alpha") == 1);
}

TEST_CASE("in-place gram evaluation matches the allocating one") {
    Rng rng(45);
    for (auto family : kFamilies) {
        const auto spec = make_spec(family, 1.8, 1.2, 0.9);
        const auto pts = random_points(rng, 12, 9.0);
        const auto r2 = squared_distances(pts, pts);
        Eigen::MatrixXd out;
        gram_from_r2_into(spec, r2, out);
        CHECK((out - gram_from_r2(spec, r2)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("default kernels carry the documented bounds") {
    const auto rbf = default_kernel(KernelFamily::RBF);
    CHECK(rbf.gamma == 1.0);
    CHECK(rbf.ell == 0.5);
    CHECK(rbf.gamma_lo == 1e-2);
    CHECK(rbf.gamma_hi == 1e2);
    CHECK(rbf.ell_lo == 1e-2);
    CHECK(rbf.ell_hi == 10.0);
    const auto rq = default_kernel(KernelFamily::RQ);
    CHECK(rq.alpha == 0.5);
    CHECK(rq.alpha_lo == 1e-1);
    CHECK(rq.alpha_hi == 5.0);
    CHECK(rq.ell_hi == 5.0);
    const auto mat = default_kernel(KernelFamily::Matern);
    CHECK(mat.nu == 1.5);
}

TEST_CASE("kernel names round-trip") {
    CHECK(kernel_name(KernelFamily::RBF) == std::string("rbf"));
    CHECK(kernel_name(KernelFamily::Matern) == std::string("matern15"));
    CHECK(kernel_name(KernelFamily::RQ) == std::string("rq"));
}

}
