#include "optimizer.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace csigpr {

namespace {

Eigen::VectorXd clamp_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

// Coordinates pinned at a bound the gradient pushes against.
Eigen::Array<bool, Eigen::Dynamic, 1> blocked_set(const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& g,
                                                  const Eigen::VectorXd& lo,
                                                  const Eigen::VectorXd& hi) {
    Eigen::Array<bool, Eigen::Dynamic, 1> blocked(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double margin = 1e-12 * std::max(1.0, std::abs(x(i)));
        const bool at_lo = x(i) <= lo(i) + margin && g(i) > 0.0;
        const bool at_hi = x(i) >= hi(i) - margin && g(i) < 0.0;
        blocked(i) = at_lo || at_hi;
    }
    return blocked;
}

Eigen::VectorXd masked(const Eigen::VectorXd& v,
                       const Eigen::Array<bool, Eigen::Dynamic, 1>& blocked) {
    Eigen::VectorXd out = v;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (blocked(i))
            out(i) = 0.0;
    return out;
}

} // namespace

OptimResult minimize_box(const BoxProblem& problem, const Eigen::VectorXd& x0,
                         int max_iters, double grad_tol, int history) {
    if (problem.lo.size() != x0.size() || problem.hi.size() != x0.size())
        throw std::invalid_argument("minimize_box: bound/initial size mismatch");
    if ((problem.lo.array() > problem.hi.array()).any())
        throw std::invalid_argument("minimize_box: lo > hi");

    Eigen::VectorXd x = clamp_box(x0, problem.lo, problem.hi);
    Eigen::VectorXd g(x.size());
    double f = problem.value_and_grad(x, g);
    if (!std::isfinite(f))
        throw std::runtime_error("minimize_box: objective not finite at start");

    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs; // (s, y)
    OptimResult result;
    result.x = x;
    result.value = f;

    for (int iter = 0; iter < max_iters; ++iter) {
        const auto blocked = blocked_set(x, g, problem.lo, problem.hi);
        const Eigen::VectorXd pg = masked(g, blocked);
        if (pg.lpNorm<Eigen::Infinity>() <= grad_tol) {
            result.converged = true;
            break;
        }

        // Two-loop recursion over stored curvature pairs, restricted to
        // the free coordinates so the direction never pushes into a bound.
        Eigen::VectorXd q = pg;
        std::vector<double> alpha(pairs.size());
        for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
            const auto& [s, y] = pairs[static_cast<std::size_t>(i)];
            const double rho = 1.0 / y.dot(s);
            alpha[static_cast<std::size_t>(i)] = rho * s.dot(q);
            q -= alpha[static_cast<std::size_t>(i)] * y;
        }
        if (!pairs.empty()) {
            const auto& [s, y] = pairs.back();
            q *= s.dot(y) / y.dot(y);
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& [s, y] = pairs[i];
            const double rho = 1.0 / y.dot(s);
            const double beta = rho * y.dot(q);
            q += (alpha[i] - beta) * s;
        }
        Eigen::VectorXd direction = masked(-q, blocked);
        bool along_pg = false;
        if (direction.dot(pg) >= 0.0) {
            direction = -pg; // not a descent direction, fall back
            along_pg = true;
        }

        // Backtracking Armijo search along the box-projected path; when
        // the quasi-Newton direction fails, retry once along -pg before
        // declaring a stall.
        const double c1 = 1e-4;
        Eigen::VectorXd x_new;
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            if (attempt == 1) {
                if (along_pg)
                    break;
                direction = -pg;
                pairs.clear();
            }
            double step = 1.0;
            for (int ls = 0; ls < 30; ++ls) {
                x_new = clamp_box(x + step * direction, problem.lo, problem.hi);
                if ((x_new - x).lpNorm<Eigen::Infinity>() == 0.0)
                    break;
                f_new = problem.value(x_new);
                if (std::isfinite(f_new) && f_new <= f + c1 * g.dot(x_new - x)) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
        }
        if (!accepted)
            break; // stalled; best point so far stands

        Eigen::VectorXd g_new(x.size());
        const double f_check = problem.value_and_grad(x_new, g_new);
        f_new = f_check;

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            pairs.emplace_back(s, y);
            if (static_cast<int>(pairs.size()) > history)
                pairs.pop_front();
        }

        x = x_new;
        g = g_new;
        f = f_new;
        result.iterations = iter + 1;
    }

    // Armijo only ever accepts improvements, so the final iterate is best.
    result.x = x;
    result.value = f;
    return result;
}

} // namespace csigpr
