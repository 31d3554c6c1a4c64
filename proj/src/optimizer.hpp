#pragma once

#include <Eigen/Dense>
#include <functional>

namespace csigpr {

/// Box-constrained minimization problem. value_and_grad must return the
/// objective and fill grad with the exact gradient at x. A coordinate
/// with lo == hi is held fixed by the projection.
struct BoxProblem {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> value_and_grad;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

struct OptimResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Projected L-BFGS with Armijo backtracking. Stops when the projected
/// gradient infinity norm drops below grad_tol, the line search stalls,
/// or max_iters is reached. Deterministic given inputs.
OptimResult minimize_box(const BoxProblem& problem, const Eigen::VectorXd& x0,
                         int max_iters = 200, double grad_tol = 1e-6, int history = 8);

} // namespace csigpr
