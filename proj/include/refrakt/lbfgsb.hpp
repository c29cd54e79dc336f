#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace refrakt {

/// Returns f(x) and writes the gradient into `grad` (already sized like x).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
    int maxIters = 200;
    int memory = 8;
    double relativeTolerance = 1e-6;   // stop when |f_k - f_{k+1}| <= tol * max(|f_k|, |f_{k+1}|)
    double gradientTolerance = 1e-12;  // stop when the projected gradient max-norm falls below this
    int maxLineSearchSteps = 40;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double initialEnergy = 0.0;
    double energy = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> energyTrace;  // energy after each accepted iteration, starting with the initial value
};

/// Limited-memory quasi-Newton minimization with box constraints (lower <= x <= upper,
/// +-infinity allowed). Directions are built on the free variables, steps are projected
/// onto the box and accepted only on sufficient decrease, so the energy trace is strictly
/// decreasing. Throws NonFiniteEnergy when the starting point evaluates to NaN/inf.
LbfgsResult minimize_lbfgsb(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const LbfgsOptions& options = {});

/// Unconstrained convenience overload.
LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options = {});

}  // namespace refrakt
