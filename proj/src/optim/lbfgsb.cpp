#include "refrakt/lbfgsb.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "refrakt/errors.hpp"

namespace refrakt {

namespace {

constexpr double kArmijo = 1e-4;

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

// variables sitting on a bound with the gradient pushing further out are held fixed
std::vector<bool> active_set(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
    std::vector<bool> active(x.size(), false);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        active[i] = (x[i] <= lo[i] && g[i] > 0) || (x[i] >= hi[i] && g[i] < 0);
    return active;
}

double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi) {
    return (project(x - g, lo, hi) - x).lpNorm<Eigen::Infinity>();
}

}  // namespace

LbfgsResult minimize_lbfgsb(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const LbfgsOptions& options) {
    const Eigen::Index n = x0.size();
    if (lower.size() != n || upper.size() != n) throw InvalidArgument("bound vectors must match x");
    LbfgsResult r;
    r.x = project(x0, lower, upper);
    Eigen::VectorXd g(n);
    double fx = f(r.x, g);
    if (!std::isfinite(fx) || !g.allFinite()) throw NonFiniteEnergy("objective is not finite at the starting point");
    r.initialEnergy = r.energy = fx;
    r.energyTrace.push_back(fx);
    if (n == 0) {
        r.converged = true;
        return r;
    }

    std::deque<Eigen::VectorXd> S, Y;
    std::deque<double> rho;
    Eigen::VectorXd gTrial(n);

    for (int iter = 0; iter < options.maxIters; ++iter) {
        if (projected_gradient_norm(r.x, g, lower, upper) <= options.gradientTolerance) {
            r.converged = true;
            break;
        }
        const auto active = active_set(r.x, g, lower, upper);
        Eigen::VectorXd q = g;
        for (Eigen::Index i = 0; i < n; ++i)
            if (active[i]) q[i] = 0.0;

        // two-loop recursion on the free subspace
        std::vector<double> alpha(S.size());
        for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
            alpha[k] = rho[k] * S[k].dot(q);
            q -= alpha[k] * Y[k];
        }
        if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
        for (std::size_t k = 0; k < S.size(); ++k) {
            const double beta = rho[k] * Y[k].dot(q);
            q += (alpha[k] - beta) * S[k];
        }
        Eigen::VectorXd d = -q;
        for (Eigen::Index i = 0; i < n; ++i)
            if (active[i]) d[i] = 0.0;
        if (!(d.dot(g) < 0)) {
            d = -g;
            for (Eigen::Index i = 0; i < n; ++i)
                if (active[i]) d[i] = 0.0;
            S.clear(), Y.clear(), rho.clear();
        }
        double step = S.empty() ? std::min(1.0, 1.0 / std::max(d.lpNorm<Eigen::Infinity>(), 1e-300)) : 1.0;

        bool accepted = false;
        Eigen::VectorXd xTrial;
        double fTrial = 0.0;
        for (int ls = 0; ls < options.maxLineSearchSteps; ++ls, step *= 0.5) {
            xTrial = project(r.x + step * d, lower, upper);
            fTrial = f(xTrial, gTrial);
            if (std::isfinite(fTrial) && gTrial.allFinite() && fTrial <= fx + kArmijo * g.dot(xTrial - r.x) &&
                fTrial < fx) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (S.empty()) {
                r.converged = true;  // no descent possible along the projected gradient
                break;
            }
            S.clear(), Y.clear(), rho.clear();
            continue;
        }

        const Eigen::VectorXd s = xTrial - r.x;
        const Eigen::VectorXd y = gTrial - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            S.push_back(s), Y.push_back(y), rho.push_back(1.0 / sy);
            if (static_cast<int>(S.size()) > options.memory) S.pop_front(), Y.pop_front(), rho.pop_front();
        }
        const double fPrev = fx;
        r.x = xTrial;
        g = gTrial;
        fx = fTrial;
        r.energy = fx;
        r.energyTrace.push_back(fx);
        r.iterations = iter + 1;
        if (std::abs(fPrev - fx) <= options.relativeTolerance * std::max({std::abs(fPrev), std::abs(fx), 1e-300})) {
            r.converged = true;
            break;
        }
    }
    return r;
}

LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options) {
    const Eigen::Index n = x0.size();
    const double inf = std::numeric_limits<double>::infinity();
    return minimize_lbfgsb(f, std::move(x0), Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf),
                           options);
}

}  // namespace refrakt
