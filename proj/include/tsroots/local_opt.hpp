#pragma once

#include <Eigen/Core>

#include <functional>

namespace tsroots {

struct Box {
    Eigen::VectorXd lo, hi;

    static Box unit_cube(int d) {
        return {Eigen::VectorXd::Constant(d, -1.0), Eigen::VectorXd::Constant(d, 1.0)};
    }

    Eigen::VectorXd clamp(const Eigen::VectorXd& x) const {
        return x.cwiseMax(lo).cwiseMin(hi);
    }

    bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
        return (x.array() >= lo.array() - tol).all() && (x.array() <= hi.array() + tol).all();
    }
};

/// Objective with gradient: returns f(x), fills *grad when non-null.
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct LocalOptions {
    int max_iterations = 500;
    double grad_tol = 1e-8;   // projected-gradient stop: ||pg||_inf <= grad_tol * (1 + |f|)
    double step_tol = 1e-12;  // stop when ||x_new - x||_inf below this
    int memory = 10;          // L-BFGS curvature pairs
};

struct LocalResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Gradient-projection L-BFGS on a box. Monotone (Armijo backtracking on the
/// projected path), so the result value never exceeds the start value.
/// Non-finite objective values abort the run with converged = false.
LocalResult local_minimize(const ObjectiveFn& f, const Eigen::VectorXd& start, const Box& box,
                           const LocalOptions& opts = {});

}  // namespace tsroots
