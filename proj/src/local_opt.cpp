#include "tsroots/local_opt.hpp"

#include <cmath>
#include <deque>

namespace tsroots {

namespace {

struct CurvaturePair {
    Eigen::VectorXd s, y;
    double rho;
};

// Standard two-loop recursion; H0 scaled by the latest pair.
Eigen::VectorXd lbfgs_direction(const std::deque<CurvaturePair>& pairs, const Eigen::VectorXd& g) {
    Eigen::VectorXd q = -g;
    if (pairs.empty()) return q;
    std::vector<double> alpha(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
        alpha[i] = pairs[i].rho * pairs[i].s.dot(q);
        q -= alpha[i] * pairs[i].y;
    }
    const auto& last = pairs.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double beta = pairs[i].rho * pairs[i].y.dot(q);
        q += (alpha[i] - beta) * pairs[i].s;
    }
    return q;
}

}  // namespace

LocalResult local_minimize(const ObjectiveFn& f, const Eigen::VectorXd& start, const Box& box,
                           const LocalOptions& opts) {
    LocalResult res;
    Eigen::VectorXd x = box.clamp(start);
    Eigen::VectorXd g(x.size());
    double fx = f(x, &g);
    res.x = x;
    res.value = fx;
    if (!std::isfinite(fx) || !g.allFinite()) {
        res.converged = false;
        return res;
    }

    std::deque<CurvaturePair> pairs;
    constexpr double kArmijo = 1e-4;
    double t_prev = 1.0;  // warm-started line-search scale

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        res.iterations = iter + 1;

        // projected-gradient optimality measure (covers box-boundary KKT)
        const Eigen::VectorXd pg = x - box.clamp(x - g);
        if (pg.lpNorm<Eigen::Infinity>() <= opts.grad_tol * (1.0 + std::abs(fx))) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd d = lbfgs_direction(pairs, g);
        if (!d.allFinite() || g.dot(d) >= 0.0) {
            pairs.clear();
            d = -g;
        }

        // interpolated backtracking along the projected path; a failed
        // quasi-Newton direction falls back to steepest descent. The first
        // trial evaluates the gradient too: unit steps are usually accepted,
        // which makes the post-acceptance gradient call free.
        Eigen::VectorXd x_new;
        Eigen::VectorXd g_new(x.size());
        double f_new = fx;
        bool accepted = false;
        bool have_grad = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            const double gd = g.dot(d);
            double t = pairs.empty()
                           ? std::min(1.0, 1.0 / std::max(1.0, d.lpNorm<Eigen::Infinity>()))
                           : std::min(1.0, 4.0 * t_prev);
            for (int ls = 0; ls < 60; ++ls) {
                x_new = box.clamp(x + t * d);
                const Eigen::VectorXd step = x_new - x;
                if (step.lpNorm<Eigen::Infinity>() < opts.step_tol) break;
                const double gs = g.dot(step);
                have_grad = (ls == 0);
                f_new = f(x_new, have_grad ? &g_new : nullptr);
                if (std::isfinite(f_new) && gs < 0.0 && f_new <= fx + kArmijo * gs) {
                    accepted = true;
                    t_prev = t;
                    break;
                }
                // quadratic-model step shrink, safeguarded to [0.1 t, 0.5 t]
                double t_next = 0.5 * t;
                const double denom = f_new - fx - t * gd;
                if (std::isfinite(f_new) && denom > 0.0 && gd < 0.0) {
                    t_next = std::clamp(-0.5 * gd * t * t / denom, 0.1 * t, 0.5 * t);
                }
                t = t_next;
            }
            if (!accepted && attempt == 0) {
                if (pairs.empty()) break;  // already steepest descent
                pairs.clear();
                d = -g;
            }
        }
        if (!accepted) {
            // no acceptable decrease in the steepest-descent direction either
            res.converged = pg.lpNorm<Eigen::Infinity>() <=
                            std::sqrt(opts.grad_tol) * (1.0 + std::abs(fx));
            break;
        }

        if (!have_grad) f_new = f(x_new, &g_new);
        if (!std::isfinite(f_new) || !g_new.allFinite()) {
            res.converged = false;
            break;
        }

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-10 * s.norm() * yv.norm()) {
            pairs.push_back({s, yv, 1.0 / sy});
            if (static_cast<int>(pairs.size()) > opts.memory) pairs.pop_front();
        }

        const double step_inf = s.lpNorm<Eigen::Infinity>();
        x = x_new;
        fx = f_new;
        g = g_new;
        res.x = x;
        res.value = fx;
        if (step_inf <= opts.step_tol) {
            res.converged = true;
            break;
        }
    }

    if (!res.converged && res.iterations >= opts.max_iterations) {
        const Eigen::VectorXd pg = x - box.clamp(x - g);
        res.converged = pg.lpNorm<Eigen::Infinity>() <= opts.grad_tol * (1.0 + std::abs(fx));
    }
    return res;
}

}  // namespace tsroots
