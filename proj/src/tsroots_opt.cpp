#include "tsroots/tsroots_opt.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace tsroots {

namespace {

constexpr double kStartDedupTol = 1e-10;
constexpr double kOptimaDedupTol = 1e-6;
constexpr double kWinLocationTol = 1e-5;

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

}  // namespace

std::string to_string(StartProvenance p) {
    switch (p) {
        case StartProvenance::Explore: return "explore";
        case StartProvenance::Exploit: return "exploit";
        case StartProvenance::Random: return "random";
        case StartProvenance::Grid: return "grid";
        case StartProvenance::Lhs: return "lhs";
    }
    return "unknown";
}

CompiledPosterior::CompiledPosterior(const PosteriorSample& sample,
                                     const cheb::FitOptions& fit_opts)
    : prior_scale_(sample.prior_scale()),
      kernel_(sample.kernel()),
      X_(sample.observed()),
      v_(sample.data_coefficients()) {
    const int d = sample.dim();
    components_.reserve(static_cast<std::size_t>(d));
    derivatives_.reserve(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        components_.push_back(cheb::fit(
            [&](double t) { return sample.prior().component(i, t); }, -1.0, 1.0, fit_opts));
        derivatives_.push_back(components_.back().derivative());
    }
}

double CompiledPosterior::value(const Eigen::VectorXd& x) const {
    double v = prior_scale_;
    for (int i = 0; i < dim(); ++i) v *= components_[static_cast<std::size_t>(i)](x[i]);
    if (v_.size() > 0) v += kernel_.canonical(X_, x).dot(v_);
    return v;
}

Eigen::VectorXd CompiledPosterior::gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g;
    value_and_gradient(x, g);
    return g;
}

double CompiledPosterior::value_and_gradient(const Eigen::VectorXd& x,
                                             Eigen::VectorXd& grad) const {
    const int d = dim();
    Eigen::VectorXd vals(d), derivs(d);
    for (int i = 0; i < d; ++i) {
        vals[i] = components_[static_cast<std::size_t>(i)](x[i]);
        derivs[i] = derivatives_[static_cast<std::size_t>(i)](x[i]);
    }
    Eigen::VectorXd prefix(d + 1), suffix(d + 1);
    prefix[0] = 1.0;
    for (int i = 0; i < d; ++i) prefix[i + 1] = prefix[i] * vals[i];
    suffix[d] = 1.0;
    for (int i = d - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * vals[i];
    grad.resize(d);
    for (int i = 0; i < d; ++i) {
        grad[i] = prior_scale_ * derivs[i] * prefix[i] * suffix[i + 1];
    }
    double v = prior_scale_ * prefix[d];
    if (v_.size() > 0) {
        const Eigen::VectorXd k = kernel_.canonical(X_, x);
        const Eigen::VectorXd kv = k.cwiseProduct(v_);
        v += k.dot(v_);
        grad += ((X_.transpose() * kv - x * kv.sum()).array() /
                 kernel_.length_scales.array().square())
                    .matrix();
    }
    return v;
}

StartPointSet build_start_sets(const PosteriorSample& sample, const Dataset& data,
                               const StartSetSizes& sizes, const cheb::FitOptions& fit_opts) {
    return build_start_sets(CompiledPosterior(sample, fit_opts), data, sizes);
}

StartPointSet build_start_sets(const CompiledPosterior& sample, const Dataset& data,
                               const StartSetSizes& sizes) {
    if (sizes.n_candidate < 1 || sizes.n_explore < 1 || sizes.n_exploit < 1) {
        throw std::invalid_argument("build_start_sets: set sizes must be >= 1");
    }
    StartPointSet out;

    // ranked prior minima (exploration candidates)
    MinsortOptions mopts;
    mopts.alpha = sizes.alpha;
    const RankedMinima candidates =
        minsort(sample.components(), static_cast<std::size_t>(sizes.n_candidate), mopts);
    out.n_candidates = candidates.size();

    std::vector<double> post_at_candidates(candidates.size());
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        post_at_candidates[j] = sample.value(candidates.points[j]);
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (post_at_candidates[a] != post_at_candidates[b]) {
            return post_at_candidates[a] < post_at_candidates[b];
        }
        return a < b;
    });
    const std::size_t n_explore = std::min<std::size_t>(order.size(), sizes.n_explore);
    for (std::size_t r = 0; r < n_explore; ++r) {
        StartPoint sp;
        sp.x = candidates.points[order[r]];
        sp.posterior_value = post_at_candidates[order[r]];
        sp.src = StartProvenance::Explore;
        sp.set_index = static_cast<int>(r) + 1;
        sp.candidate_index = static_cast<int>(order[r]) + 1;
        out.explore.push_back(std::move(sp));
    }

    // exploitation set from observed locations
    const Eigen::Index n = data.size();
    if (n > 0) {
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
        std::iota(rows.begin(), rows.end(), 0);
        if (n > 200) {
            // pre-filter by observations: keep the lowest-y rows
            const std::size_t keep = std::min<std::size_t>(
                rows.size(), static_cast<std::size_t>(4) * sizes.n_exploit);
            std::sort(rows.begin(), rows.end(),
                      [&](Eigen::Index a, Eigen::Index b) { return data.y[a] < data.y[b]; });
            rows.resize(keep);
        }
        std::vector<double> post_at_rows(rows.size());
        for (std::size_t j = 0; j < rows.size(); ++j) {
            post_at_rows[j] = sample.value(data.X.row(rows[j]));
        }
        std::vector<std::size_t> xorder(rows.size());
        std::iota(xorder.begin(), xorder.end(), 0);
        std::sort(xorder.begin(), xorder.end(), [&](std::size_t a, std::size_t b) {
            if (post_at_rows[a] != post_at_rows[b]) return post_at_rows[a] < post_at_rows[b];
            return a < b;
        });
        const std::size_t n_exploit = std::min<std::size_t>(xorder.size(), sizes.n_exploit);
        for (std::size_t r = 0; r < n_exploit; ++r) {
            StartPoint sp;
            sp.x = data.X.row(rows[xorder[r]]);
            sp.posterior_value = post_at_rows[xorder[r]];
            sp.src = StartProvenance::Exploit;
            sp.set_index = static_cast<int>(r) + 1;
            out.exploit.push_back(std::move(sp));
        }
    }
    return out;
}

MultistartResult multistart_minimize(const ObjectiveFn& f,
                                     const std::vector<Eigen::VectorXd>& starts, const Box& box,
                                     const LocalOptions& opts, int workers) {
    MultistartResult out;
    out.results.resize(starts.size());
    if (starts.empty()) return out;

    int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(starts.size())));

    if (n_workers == 1) {
        for (std::size_t i = 0; i < starts.size(); ++i) {
            out.results[i] = local_minimize(f, starts[i], box, opts);
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= starts.size()) return;
                out.results[i] = local_minimize(f, starts[i], box, opts);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // winner: lowest value among converged, ties by lexicographic location
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const LocalResult& r = out.results[i];
        if (!r.converged || !std::isfinite(r.value)) continue;
        ++out.n_converged;
        const bool better =
            out.win_index < 0 || r.value < out.f_opt ||
            (r.value == out.f_opt && lex_less(r.x, out.x_opt));
        if (better) {
            out.win_index = static_cast<int>(i);
            out.f_opt = r.value;
            out.x_opt = r.x;
        }
    }
    return out;
}

TsRootsResult ts_roots(const PosteriorSample& sample, const Dataset& data,
                       const StartSetSizes& sizes, const LocalOptions& lopts, int workers,
                       const cheb::FitOptions& fit_opts) {
    const double t0 = now_seconds();
    const CompiledPosterior compiled(sample, fit_opts);
    const double compile_seconds = now_seconds() - t0;
    TsRootsResult res = ts_roots(compiled, data, sizes, lopts, workers);
    res.diag.build_seconds += compile_seconds;
    return res;
}

TsRootsResult ts_roots(const CompiledPosterior& sample, const Dataset& data,
                       const StartSetSizes& sizes, const LocalOptions& lopts, int workers) {
    TsRootsResult res;
    const double t0 = now_seconds();
    StartPointSet set = build_start_sets(sample, data, sizes);
    res.diag.build_seconds = now_seconds() - t0;

    std::vector<StartPoint> all;
    all.reserve(set.total());
    for (auto& s : set.explore) all.push_back(std::move(s));
    for (auto& s : set.exploit) all.push_back(std::move(s));
    // merge duplicate starts, keeping the earlier (better-ranked) one
    std::vector<StartPoint> merged;
    for (auto& s : all) {
        const bool dup = std::any_of(merged.begin(), merged.end(), [&](const StartPoint& m) {
            return (m.x - s.x).lpNorm<Eigen::Infinity>() <= kStartDedupTol;
        });
        if (!dup) merged.push_back(std::move(s));
    }
    if (merged.empty()) throw std::runtime_error("ts_roots: no starting points available");

    std::vector<Eigen::VectorXd> starts;
    starts.reserve(merged.size());
    for (const auto& s : merged) starts.push_back(s.x);

    const ObjectiveFn obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        return grad ? sample.value_and_gradient(x, *grad) : sample.value(x);
    };
    const Box box = Box::unit_cube(sample.dim());

    const double t1 = now_seconds();
    MultistartResult ms = multistart_minimize(obj, starts, box, lopts, workers);
    res.diag.optimize_seconds = now_seconds() - t1;
    res.diag.n_starts = static_cast<int>(starts.size());

    if (ms.win_index < 0) throw std::runtime_error("ts_roots: no converged start");

    // deduplicate converged optima, then re-pick the winner deterministically
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ms.results.size(); ++i) {
        if (!ms.results[i].converged || !std::isfinite(ms.results[i].value)) continue;
        const bool dup = std::any_of(keep.begin(), keep.end(), [&](std::size_t j) {
            return (ms.results[i].x - ms.results[j].x).lpNorm<Eigen::Infinity>() <= kOptimaDedupTol;
        });
        if (!dup) keep.push_back(i);
    }
    std::size_t best = keep.front();
    for (std::size_t j : keep) {
        if (ms.results[j].value < ms.results[best].value ||
            (ms.results[j].value == ms.results[best].value &&
             lex_less(ms.results[j].x, ms.results[best].x))) {
            best = j;
        }
    }
    res.x_opt = ms.results[best].x;
    res.f_opt = ms.results[best].value;

    // winning-index bookkeeping: min set index, per provenance, over the
    // starts whose optimum landed on the winner
    for (std::size_t i = 0; i < merged.size(); ++i) {
        const LocalResult& r = ms.results[i];
        if (!r.converged) continue;
        if ((r.x - res.x_opt).lpNorm<Eigen::Infinity>() > kWinLocationTol) continue;
        const StartPoint& sp = merged[i];
        if (sp.src == StartProvenance::Explore) {
            if (res.diag.win_explore_index < 0 || sp.set_index < res.diag.win_explore_index) {
                res.diag.win_explore_index = sp.set_index;
                res.diag.win_candidate_index = sp.candidate_index;
            }
        } else if (sp.src == StartProvenance::Exploit) {
            if (res.diag.win_exploit_index < 0 || sp.set_index < res.diag.win_exploit_index) {
                res.diag.win_exploit_index = sp.set_index;
            }
        }
    }
    const int ie = res.diag.win_explore_index, ix = res.diag.win_exploit_index;
    res.diag.win_src = (ix > 0 && (ie < 0 || ix <= ie)) ? StartProvenance::Exploit
                                                        : StartProvenance::Explore;

    res.diag.outcomes.reserve(merged.size());
    for (std::size_t i = 0; i < merged.size(); ++i) {
        res.diag.outcomes.push_back({merged[i], ms.results[i]});
    }
    return res;
}

TsRootsResult ts_roots(const SeparableSEKernel& kernel, const Dataset& data,
                       const StartSetSizes& sizes, std::uint64_t seed, double eta,
                       const LocalOptions& lopts, int workers) {
    const PosteriorSample sample = draw_posterior_sample(kernel, data, seed, eta);
    return ts_roots(sample, data, sizes, lopts, workers);
}

}  // namespace tsroots
