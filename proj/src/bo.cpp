#include "tsroots/bo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tsroots {

Eigen::MatrixXd lhs_design(int n, int d, Rng& rng) {
    if (n < 1 || d < 1) throw std::invalid_argument("lhs_design: n and d must be >= 1");
    Eigen::MatrixXd X(n, d);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int j = 0; j < d; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i) {
            const int k = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(i + 1)));
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]);
        }
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform();
            X(i, j) = -1.0 + 2.0 * (perm[static_cast<std::size_t>(i)] + u) / n;
        }
    }
    return X;
}

Eigen::MatrixXd lhs_design(int n, int d, std::uint64_t seed) {
    Rng rng(seed);
    return lhs_design(n, d, rng);
}

Standardization Standardization::fit(const Eigen::VectorXd& y) {
    Standardization s;
    if (y.size() == 0) return s;
    s.mean = y.mean();
    if (y.size() > 1) {
        const double ss = (y.array() - s.mean).square().sum() / (y.size() - 1);
        s.sd = std::sqrt(ss);
    }
    if (!(s.sd > 0.0)) s.sd = 1.0;
    return s;
}

Eigen::VectorXd Standardization::apply(const Eigen::VectorXd& y) const {
    return ((y.array() - mean) / sd).matrix();
}

std::string AcquisitionSpec::label() const {
    switch (kind) {
        case AcqKind::TsRoots: return "ts_roots";
        case AcqKind::TsRandomMultistart: return "ts_random_multistart";
        case AcqKind::TsGrid: return "ts_grid";
        case AcqKind::TsLhs: return "ts_lhs";
        case AcqKind::TsRff: return "ts_rff";
        case AcqKind::Ats: return "ats" + std::to_string(static_cast<long long>(n_c));
        case AcqKind::Ei: return "ei";
        case AcqKind::Lcb: return "lcb";
        case AcqKind::RandomSearch: return "random_search";
    }
    return "unknown";
}

AcquisitionSpec AcquisitionSpec::parse(const std::string& kind_name) {
    AcquisitionSpec spec;
    if (kind_name == "ts_roots") spec.kind = AcqKind::TsRoots;
    else if (kind_name == "ts_random_multistart") spec.kind = AcqKind::TsRandomMultistart;
    else if (kind_name == "ts_grid") spec.kind = AcqKind::TsGrid;
    else if (kind_name == "ts_lhs") spec.kind = AcqKind::TsLhs;
    else if (kind_name == "ts_rff") spec.kind = AcqKind::TsRff;
    else if (kind_name == "ats") spec.kind = AcqKind::Ats;
    else if (kind_name == "ei") spec.kind = AcqKind::Ei;
    else if (kind_name == "lcb") spec.kind = AcqKind::Lcb;
    else if (kind_name == "random_search") spec.kind = AcqKind::RandomSearch;
    else throw std::invalid_argument("unknown acquisition kind: " + kind_name);
    return spec;
}

Dataset BoState::dataset() const {
    Dataset d;
    d.X = X;
    d.y = standardization.apply(y_raw);
    d.noise_sd = noise_sd;
    return d;
}

Eigen::VectorXd BoState::x_min() const {
    Eigen::Index best = 0;
    y_raw.minCoeff(&best);
    return X.row(best);
}

BoState bo_init(const Benchmark& bench, const BoOptions& opts, std::uint64_t seed) {
    BoState state;
    const int d = bench.dim;
    const int n0 = opts.n_initial > 0 ? opts.n_initial : 10 * d;
    Rng rng = Rng::forked(seed, 0x696e6974ULL);
    state.X = lhs_design(n0, d, rng);
    state.y_raw.resize(n0);
    for (int i = 0; i < n0; ++i) {
        state.y_raw[i] = bench(bench.from_normalized(state.X.row(i)));
    }
    state.noise_sd = opts.noise_sd;
    state.standardization = Standardization::fit(state.y_raw);
    state.kernel.signal_var = 1.0;
    state.kernel.length_scales = Eigen::VectorXd::Constant(d, 0.5);
    return state;
}

void bo_refit(BoState& state, const BoOptions& opts, std::uint64_t seed) {
    state.standardization = Standardization::fit(state.y_raw);
    HyperBounds bounds = opts.hyper;
    const int n_starts =
        state.iteration == 0 ? opts.hyper_starts_initial : opts.hyper_starts_refit;
    const std::optional<SeparableSEKernel> warm =
        state.iteration == 0 ? std::nullopt : std::make_optional(state.kernel);
    const FittedHyper fit = fit_hyperparameters(
        state.dataset(), bounds, splitmix64(seed) ^ static_cast<std::uint64_t>(state.iteration),
        n_starts, warm);
    state.kernel = fit.kernel;
    state.noise_sd = opts.noise_sd;
}

void bo_observe(BoState& state, const Benchmark& bench, const Eigen::VectorXd& x_norm) {
    const double y = bench(bench.from_normalized(x_norm));
    state.X.conservativeResize(state.X.rows() + 1, Eigen::NoChange);
    state.X.row(state.X.rows() - 1) = x_norm;
    state.y_raw.conservativeResize(state.y_raw.size() + 1);
    state.y_raw[state.y_raw.size() - 1] = y;
    state.standardization = Standardization::fit(state.y_raw);
    ++state.iteration;
}

namespace {

std::vector<Eigen::VectorXd> scheme_starts(InnerScheme scheme, int n, int d, Rng& rng) {
    std::vector<Eigen::VectorXd> starts;
    starts.reserve(static_cast<std::size_t>(n));
    switch (scheme) {
        case InnerScheme::RandomMultistart: {
            for (int i = 0; i < n; ++i) {
                Eigen::VectorXd x(d);
                for (int j = 0; j < d; ++j) x[j] = rng.uniform(-1.0, 1.0);
                starts.push_back(std::move(x));
            }
            break;
        }
        case InnerScheme::Lhs: {
            const Eigen::MatrixXd X = lhs_design(n, d, rng);
            for (int i = 0; i < n; ++i) starts.emplace_back(X.row(i));
            break;
        }
        case InnerScheme::Grid: {
            const int side = std::max(
                1, static_cast<int>(std::ceil(std::pow(static_cast<double>(n), 1.0 / d))));
            std::vector<int> idx(static_cast<std::size_t>(d), 0);
            while (static_cast<int>(starts.size()) < n) {
                Eigen::VectorXd x(d);
                for (int j = 0; j < d; ++j) {
                    x[j] = -1.0 + 2.0 * (idx[static_cast<std::size_t>(j)] + 0.5) / side;
                }
                starts.push_back(std::move(x));
                int pos = d - 1;
                while (pos >= 0) {
                    if (++idx[static_cast<std::size_t>(pos)] < side) break;
                    idx[static_cast<std::size_t>(pos)] = 0;
                    --pos;
                }
                if (pos < 0) break;
            }
            break;
        }
        case InnerScheme::Rootfinding:
            throw std::logic_error("scheme_starts: rootfinding builds its own starts");
    }
    return starts;
}

}  // namespace

InnerResult optimize_sample(const PosteriorSample& sample, const Dataset& data,
                            InnerScheme scheme, const BoOptions& opts, Rng& rng, int n_starts) {
    return optimize_sample(CompiledPosterior(sample), data, scheme, opts, rng, n_starts);
}

InnerResult optimize_sample(const CompiledPosterior& sample, const Dataset& data,
                            InnerScheme scheme, const BoOptions& opts, Rng& rng, int n_starts) {
    InnerResult out;
    if (scheme == InnerScheme::Rootfinding) {
        const TsRootsResult r = ts_roots(sample, data, opts.sizes, opts.local, opts.workers);
        out.x = r.x_opt;
        out.alpha_star = r.f_opt;
        out.n_starts = r.diag.n_starts;
        out.win_explore_index = r.diag.win_explore_index;
        out.win_exploit_index = r.diag.win_exploit_index;
        out.win_candidate_index = r.diag.win_candidate_index;
        out.build_seconds = r.diag.build_seconds;
        const int ie = r.diag.win_explore_index, ix = r.diag.win_exploit_index;
        if (ie > 0 && (ix < 0 || ie <= ix)) {
            out.win_index = ie;
            out.win_src = "explore";
        } else if (ix > 0) {
            out.win_index = ix;
            out.win_src = "exploit";
        }
        return out;
    }

    const int d = sample.dim();
    int n = n_starts;
    if (n <= 0) {
        n = opts.sizes.n_explore +
            std::min<int>(opts.sizes.n_exploit, static_cast<int>(data.size()));
    }
    const std::vector<Eigen::VectorXd> starts = scheme_starts(scheme, n, d, rng);
    const ObjectiveFn obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        return grad ? sample.value_and_gradient(x, *grad) : sample.value(x);
    };
    const MultistartResult ms =
        multistart_minimize(obj, starts, Box::unit_cube(d), opts.local, opts.workers);
    if (ms.win_index < 0) throw std::runtime_error("optimize_sample: no converged start");
    out.x = ms.x_opt;
    out.alpha_star = ms.f_opt;
    out.n_starts = static_cast<int>(starts.size());
    out.win_index = ms.win_index + 1;
    switch (scheme) {
        case InnerScheme::RandomMultistart: out.win_src = "random"; break;
        case InnerScheme::Grid: out.win_src = "grid"; break;
        case InnerScheme::Lhs: out.win_src = "lhs"; break;
        default: break;
    }
    return out;
}

namespace {

// Posterior mean/sd with gradients, factored once per acquisition.
class MomentEvaluator {
public:
    MomentEvaluator(const SeparableSEKernel& kernel, const Dataset& data)
        : kernel_(kernel), X_(data.X) {
        const Eigen::MatrixXd K = kernel.gram(data.X);
        const Eigen::MatrixXd C =
            K + data.noise_sd * data.noise_sd *
                    Eigen::MatrixXd::Identity(K.rows(), K.cols());
        chol_ = jittered_cholesky(C);
        alpha_ = chol_.solve(data.y);
    }

    void eval(const Eigen::VectorXd& x, double& mu, Eigen::VectorXd& grad_mu, double& sd,
              Eigen::VectorXd& grad_sd) const {
        const Eigen::VectorXd k = kernel_.canonical(X_, x);
        const Eigen::MatrixXd G = kernel_.canonical_grad(X_, x);  // n x d
        const Eigen::VectorXd w = chol_.solve(k);
        mu = k.dot(alpha_);
        grad_mu = G.transpose() * alpha_;
        const double var = std::max(kernel_.signal_var - k.dot(w), 0.0);
        sd = std::sqrt(var);
        const double s_safe = std::max(sd, 1e-8);
        grad_sd = (G.transpose() * w) * (-1.0 / s_safe);
    }

private:
    SeparableSEKernel kernel_;
    Eigen::MatrixXd X_;
    JitteredChol chol_;
    Eigen::VectorXd alpha_;
};

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

}  // namespace

AcquireResult acquire(const BoState& state, const AcquisitionSpec& spec, const BoOptions& opts,
                      std::uint64_t seed, int iter) {
    const Dataset data = state.dataset();
    const int d = state.dim();
    const std::uint64_t draw_seed =
        splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(iter) * 0x9e3779b9ULL + 1));
    Rng rng = Rng::forked(draw_seed, 0x7374617274ULL);
    const int mirrored_starts =
        opts.sizes.n_explore + std::min<int>(opts.sizes.n_exploit, static_cast<int>(data.size()));

    AcquireResult out;
    switch (spec.kind) {
        case AcqKind::TsRoots:
        case AcqKind::TsRandomMultistart:
        case AcqKind::TsGrid:
        case AcqKind::TsLhs: {
            const CompiledPosterior compiled(
                draw_posterior_sample(state.kernel, data, draw_seed, opts.eta));
            InnerScheme scheme = InnerScheme::Rootfinding;
            if (spec.kind == AcqKind::TsRandomMultistart) scheme = InnerScheme::RandomMultistart;
            if (spec.kind == AcqKind::TsGrid) scheme = InnerScheme::Grid;
            if (spec.kind == AcqKind::TsLhs) scheme = InnerScheme::Lhs;
            int n_starts = -1;
            if (scheme != InnerScheme::Rootfinding) {
                // equal budget: mirror TS-roots' realized start count on this draw
                const StartPointSet set = build_start_sets(compiled, data, opts.sizes);
                n_starts = static_cast<int>(set.total());
            }
            const InnerResult r = optimize_sample(compiled, data, scheme, opts, rng, n_starts);
            out.x = r.x;
            out.alpha_star = r.alpha_star;
            out.n_starts = r.n_starts;
            out.win_index = r.win_index;
            out.win_src = r.win_src;
            return out;
        }
        case AcqKind::Ats: {
            const CompiledPosterior compiled(
                sample_average_ats(state.kernel, data, spec.n_c, draw_seed, opts.eta));
            const InnerResult r =
                optimize_sample(compiled, data, InnerScheme::Rootfinding, opts, rng);
            out.x = r.x;
            out.alpha_star = r.alpha_star;
            out.n_starts = r.n_starts;
            out.win_index = r.win_index;
            out.win_src = r.win_src;
            return out;
        }
        case AcqKind::TsRff: {
            const double sigma_f = std::sqrt(state.kernel.signal_var);
            const RffPriorSample prior(state.kernel.length_scales, spec.rff_features, draw_seed,
                                       sigma_f);
            const Eigen::Index n = data.size();
            Eigen::VectorXd v(n);
            if (n > 0) {
                Eigen::VectorXd f_n(n);
                for (Eigen::Index j = 0; j < n; ++j) f_n[j] = prior.value(data.X.row(j));
                Rng nrng = Rng::forked(draw_seed, 0x6e6f697365ULL);
                Eigen::VectorXd eps(n);
                for (Eigen::Index j = 0; j < n; ++j) eps[j] = data.noise_sd * nrng.normal();
                const Eigen::MatrixXd K = state.kernel.gram(data.X);
                const Eigen::MatrixXd C =
                    K + data.noise_sd * data.noise_sd * Eigen::MatrixXd::Identity(n, n);
                v = jittered_cholesky(C).solve(data.y - f_n - eps);
            }
            const SeparableSEKernel kernel = state.kernel;
            const Eigen::MatrixXd X = data.X;
            const ObjectiveFn obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
                double val = prior.value(x);
                if (n > 0) val += kernel.canonical(X, x).dot(v);
                if (grad) {
                    *grad = prior.gradient(x);
                    if (n > 0) *grad += kernel.canonical_grad(X, x).transpose() * v;
                }
                return val;
            };
            const std::vector<Eigen::VectorXd> starts =
                scheme_starts(InnerScheme::RandomMultistart, mirrored_starts, d, rng);
            const MultistartResult ms =
                multistart_minimize(obj, starts, Box::unit_cube(d), opts.local, opts.workers);
            if (ms.win_index < 0) throw std::runtime_error("acquire: no converged start");
            out.x = ms.x_opt;
            out.alpha_star = ms.f_opt;
            out.n_starts = static_cast<int>(starts.size());
            out.win_index = ms.win_index + 1;
            out.win_src = "random";
            return out;
        }
        case AcqKind::Ei:
        case AcqKind::Lcb: {
            if (data.size() < 1) throw std::invalid_argument("acquire: ei/lcb need data");
            const MomentEvaluator moments(state.kernel, data);
            const double y_best = data.y.minCoeff();
            const bool is_ei = spec.kind == AcqKind::Ei;
            const double beta = spec.beta;
            const ObjectiveFn obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
                double mu, sd;
                Eigen::VectorXd gmu, gsd;
                moments.eval(x, mu, gmu, sd, gsd);
                if (!is_ei) {
                    if (grad) *grad = gmu - beta * gsd;
                    return mu - beta * sd;
                }
                if (sd < 1e-12) {
                    const double imp = std::max(y_best - mu, 0.0);
                    if (grad) *grad = (imp > 0.0) ? Eigen::VectorXd(gmu) : Eigen::VectorXd::Zero(x.size()).eval();
                    return -imp;
                }
                const double z = (y_best - mu) / sd;
                const double ei = (y_best - mu) * norm_cdf(z) + sd * norm_pdf(z);
                if (grad) *grad = norm_cdf(z) * gmu - norm_pdf(z) * gsd;
                return -ei;
            };
            const std::vector<Eigen::VectorXd> starts =
                scheme_starts(InnerScheme::RandomMultistart, mirrored_starts, d, rng);
            const MultistartResult ms =
                multistart_minimize(obj, starts, Box::unit_cube(d), opts.local, opts.workers);
            if (ms.win_index < 0) throw std::runtime_error("acquire: no converged start");
            out.x = ms.x_opt;
            out.alpha_star = ms.f_opt;
            out.n_starts = static_cast<int>(starts.size());
            out.win_index = ms.win_index + 1;
            out.win_src = "random";
            return out;
        }
        case AcqKind::RandomSearch: {
            Eigen::VectorXd x(d);
            for (int j = 0; j < d; ++j) x[j] = rng.uniform(-1.0, 1.0);
            out.x = x;
            out.alpha_star = std::numeric_limits<double>::quiet_NaN();
            out.n_starts = 1;
            out.win_index = 1;
            out.win_src = "random";
            return out;
        }
    }
    throw std::logic_error("acquire: unhandled acquisition kind");
}

std::vector<IterationRecord> run_bo(const Benchmark& bench, const AcquisitionSpec& spec,
                                    const BoOptions& opts, std::uint64_t seed) {
    if (opts.budget < 1) throw std::invalid_argument("run_bo: budget must be >= 1");
    BoState state = bo_init(bench, opts, seed);
    std::vector<IterationRecord> records;
    records.reserve(static_cast<std::size_t>(opts.budget));
    double cum_seconds = 0.0;

    for (int k = 1; k <= opts.budget; ++k) {
        // pure random search never consults the model
        const bool needs_model = spec.kind != AcqKind::RandomSearch;
        if (needs_model && (k - 1) % std::max(1, opts.refit_cadence) == 0) {
            bo_refit(state, opts, seed);
        } else {
            state.standardization = Standardization::fit(state.y_raw);
        }
        const auto t0 = std::chrono::steady_clock::now();
        const AcquireResult a = acquire(state, spec, opts, seed, k);
        cum_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        try {
            bo_observe(state, bench, a.x);
        } catch (const std::exception&) {
            // objective failure: keep the records collected so far
            break;
        }

        IterationRecord rec;
        rec.iter = k;
        rec.acq = spec.label();
        rec.y_min = state.y_min();
        const double err = rec.y_min - bench.f_star;
        rec.log_err = std::log10(std::max(err, 1e-300));
        if (bench.x_star) {
            const Eigen::VectorXd x_min_raw = bench.from_normalized(state.x_min());
            rec.log_dist = std::log10(std::max((x_min_raw - *bench.x_star).norm(), 1e-300));
        } else {
            rec.log_dist = std::numeric_limits<double>::quiet_NaN();
        }
        rec.alpha_star = a.alpha_star;
        rec.n_starts = a.n_starts;
        rec.win_idx = a.win_index;
        rec.win_src = a.win_src;
        rec.t_cum_ms = cum_seconds * 1000.0;
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace tsroots
