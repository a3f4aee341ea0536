#include "tsroots/gp.hpp"

#include <cmath>
#include <stdexcept>

#include "tsroots/local_opt.hpp"

namespace tsroots {

void Dataset::validate() const {
    if (X.rows() != y.size()) throw std::invalid_argument("Dataset: X/y size mismatch");
    if (!y.allFinite()) throw std::invalid_argument("Dataset: non-finite observation");
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
            if ((X.row(i) - X.row(j)).lpNorm<Eigen::Infinity>() <= 1e-12) {
                throw std::invalid_argument("Dataset: duplicate input rows");
            }
        }
    }
}

double SeparableSEKernel::operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& xp) const {
    double e = 0.0;
    for (int i = 0; i < dim(); ++i) {
        const double d = (x[i] - xp[i]) / length_scales[i];
        e += d * d;
    }
    return signal_var * std::exp(-0.5 * e);
}

Eigen::MatrixXd SeparableSEKernel::gram(const Eigen::MatrixXd& X) const {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = signal_var;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            K(i, j) = K(j, i) = (*this)(X.row(i), X.row(j));
        }
    }
    return K;
}

Eigen::MatrixXd SeparableSEKernel::cross(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Q) const {
    Eigen::MatrixXd C(X.rows(), Q.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < Q.rows(); ++j) {
            C(i, j) = (*this)(X.row(i), Q.row(j));
        }
    }
    return C;
}

Eigen::VectorXd SeparableSEKernel::canonical(const Eigen::MatrixXd& X,
                                             const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd scaled =
        (X.rowwise() - x.transpose()).array().rowwise() /
        length_scales.transpose().array();
    return signal_var * (-0.5 * scaled.array().square().rowwise().sum()).exp();
}

Eigen::MatrixXd SeparableSEKernel::canonical_grad(const Eigen::MatrixXd& X,
                                                  const Eigen::VectorXd& x) const {
    const Eigen::VectorXd k = canonical(X, x);
    Eigen::MatrixXd G = -(x.transpose().replicate(X.rows(), 1) - X);
    G.array().rowwise() /= length_scales.array().square().transpose();
    G.array().colwise() *= k.array();
    return G;
}

JitteredChol jittered_cholesky(const Eigen::MatrixXd& A) {
    JitteredChol out;
    out.llt.compute(A);
    if (out.llt.info() == Eigen::Success) return out;
    for (double jitter = 1e-10; jitter <= 1e-6 * 1.0001; jitter *= 10.0) {
        out.llt.compute(A + jitter * Eigen::MatrixXd::Identity(A.rows(), A.cols()));
        if (out.llt.info() == Eigen::Success) {
            out.jitter = jitter;
            return out;
        }
    }
    throw std::runtime_error("ill-conditioned covariance");
}

namespace {

// v <- A^{-1} rhs with one refinement pass when the raw residual is loose.
Eigen::VectorXd solve_refined(const JitteredChol& chol, const Eigen::MatrixXd& A,
                              const Eigen::VectorXd& rhs) {
    Eigen::VectorXd v = chol.solve(rhs);
    const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    if ((rhs - A * v).lpNorm<Eigen::Infinity>() > 1e-9 * scale) {
        v += chol.solve(rhs - A * v);
    }
    return v;
}

}  // namespace

PosteriorMoments posterior_moments(const SeparableSEKernel& kernel, const Dataset& data,
                                   const Eigen::MatrixXd& query) {
    if (data.size() < 1) throw std::invalid_argument("posterior_moments: dataset is empty");
    data.validate();
    const Eigen::MatrixXd K = kernel.gram(data.X);
    const Eigen::MatrixXd C =
        K + data.noise_sd * data.noise_sd * Eigen::MatrixXd::Identity(K.rows(), K.cols());
    const JitteredChol chol = jittered_cholesky(C);
    const Eigen::MatrixXd Kxq = kernel.cross(data.X, query);   // n x q
    const Eigen::MatrixXd Kqq = kernel.gram(query);
    PosteriorMoments m;
    m.mean = Kxq.transpose() * solve_refined(chol, C, data.y);
    m.cov = Kqq - Kxq.transpose() * chol.solve(Kxq);
    m.cov = 0.5 * (m.cov + m.cov.transpose()).eval();
    return m;
}

PosteriorSample::PosteriorSample(SeparablePriorSample prior, double prior_scale,
                                 SeparableSEKernel kernel, Eigen::MatrixXd X, Eigen::VectorXd v)
    : prior_(std::move(prior)),
      prior_scale_(prior_scale),
      kernel_(std::move(kernel)),
      X_(std::move(X)),
      v_(std::move(v)) {
    if (X_.rows() != v_.size()) throw std::invalid_argument("PosteriorSample: X/v size mismatch");
}

double PosteriorSample::prior_value(const Eigen::VectorXd& x) const {
    return prior_scale_ * prior_.value(x);
}

double PosteriorSample::value(const Eigen::VectorXd& x) const {
    double b = 0.0;
    if (v_.size() > 0) b = kernel_.canonical(X_, x).dot(v_);
    return prior_value(x) + b;
}

Eigen::VectorXd PosteriorSample::gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = prior_scale_ * prior_.gradient(x);
    if (v_.size() > 0) g += kernel_.canonical_grad(X_, x).transpose() * v_;
    return g;
}

double PosteriorSample::value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    double v = prior_scale_ * prior_.value_and_gradient(x, grad);
    grad *= prior_scale_;
    if (v_.size() > 0) {
        const Eigen::VectorXd k = kernel_.canonical(X_, x);
        const Eigen::VectorXd kv = k.cwiseProduct(v_);
        v += k.dot(v_);
        // grad of sum_j v_j kappa(x, x^j) without materializing the n x d matrix
        grad += ((X_.transpose() * kv - x * kv.sum()).array() /
                 kernel_.length_scales.array().square())
                    .matrix();
    }
    return v;
}

std::vector<SpectralBasis1D> make_bases(const SeparableSEKernel& kernel, double eta,
                                        double measure_sigma, int max_terms) {
    std::vector<SpectralBasis1D> bases;
    bases.reserve(static_cast<std::size_t>(kernel.dim()));
    for (int i = 0; i < kernel.dim(); ++i) {
        bases.push_back(
            SpectralBasis1D::se_spectrum(kernel.length_scales[i], measure_sigma, eta, max_terms));
    }
    return bases;
}

PosteriorSample draw_posterior_sample(const SeparableSEKernel& kernel, const Dataset& data,
                                      std::uint64_t seed, double eta) {
    SeparablePriorSample prior(make_bases(kernel, eta), seed);
    const double sigma_f = std::sqrt(kernel.signal_var);
    const Eigen::Index n = data.size();
    if (n == 0) {
        return PosteriorSample(std::move(prior), sigma_f, kernel, Eigen::MatrixXd(0, kernel.dim()),
                               Eigen::VectorXd(0));
    }
    data.validate();

    Eigen::VectorXd f_n(n);
    for (Eigen::Index j = 0; j < n; ++j) f_n[j] = sigma_f * prior.value(data.X.row(j));

    Rng rng = Rng::forked(seed, 0x6e6f697365ULL);  // noise substream
    Eigen::VectorXd eps(n);
    for (Eigen::Index j = 0; j < n; ++j) eps[j] = data.noise_sd * rng.normal();

    const Eigen::MatrixXd K = kernel.gram(data.X);
    const Eigen::MatrixXd C =
        K + data.noise_sd * data.noise_sd * Eigen::MatrixXd::Identity(n, n);
    const JitteredChol chol = jittered_cholesky(C);
    const Eigen::VectorXd v = solve_refined(chol, C, data.y - f_n - eps);
    return PosteriorSample(std::move(prior), sigma_f, kernel, data.X, v);
}

PosteriorSample sample_average_ats(const SeparableSEKernel& kernel, const Dataset& data,
                                   double n_samples, std::uint64_t seed, double eta) {
    if (!(n_samples >= 1.0)) throw std::invalid_argument("sample_average_ats: N_c must be >= 1");
    SeparablePriorSample prior(make_bases(kernel, eta), seed);
    const double sigma_f = std::sqrt(kernel.signal_var);
    const double scale = 1.0 / std::sqrt(n_samples);
    const Eigen::Index n = data.size();
    if (n == 0) {
        return PosteriorSample(std::move(prior), sigma_f * scale, kernel,
                               Eigen::MatrixXd(0, kernel.dim()), Eigen::VectorXd(0));
    }
    data.validate();

    Eigen::VectorXd f_n(n);
    for (Eigen::Index j = 0; j < n; ++j) f_n[j] = sigma_f * prior.value(data.X.row(j));

    const Eigen::MatrixXd K = kernel.gram(data.X);
    const Eigen::MatrixXd C =
        K + data.noise_sd * data.noise_sd * Eigen::MatrixXd::Identity(n, n);
    const JitteredChol chol = jittered_cholesky(C);
    // mu + (f + xi)/sqrt(Nc) collapses to coefficients (K+Sigma)^{-1}(y - f_n/sqrt(Nc))
    const Eigen::VectorXd v = solve_refined(chol, C, data.y - scale * f_n);
    return PosteriorSample(std::move(prior), sigma_f * scale, kernel, data.X, v);
}

namespace {

struct LmlWorkspace {
    Eigen::MatrixXd sqdist_per_dim;  // stacked n x n blocks, one per dimension
};

// negative log marginal likelihood and gradient in log-parameters
// theta = (log sigma_f, log l_1 .. log l_d [, log sigma_n])
double negative_lml(const Dataset& data, const Eigen::VectorXd& theta, bool fit_noise,
                    double fixed_noise_sd, Eigen::VectorXd* grad) {
    const Eigen::Index n = data.size();
    const int d = static_cast<int>(data.dim());
    SeparableSEKernel kernel;
    const double sigma_f = std::exp(theta[0]);
    kernel.signal_var = sigma_f * sigma_f;
    kernel.length_scales = theta.segment(1, d).array().exp();
    const double sigma_n = fit_noise ? std::exp(theta[1 + d]) : fixed_noise_sd;

    const Eigen::MatrixXd K = kernel.gram(data.X);
    const Eigen::MatrixXd C = K + sigma_n * sigma_n * Eigen::MatrixXd::Identity(n, n);
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) {
        if (grad) grad->setZero(theta.size());
        return 1e100;
    }
    const Eigen::VectorXd alpha = llt.solve(data.y);
    double logdet = 0.0;
    const Eigen::MatrixXd& packed = llt.matrixLLT();
    for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(packed(i, i));
    const double lml =
        -0.5 * data.y.dot(alpha) - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);

    if (grad) {
        grad->resize(theta.size());
        const Eigen::MatrixXd Cinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
        const Eigen::MatrixXd W = alpha * alpha.transpose() - Cinv;  // d lml/dK = W/2
        // d K / d log sigma_f = 2 K
        (*grad)[0] = -(W.cwiseProduct(K)).sum();
        for (int m = 0; m < d; ++m) {
            double acc = 0.0;
            const double inv_l2 = 1.0 / (kernel.length_scales[m] * kernel.length_scales[m]);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double dm = data.X(i, m) - data.X(j, m);
                    acc += W(i, j) * K(i, j) * dm * dm * inv_l2;
                }
            }
            (*grad)[1 + m] = -0.5 * acc;
        }
        if (fit_noise) {
            (*grad)[1 + d] = -sigma_n * sigma_n * W.trace();
        }
    }
    return -lml;
}

}  // namespace

FittedHyper fit_hyperparameters(const Dataset& data, const HyperBounds& bounds, std::uint64_t seed,
                                int n_starts, const std::optional<SeparableSEKernel>& warm) {
    if (data.size() < 2) throw std::invalid_argument("fit_hyperparameters: need at least 2 points");
    data.validate();
    const int d = static_cast<int>(data.dim());
    const int p = 1 + d + (bounds.fit_noise ? 1 : 0);

    Box box{Eigen::VectorXd(p), Eigen::VectorXd(p)};
    box.lo[0] = std::log(bounds.signal_sd_min);
    box.hi[0] = std::log(bounds.signal_sd_max);
    for (int m = 0; m < d; ++m) {
        box.lo[1 + m] = std::log(bounds.length_scale_min);
        box.hi[1 + m] = std::log(bounds.length_scale_max);
    }
    if (bounds.fit_noise) {
        box.lo[1 + d] = std::log(bounds.noise_sd_min);
        box.hi[1 + d] = std::log(bounds.noise_sd_max);
    }

    const ObjectiveFn obj = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
        return negative_lml(data, theta, bounds.fit_noise, data.noise_sd, grad);
    };

    std::vector<Eigen::VectorXd> starts;
    if (warm && warm->dim() == d) {
        Eigen::VectorXd t(p);
        t[0] = 0.5 * std::log(warm->signal_var);
        for (int m = 0; m < d; ++m) t[1 + m] = std::log(warm->length_scales[m]);
        if (bounds.fit_noise) t[1 + d] = std::log(data.noise_sd);
        starts.push_back(box.clamp(t));
    }
    Rng rng(splitmix64(seed ^ 0x68797065726669ULL));
    while (static_cast<int>(starts.size()) < n_starts) {
        Eigen::VectorXd t(p);
        for (int m = 0; m < p; ++m) t[m] = rng.uniform(box.lo[m], box.hi[m]);
        starts.push_back(std::move(t));
    }

    LocalOptions lopts;
    lopts.max_iterations = 120;
    lopts.grad_tol = 1e-6;

    FittedHyper best;
    double best_value = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& s : starts) {
        const LocalResult r = local_minimize(obj, s, box, lopts);
        if (!std::isfinite(r.value)) continue;
        if (!any || r.value < best_value) {
            any = true;
            best_value = r.value;
            best.kernel.signal_var = std::exp(2.0 * r.x[0]);
            best.kernel.length_scales = r.x.segment(1, d).array().exp();
            best.noise_sd = bounds.fit_noise ? std::exp(r.x[1 + d]) : data.noise_sd;
            best.log_marginal = -r.value;
            best.converged = r.converged;
        }
    }
    if (!any) {
        // every start diverged: fall back to a mid-box candidate with a warning flag
        best.kernel.signal_var = 1.0;
        best.kernel.length_scales = Eigen::VectorXd::Constant(
            d, std::sqrt(bounds.length_scale_min * bounds.length_scale_max));
        best.noise_sd = data.noise_sd;
        best.log_marginal = -std::numeric_limits<double>::infinity();
        best.converged = false;
    }
    return best;
}

}  // namespace tsroots
