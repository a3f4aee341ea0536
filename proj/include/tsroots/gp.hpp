#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "tsroots/spectral.hpp"

namespace tsroots {

/// Observations on the normalized domain [-1,1]^d with z-scored outputs.
struct Dataset {
    Eigen::MatrixXd X;  // n x d
    Eigen::VectorXd y;  // n
    double noise_sd = 1e-6;

    Eigen::Index size() const { return X.rows(); }
    Eigen::Index dim() const { return X.cols(); }

    /// Throws if rows duplicate within 1e-12 or y is non-finite.
    void validate() const;
};

/// kappa(x, x') = sigma_f^2 prod_i exp(-(x_i - x_i')^2 / (2 l_i^2)).
struct SeparableSEKernel {
    double signal_var = 1.0;
    Eigen::VectorXd length_scales;

    int dim() const { return static_cast<int>(length_scales.size()); }
    double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& xp) const;
    Eigen::MatrixXd gram(const Eigen::MatrixXd& X) const;
    Eigen::MatrixXd cross(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Q) const;
    /// Cross-covariance vector kappa_{.,n}(x) against rows of X.
    Eigen::VectorXd canonical(const Eigen::MatrixXd& X, const Eigen::VectorXd& x) const;
    /// d/dx of canonical(x), returned as n x d (row j = grad of kappa(x, x^j)).
    Eigen::MatrixXd canonical_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& x) const;
};

/// Cholesky of K + sigma_n^2 I with jitter escalation 1e-10 .. 1e-6.
/// Throws "ill-conditioned covariance" if every level fails.
struct JitteredChol {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;

    template <typename Rhs>
    auto solve(const Eigen::MatrixBase<Rhs>& rhs) const {
        return llt.solve(rhs.derived()).eval();
    }
};

JitteredChol jittered_cholesky(const Eigen::MatrixXd& A);

struct PosteriorMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

PosteriorMoments posterior_moments(const SeparableSEKernel& kernel, const Dataset& data,
                                   const Eigen::MatrixXd& query);

/// Pathwise posterior sample f~(x) = prior_scale * f(x) + sum_j v_j kappa(x, x^j),
/// with f the separable spectral prior draw. Immutable once built.
class PosteriorSample {
public:
    PosteriorSample(SeparablePriorSample prior, double prior_scale, SeparableSEKernel kernel,
                    Eigen::MatrixXd X, Eigen::VectorXd v);

    int dim() const { return prior_.dim(); }
    const SeparablePriorSample& prior() const { return prior_; }
    double prior_scale() const { return prior_scale_; }
    const Eigen::VectorXd& data_coefficients() const { return v_; }
    const SeparableSEKernel& kernel() const { return kernel_; }
    const Eigen::MatrixXd& observed() const { return X_; }

    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

    /// Single-pass value and gradient; the multistart hot path.
    double value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;

    /// prior_scale * f(x), the separable part alone.
    double prior_value(const Eigen::VectorXd& x) const;

private:
    SeparablePriorSample prior_;
    double prior_scale_;
    SeparableSEKernel kernel_;
    Eigen::MatrixXd X_;
    Eigen::VectorXd v_;
};

std::vector<SpectralBasis1D> make_bases(const SeparableSEKernel& kernel, double eta = 1e-16,
                                        double measure_sigma = 1.0, int max_terms = 1000);

/// Decoupled (Matheron) draw: v = (K + Sigma)^{-1} (y - f_n - eps).
/// An empty dataset yields the bare prior.
PosteriorSample draw_posterior_sample(const SeparableSEKernel& kernel, const Dataset& data,
                                      std::uint64_t seed, double eta = 1e-16);

/// Sample-average acquisition alpha_aTS = mu + (f + xi)/sqrt(N_c), built from a
/// single noiseless-path prior draw; N_c = 1 reproduces a pathwise sample and
/// N_c -> infinity the posterior mean.
PosteriorSample sample_average_ats(const SeparableSEKernel& kernel, const Dataset& data,
                                   double n_samples, std::uint64_t seed, double eta = 1e-16);

struct HyperBounds {
    double length_scale_min = 0.02, length_scale_max = 10.0;
    double signal_sd_min = 1e-3, signal_sd_max = 10.0;
    double noise_sd_min = 1e-8, noise_sd_max = 1.0;
    bool fit_noise = false;  // default: sigma_n pinned to the dataset's value
};

struct FittedHyper {
    SeparableSEKernel kernel;
    double noise_sd = 1e-6;
    double log_marginal = 0.0;
    bool converged = false;
};

/// Max log-marginal-likelihood over log-parameters via multistart projected
/// L-BFGS; deterministic given seed. An optional warm start joins the starts.
FittedHyper fit_hyperparameters(const Dataset& data, const HyperBounds& bounds, std::uint64_t seed,
                                int n_starts = 6,
                                const std::optional<SeparableSEKernel>& warm = std::nullopt);

}  // namespace tsroots
