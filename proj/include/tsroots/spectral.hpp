#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "tsroots/rng.hpp"

namespace tsroots {

/// Mercer eigenpairs of the univariate squared-exponential kernel
/// exp(-(x-x')^2 / (2 l^2)) under the Gaussian measure N(0, sigma^2).
///
/// With a = 1/(2 sigma^2), b = 1/(2 l^2), c = sqrt(a^2 + 4ab) and
/// A = a/2 + b + c/2, the eigenvalues are lambda_k = sqrt(a/A) (b/A)^k and
/// the eigenfunctions phi_k(x) = (pi c / a)^{1/4} psi_k(sqrt(c) x) exp(a x^2 / 2),
/// psi_k the k-th normalized Hermite function.
class SpectralBasis1D {
public:
    static SpectralBasis1D se_spectrum(double length_scale, double measure_sigma = 1.0,
                                       double eta = 1e-16, int max_terms = 1000);

    double length_scale() const { return length_scale_; }
    double measure_sigma() const { return measure_sigma_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }
    double big_a() const { return big_a_; }
    double decay_ratio() const { return b_ / big_a_; }
    int truncation() const { return truncation_; }

    double eigenvalue(int k) const;

    double eigenfunction(int k, double x) const;
    double eigenfunction_deriv(int k, double x) const;

    /// phi_k(x) for all k < truncation in one recurrence pass.
    void eigenfunctions(double x, Eigen::VectorXd& out) const;

    /// Precomputed recurrence weights sqrt(2/k) and sqrt((k-1)/k), k < N.
    const Eigen::VectorXd& rec_y() const { return rec_y_; }
    const Eigen::VectorXd& rec_prev() const { return rec_prev_; }

private:
    SpectralBasis1D() = default;

    // Hermite-normalized polynomial values u_k * e^{scale} = psi_k(y) e^{y^2/2}
    // for all k < n. Returns the accumulated log scale; the caller folds it
    // with the exp(-(c-a) x^2 / 2) envelope before exponentiating, so values
    // stay finite wherever the true eigenfunction is representable.
    double hermite_values(double y, int n, Eigen::VectorXd& u) const;

    double length_scale_ = 1.0;
    double measure_sigma_ = 1.0;
    double a_ = 0.0, b_ = 0.0, c_ = 0.0, big_a_ = 0.0;
    double prefactor_ = 0.0;  // (pi c / a)^{1/4}
    int truncation_ = 0;
    Eigen::VectorXd eigenvalues_;
    Eigen::VectorXd rec_y_, rec_prev_;
};

/// Max over grid pairs of |kappa_SE(x, x') - sum_{k<n_terms} lambda_k phi_k phi_k'|.
double kernel_reconstruction_error(const SpectralBasis1D& basis, const Eigen::VectorXd& grid,
                                   int n_terms = -1);

/// One separable GP prior draw: f(x) = prod_i f_i(x_i),
/// f_i(x) = sum_k w_{ik} sqrt(lambda_{ik}) phi_{ik}(x), w iid standard normal.
class SeparablePriorSample {
public:
    SeparablePriorSample(std::vector<SpectralBasis1D> bases, std::uint64_t seed);
    SeparablePriorSample(std::vector<SpectralBasis1D> bases,
                         std::vector<Eigen::VectorXd> weights);

    int dim() const { return static_cast<int>(bases_.size()); }
    const SpectralBasis1D& basis(int i) const { return bases_[static_cast<std::size_t>(i)]; }
    const Eigen::VectorXd& weights(int i) const { return weights_[static_cast<std::size_t>(i)]; }

    double component(int i, double xi) const;
    double component_deriv(int i, double xi) const;
    void component_value_deriv(int i, double xi, double& value, double& deriv) const;

    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

    /// Value and gradient from one pass over the component recurrences.
    double value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;

private:
    void bake();

    std::vector<SpectralBasis1D> bases_;
    std::vector<Eigen::VectorXd> weights_;
    std::vector<Eigen::VectorXd> coefs_;  // w_k sqrt(lambda_k), per dim
    Eigen::VectorXd sqrt_c_, envelope_, prefactor_;  // per-dim cached constants
};

/// Random-Fourier-feature draw from the same separable SE prior:
/// f(x) = amplitude * sum_m cos(omega_m . x + tau_m), omega ~ SE spectral density.
class RffPriorSample {
public:
    RffPriorSample(const Eigen::VectorXd& length_scales, int n_features, std::uint64_t seed,
                   double sigma_f = 1.0);

    int dim() const { return static_cast<int>(frequencies_.cols()); }
    int n_features() const { return static_cast<int>(frequencies_.rows()); }
    double amplitude() const { return amplitude_; }

    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

    /// Feature map phi(x), so that phi(x) . phi(x') estimates kappa(x, x').
    Eigen::VectorXd features(const Eigen::VectorXd& x) const;

private:
    Eigen::MatrixXd frequencies_;  // M x d
    Eigen::VectorXd phases_;       // M
    double amplitude_ = 0.0;
};

/// Max over grid pairs of |kappa_SE - phi(x).phi(x')| for one RFF draw (d = 1).
double rff_reconstruction_error(const RffPriorSample& sample, double length_scale,
                                const Eigen::VectorXd& grid);

}  // namespace tsroots
