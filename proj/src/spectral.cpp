#include "tsroots/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace tsroots {

SpectralBasis1D SpectralBasis1D::se_spectrum(double length_scale, double measure_sigma,
                                             double eta, int max_terms) {
    if (!(length_scale > 0.0)) throw std::invalid_argument("se_spectrum: length scale must be positive");
    if (!(measure_sigma > 0.0)) throw std::invalid_argument("se_spectrum: measure sigma must be positive");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("se_spectrum: eta must be in (0, 1)");

    SpectralBasis1D s;
    s.length_scale_ = length_scale;
    s.measure_sigma_ = measure_sigma;
    s.a_ = 1.0 / (2.0 * measure_sigma * measure_sigma);
    s.b_ = 1.0 / (2.0 * length_scale * length_scale);
    s.c_ = std::sqrt(s.a_ * s.a_ + 4.0 * s.a_ * s.b_);
    s.big_a_ = 0.5 * s.a_ + s.b_ + 0.5 * s.c_;
    s.prefactor_ = std::pow(M_PI * s.c_ / s.a_, 0.25);

    // smallest N with lambda_{N-1}/lambda_1 = (b/A)^{N-2} <= eta, clamped to max_terms
    const double ratio = s.b_ / s.big_a_;
    int n = 2;
    double r = 1.0;  // ratio^(n-2)
    while (n < max_terms && r > eta) {
        r *= ratio;
        ++n;
    }
    s.truncation_ = n;

    s.eigenvalues_.resize(n);
    double lam = std::sqrt(s.a_ / s.big_a_);
    for (int k = 0; k < n; ++k) {
        s.eigenvalues_[k] = lam;
        lam *= ratio;
    }
    s.rec_y_.resize(n);
    s.rec_prev_.resize(n);
    s.rec_y_[0] = s.rec_prev_[0] = 0.0;
    for (int k = 1; k < n; ++k) {
        s.rec_y_[k] = std::sqrt(2.0 / k);
        s.rec_prev_[k] = std::sqrt((k - 1.0) / k);
    }
    return s;
}

double SpectralBasis1D::eigenvalue(int k) const {
    return eigenvalues_[k];
}

namespace {

constexpr double kPiQuarter = 0.7511255444649425;     // pi^{-1/4}
constexpr double kRescaleAt = 1e280;
constexpr double kRescaleLog = 644.6670890640312;     // log(1e280)

// signed exp(log|m| + expo), 0 when m == 0
double signed_exp(double m, double expo) {
    if (m == 0.0) return 0.0;
    const double v = std::exp(std::log(std::abs(m)) + expo);
    return m < 0.0 ? -v : v;
}

}  // namespace

double SpectralBasis1D::hermite_values(double y, int n, Eigen::VectorXd& u) const {
    u.resize(n);
    double log_scale = 0.0;
    if (n == 0) return log_scale;
    u[0] = kPiQuarter;
    if (n == 1) return log_scale;
    u[1] = rec_y_[1] * y * kPiQuarter;
    for (int k = 2; k < n; ++k) {
        u[k] = rec_y_[k] * y * u[k - 1] - rec_prev_[k] * u[k - 2];
        if (std::abs(u[k]) > kRescaleAt) {
            u.head(k + 1) /= kRescaleAt;
            log_scale += kRescaleLog;
        }
    }
    return log_scale;
}

double SpectralBasis1D::eigenfunction(int k, double x) const {
    if (k < 0 || k >= truncation_) throw std::out_of_range("eigenfunction: k out of range");
    Eigen::VectorXd u;
    const double log_scale = hermite_values(std::sqrt(c_) * x, k + 1, u);
    const double expo = log_scale - 0.5 * (c_ - a_) * x * x;
    const double val = (log_scale == 0.0) ? prefactor_ * u[k] * std::exp(expo)
                                          : signed_exp(prefactor_ * u[k], expo);
    if (!std::isfinite(val)) throw std::runtime_error("eigenfunction overflow");
    return val;
}

double SpectralBasis1D::eigenfunction_deriv(int k, double x) const {
    if (k < 0 || k >= truncation_) throw std::out_of_range("eigenfunction_deriv: k out of range");
    const double y = std::sqrt(c_) * x;
    Eigen::VectorXd u;
    const double log_scale = hermite_values(y, k + 1, u);
    const double expo = log_scale - 0.5 * (c_ - a_) * x * x;
    const double lower = (k >= 1) ? std::sqrt(2.0 * k) * std::sqrt(c_) * u[k - 1] : 0.0;
    const double core = lower - (c_ - a_) * x * u[k];
    return (log_scale == 0.0) ? prefactor_ * core * std::exp(expo)
                              : signed_exp(prefactor_ * core, expo);
}

void SpectralBasis1D::eigenfunctions(double x, Eigen::VectorXd& out) const {
    const double log_scale = hermite_values(std::sqrt(c_) * x, truncation_, out);
    const double expo = log_scale - 0.5 * (c_ - a_) * x * x;
    if (log_scale == 0.0) {
        out *= prefactor_ * std::exp(expo);
    } else {
        for (Eigen::Index k = 0; k < out.size(); ++k) {
            out[k] = signed_exp(prefactor_ * out[k], expo);
        }
    }
}

double kernel_reconstruction_error(const SpectralBasis1D& basis, const Eigen::VectorXd& grid,
                                   int n_terms) {
    const int n = (n_terms < 0) ? basis.truncation() : std::min(n_terms, basis.truncation());
    const Eigen::Index g = grid.size();
    Eigen::MatrixXd phi(g, n);
    Eigen::VectorXd row;
    for (Eigen::Index i = 0; i < g; ++i) {
        basis.eigenfunctions(grid[i], row);
        phi.row(i) = row.head(n);
    }
    Eigen::VectorXd lam(n);
    for (int k = 0; k < n; ++k) lam[k] = basis.eigenvalue(k);
    const Eigen::MatrixXd approx = phi * lam.asDiagonal() * phi.transpose();
    const double inv2l2 = 1.0 / (2.0 * basis.length_scale() * basis.length_scale());
    double err = 0.0;
    for (Eigen::Index i = 0; i < g; ++i) {
        for (Eigen::Index j = 0; j < g; ++j) {
            const double d = grid[i] - grid[j];
            err = std::max(err, std::abs(std::exp(-d * d * inv2l2) - approx(i, j)));
        }
    }
    return err;
}

SeparablePriorSample::SeparablePriorSample(std::vector<SpectralBasis1D> bases, std::uint64_t seed)
    : bases_(std::move(bases)) {
    if (bases_.empty()) throw std::invalid_argument("SeparablePriorSample: need at least one dimension");
    Rng rng(seed);
    weights_.reserve(bases_.size());
    for (const auto& b : bases_) {
        Eigen::VectorXd w(b.truncation());
        for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = rng.normal();
        weights_.push_back(std::move(w));
    }
    bake();
}

SeparablePriorSample::SeparablePriorSample(std::vector<SpectralBasis1D> bases,
                                           std::vector<Eigen::VectorXd> weights)
    : bases_(std::move(bases)), weights_(std::move(weights)) {
    if (bases_.size() != weights_.size()) {
        throw std::invalid_argument("SeparablePriorSample: bases/weights size mismatch");
    }
    for (std::size_t i = 0; i < bases_.size(); ++i) {
        if (weights_[i].size() != bases_[i].truncation()) {
            throw std::invalid_argument("SeparablePriorSample: weight count must equal truncation");
        }
    }
    bake();
}

void SeparablePriorSample::bake() {
    coefs_.clear();
    coefs_.reserve(bases_.size());
    const Eigen::Index d = static_cast<Eigen::Index>(bases_.size());
    sqrt_c_.resize(d);
    envelope_.resize(d);
    prefactor_.resize(d);
    for (std::size_t i = 0; i < bases_.size(); ++i) {
        const auto& b = bases_[i];
        Eigen::VectorXd c(b.truncation());
        for (int k = 0; k < b.truncation(); ++k) {
            c[k] = weights_[i][k] * std::sqrt(b.eigenvalue(k));
        }
        coefs_.push_back(std::move(c));
        sqrt_c_[static_cast<Eigen::Index>(i)] = std::sqrt(b.c());
        envelope_[static_cast<Eigen::Index>(i)] = b.c() - b.a();
        prefactor_[static_cast<Eigen::Index>(i)] = std::pow(M_PI * b.c() / b.a(), 0.25);
    }
}

double SeparablePriorSample::component(int i, double xi) const {
    double value, deriv;
    component_value_deriv(i, xi, value, deriv);
    return value;
}

double SeparablePriorSample::component_deriv(int i, double xi) const {
    double value, deriv;
    component_value_deriv(i, xi, value, deriv);
    return deriv;
}

void SeparablePriorSample::component_value_deriv(int i, double xi, double& value,
                                                 double& deriv) const {
    const auto& b = bases_[static_cast<std::size_t>(i)];
    const double* coef = coefs_[static_cast<std::size_t>(i)].data();
    const double* ry = b.rec_y().data();       // sqrt(2/k)
    const double* rp = b.rec_prev().data();    // sqrt((k-1)/k)
    const double sc = sqrt_c_[i];
    const double cma = envelope_[i];
    const double y = sc * xi;
    const int n = b.truncation();
    double log_scale = 0.0;
    double ukm1 = kPiQuarter;
    double acc = coef[0] * ukm1;       // sum coef_k u_k
    double dacc = 0.0;                 // sum coef_k sqrt(2k) u_{k-1}
    if (n > 1) {
        double uk = ry[1] * y * kPiQuarter;
        acc += coef[1] * uk;
        dacc += coef[1] * ry[1] * ukm1;  // sqrt(2k) = k sqrt(2/k)
        for (int k = 2; k < n; ++k) {
            const double ukp = ry[k] * y * uk - rp[k] * ukm1;
            ukm1 = uk;
            uk = ukp;
            acc += coef[k] * uk;
            dacc += coef[k] * (k * ry[k]) * ukm1;
            if (std::abs(uk) > kRescaleAt) {
                uk /= kRescaleAt;
                ukm1 /= kRescaleAt;
                acc /= kRescaleAt;
                dacc /= kRescaleAt;
                log_scale += kRescaleLog;
            }
        }
    }
    const double pre = prefactor_[i];
    const double expo = log_scale - 0.5 * cma * xi * xi;
    const double core = sc * dacc - cma * xi * acc;
    if (log_scale == 0.0) {
        const double env = std::exp(expo);
        value = pre * acc * env;
        deriv = pre * core * env;
    } else {
        value = signed_exp(pre * acc, expo);
        deriv = signed_exp(pre * core, expo);
    }
}

double SeparablePriorSample::value(const Eigen::VectorXd& x) const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= component(i, x[i]);
    return v;
}

Eigen::VectorXd SeparablePriorSample::gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g;
    value_and_gradient(x, g);
    return g;
}

double SeparablePriorSample::value_and_gradient(const Eigen::VectorXd& x,
                                                Eigen::VectorXd& grad) const {
    const int d = dim();
    Eigen::VectorXd vals(d), derivs(d);
    for (int i = 0; i < d; ++i) {
        component_value_deriv(i, x[i], vals[i], derivs[i]);
    }
    // prefix/suffix products make zero components harmless
    Eigen::VectorXd prefix(d + 1), suffix(d + 1);
    prefix[0] = 1.0;
    for (int i = 0; i < d; ++i) prefix[i + 1] = prefix[i] * vals[i];
    suffix[d] = 1.0;
    for (int i = d - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * vals[i];
    grad.resize(d);
    for (int i = 0; i < d; ++i) grad[i] = derivs[i] * prefix[i] * suffix[i + 1];
    return prefix[d];
}

RffPriorSample::RffPriorSample(const Eigen::VectorXd& length_scales, int n_features,
                               std::uint64_t seed, double sigma_f) {
    if (n_features < 1) throw std::invalid_argument("RffPriorSample: need at least one feature");
    const int d = static_cast<int>(length_scales.size());
    Rng rng(seed);
    frequencies_.resize(n_features, d);
    phases_.resize(n_features);
    for (int m = 0; m < n_features; ++m) {
        for (int i = 0; i < d; ++i) {
            frequencies_(m, i) = rng.normal() / length_scales[i];
        }
        phases_[m] = rng.uniform(0.0, 2.0 * M_PI);
    }
    amplitude_ = std::sqrt(2.0 / n_features) * sigma_f;
}

double RffPriorSample::value(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd arg = frequencies_ * x + phases_;
    return amplitude_ * arg.array().cos().sum();
}

Eigen::VectorXd RffPriorSample::gradient(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd arg = frequencies_ * x + phases_;
    return -amplitude_ * (frequencies_.transpose() * arg.array().sin().matrix());
}

Eigen::VectorXd RffPriorSample::features(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd arg = frequencies_ * x + phases_;
    return amplitude_ * arg.array().cos().matrix();
}

double rff_reconstruction_error(const RffPriorSample& sample, double length_scale,
                                const Eigen::VectorXd& grid) {
    const Eigen::Index g = grid.size();
    Eigen::MatrixXd phi(g, sample.n_features());
    Eigen::VectorXd x(1);
    for (Eigen::Index i = 0; i < g; ++i) {
        x[0] = grid[i];
        phi.row(i) = sample.features(x);
    }
    const Eigen::MatrixXd approx = phi * phi.transpose();
    const double inv2l2 = 1.0 / (2.0 * length_scale * length_scale);
    double err = 0.0;
    for (Eigen::Index i = 0; i < g; ++i) {
        for (Eigen::Index j = 0; j < g; ++j) {
            const double d = grid[i] - grid[j];
            err = std::max(err, std::abs(std::exp(-d * d * inv2l2) - approx(i, j)));
        }
    }
    return err;
}

}  // namespace tsroots
