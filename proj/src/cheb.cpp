#include "tsroots/cheb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tsroots::cheb {

namespace {

constexpr double kImagTol = 1e-10;      // eigenvalue kept if |Im| <= tol*(1+|Re|)
constexpr double kDomainInflate = 1e-12;  // acceptance window beyond [-1,1]
constexpr double kSeamMergeTol = 1e-10;   // duplicate roots merged within this

// Iterative two-norm balancing (arXiv:1401.5766, Algorithm 3).
Eigen::MatrixXd balance(const Eigen::MatrixXd& A) {
    Eigen::MatrixXd B = A;
    const double beta = 2.0;
    bool converged = false;
    int iter = 0;
    while (!converged && iter++ < 50) {
        converged = true;
        for (Eigen::Index i = 0; i < B.rows(); ++i) {
            double c = B.col(i).norm();
            double r = B.row(i).norm();
            if (c == 0.0 || r == 0.0) continue;
            const double s = c * c + r * r;
            double f = 1.0;
            while (c < r / beta) { c *= beta; r /= beta; f *= beta; }
            while (c >= r * beta) { c /= beta; r *= beta; f /= beta; }
            if (c * c + r * r < 0.95 * s) {
                converged = false;
                B.col(i) *= f;
                B.row(i) /= f;
            }
        }
    }
    return B;
}

}  // namespace

ChebSeries::ChebSeries(Eigen::VectorXd coeffs, double lo, double hi)
    : coeffs_(std::move(coeffs)), lo_(lo), hi_(hi) {
    if (!(lo_ < hi_)) throw std::invalid_argument("ChebSeries: lo must be < hi");
    if (coeffs_.size() == 0) coeffs_ = Eigen::VectorXd::Zero(1);
}

double ChebSeries::operator()(double x) const {
    const double t = (2.0 * x - (hi_ + lo_)) / (hi_ - lo_);
    const Eigen::Index m = coeffs_.size() - 1;
    if (m == 0) return coeffs_[0];
    if (m == 1) return coeffs_[0] + coeffs_[1] * t;
    double ukp1 = coeffs_[m], ukp2 = 0.0;
    for (Eigen::Index k = m - 1; k >= 1; --k) {
        const double uk = 2.0 * t * ukp1 - ukp2 + coeffs_[k];
        ukp2 = ukp1;
        ukp1 = uk;
    }
    return t * ukp1 - ukp2 + coeffs_[0];
}

ChebSeries ChebSeries::derivative() const {
    const Eigen::Index m = coeffs_.size() - 1;
    if (m == 0) return ChebSeries(Eigen::VectorXd::Zero(1), lo_, hi_);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
    // d_{k-1} = d_{k+1} + 2k a_k, descending k; first coefficient halved.
    d[m - 1] = 2.0 * static_cast<double>(m) * coeffs_[m];
    if (m >= 2) d[m - 2] = 2.0 * static_cast<double>(m - 1) * coeffs_[m - 1];
    for (Eigen::Index k = m - 2; k >= 1; --k) {
        d[k - 1] = d[k + 1] + 2.0 * static_cast<double>(k) * coeffs_[k];
    }
    d[0] *= 0.5;
    d *= 2.0 / (hi_ - lo_);
    return ChebSeries(std::move(d), lo_, hi_);
}

ChebSeries ChebSeries::trimmed(double rel_tol) const {
    const double scale = coeffs_.cwiseAbs().maxCoeff();
    if (scale == 0.0) return ChebSeries(Eigen::VectorXd::Zero(1), lo_, hi_);
    Eigen::Index last = 0;
    for (Eigen::Index k = 0; k < coeffs_.size(); ++k) {
        if (std::abs(coeffs_[k]) > rel_tol * scale) last = k;
    }
    return ChebSeries(coeffs_.head(last + 1).eval(), lo_, hi_);
}

Eigen::MatrixXd colleague_matrix(const Eigen::VectorXd& coeffs) {
    const Eigen::Index m = coeffs.size() - 1;
    if (m < 1) throw std::invalid_argument("colleague_matrix: degree must be >= 1");
    if (coeffs[m] == 0.0) throw std::invalid_argument("colleague_matrix: leading coefficient is zero");
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, m);
    if (m == 1) {
        // degenerate case: a0 + a1 T_1(t) has the single root -a0/a1
        C(0, 0) = -coeffs[0] / coeffs[1];
        return C;
    }
    C(0, 1) = 1.0;
    for (Eigen::Index j = 1; j + 1 < m; ++j) {
        C(j, j - 1) = 0.5;
        C(j, j + 1) = 0.5;
    }
    C(m - 1, m - 2) = 0.5;
    C.row(m - 1) -= coeffs.head(m).transpose() / (2.0 * coeffs[m]);
    return C;
}

Eigen::VectorXcd eig_hessenberg(const Eigen::MatrixXd& M, bool do_balance) {
    if (M.rows() != M.cols()) throw std::invalid_argument("eig_hessenberg: matrix must be square");
    for (Eigen::Index j = 0; j + 2 < M.cols(); ++j) {
        if (M.col(j).tail(M.rows() - j - 2).cwiseAbs().maxCoeff() != 0.0) {
            throw std::invalid_argument("eig_hessenberg: matrix is not upper Hessenberg");
        }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver;
    solver.compute(do_balance ? balance(M) : M, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eig_hessenberg: eigensolve did not converge");
    }
    return solver.eigenvalues();
}

std::vector<double> ChebSeries::real_roots() const {
    const ChebSeries p = trimmed();
    const Eigen::Index m = p.coeffs().size() - 1;
    std::vector<double> out;
    if (m == 0) return out;  // constants (including zero) have no isolated roots
    std::vector<double> tvals;
    if (m == 1) {
        tvals.push_back(-p.coeffs()[0] / p.coeffs()[1]);
    } else {
        // the colleague matrix has a dense last row; its transpose is the
        // upper-Hessenberg form the eigensolver front-end expects
        const Eigen::VectorXcd eigs =
            eig_hessenberg(colleague_matrix(p.coeffs()).transpose());
        tvals.reserve(eigs.size());
        for (Eigen::Index i = 0; i < eigs.size(); ++i) {
            if (std::abs(eigs[i].imag()) <= kImagTol * (1.0 + std::abs(eigs[i].real()))) {
                tvals.push_back(eigs[i].real());
            }
        }
    }
    for (double t : tvals) {
        if (t < -1.0 - kDomainInflate || t > 1.0 + kDomainInflate) continue;
        double x = 0.5 * ((hi_ - lo_) * t + hi_ + lo_);
        x = std::clamp(x, lo_, hi_);
        out.push_back(x);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](double a, double b) { return std::abs(a - b) <= kSeamMergeTol; }),
              out.end());
    return out;
}

PiecewiseCheb::PiecewiseCheb(std::vector<ChebSeries> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw std::invalid_argument("PiecewiseCheb: no pieces");
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
        if (pieces_[i].lo() != pieces_[i - 1].hi()) {
            throw std::invalid_argument("PiecewiseCheb: pieces must tile the interval");
        }
    }
}

int PiecewiseCheb::max_degree() const {
    int d = 0;
    for (const auto& p : pieces_) d = std::max(d, p.degree());
    return d;
}

double PiecewiseCheb::operator()(double x) const {
    const double xc = std::clamp(x, lo(), hi());
    std::size_t i = 0;
    // pieces are few; linear scan beats binary search for typical sizes
    while (i + 1 < pieces_.size() && xc > pieces_[i].hi()) ++i;
    return pieces_[i](xc);
}

PiecewiseCheb PiecewiseCheb::derivative() const {
    std::vector<ChebSeries> out;
    out.reserve(pieces_.size());
    for (const auto& p : pieces_) out.push_back(p.derivative());
    return PiecewiseCheb(std::move(out));
}

std::vector<double> PiecewiseCheb::roots() const {
    std::vector<double> all;
    for (const auto& p : pieces_) {
        const auto r = p.real_roots();
        all.insert(all.end(), r.begin(), r.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end(),
                          [](double a, double b) { return std::abs(a - b) <= kSeamMergeTol; }),
              all.end());
    return all;
}

Eigen::VectorXd cheb_points(int n, double lo, double hi) {
    Eigen::VectorXd x(n + 1);
    for (int j = 0; j <= n; ++j) {
        const double t = std::cos(M_PI * static_cast<double>(n - j) / static_cast<double>(n));
        x[j] = 0.5 * ((hi - lo) * t + hi + lo);
    }
    x[0] = lo;
    x[n] = hi;
    return x;
}

Eigen::VectorXd coeffs_from_values(const Eigen::VectorXd& values) {
    const int n = static_cast<int>(values.size()) - 1;
    if (n < 1) return values;
    Eigen::VectorXd a(n + 1);
    // values are ordered ascending in x, i.e. v_j = f(cos(pi (n-j)/n))
    for (int k = 0; k <= n; ++k) {
        double s = 0.0;
        for (int j = 0; j <= n; ++j) {
            const double pj = (j == 0 || j == n) ? 2.0 : 1.0;
            s += values[n - j] * std::cos(M_PI * static_cast<double>(j) * k / n) / pj;
        }
        const double pk = (k == 0 || k == n) ? 2.0 : 1.0;
        a[k] = 2.0 * s / (pk * n);
    }
    return a;
}

namespace {

void fit_recursive(const std::function<double(double)>& f, double lo, double hi,
                   const FitOptions& opts, int depth, std::vector<ChebSeries>& out) {
    // climb to the first power of two holding the degree cap
    int top = 8;
    while (top < opts.max_degree) top *= 2;

    for (int n = 8; n <= top; n *= 2) {
        const Eigen::VectorXd x = cheb_points(n, lo, hi);
        Eigen::VectorXd v(n + 1);
        for (int j = 0; j <= n; ++j) {
            v[j] = f(x[j]);
            if (!std::isfinite(v[j])) {
                std::ostringstream msg;
                msg << "fit: non-finite sample at x = " << x[j];
                throw std::runtime_error(msg.str());
            }
        }
        const Eigen::VectorXd a = coeffs_from_values(v);
        const double scale = a.cwiseAbs().maxCoeff();
        if (scale == 0.0) {
            out.emplace_back(Eigen::VectorXd::Zero(1), lo, hi);
            return;
        }
        if (std::abs(a[n]) <= opts.coeff_tol * scale && std::abs(a[n - 1]) <= opts.coeff_tol * scale) {
            ChebSeries piece = ChebSeries(a, lo, hi).trimmed(opts.coeff_tol);
            if (piece.degree() <= opts.max_degree) {
                out.push_back(std::move(piece));
                return;
            }
            break;  // resolved but above the cap: bisect
        }
    }
    if (depth >= opts.max_depth) {
        throw std::runtime_error("fit: did not converge within the subdivision depth cap");
    }
    const double mid = 0.5 * (lo + hi);
    fit_recursive(f, lo, mid, opts, depth + 1, out);
    fit_recursive(f, mid, hi, opts, depth + 1, out);
}

}  // namespace

PiecewiseCheb fit(const std::function<double(double)>& f, double lo, double hi,
                  const FitOptions& opts) {
    if (!(lo < hi)) throw std::invalid_argument("fit: lo must be < hi");
    std::vector<ChebSeries> pieces;
    fit_recursive(f, lo, hi, opts, 0, pieces);
    return PiecewiseCheb(std::move(pieces));
}

}  // namespace tsroots::cheb
