#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <functional>
#include <stdexcept>
#include <vector>

namespace tsroots::cheb {

/// Single Chebyshev expansion p(x) = sum_k a_k T_k(t) on [lo, hi], with
/// t the affine image of x in [-1, 1].
class ChebSeries {
public:
    ChebSeries(Eigen::VectorXd coeffs, double lo, double hi);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const Eigen::VectorXd& coeffs() const { return coeffs_; }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

    /// Clenshaw evaluation at a point in [lo, hi].
    double operator()(double x) const;

    /// Exact derivative series (degree m-1), including the 2/(hi-lo) chain factor.
    ChebSeries derivative() const;

    /// Drops trailing coefficients below rel_tol * max|a_k|. Keeps at least one.
    ChebSeries trimmed(double rel_tol = 1e-13) const;

    /// Real roots inside [lo, hi] via the colleague matrix, sorted ascending.
    std::vector<double> real_roots() const;

private:
    Eigen::VectorXd coeffs_;
    double lo_, hi_;
};

/// Contiguous Chebyshev pieces exactly tiling [lo, hi].
class PiecewiseCheb {
public:
    explicit PiecewiseCheb(std::vector<ChebSeries> pieces);

    double lo() const { return pieces_.front().lo(); }
    double hi() const { return pieces_.back().hi(); }
    const std::vector<ChebSeries>& pieces() const { return pieces_; }
    int max_degree() const;

    double operator()(double x) const;

    PiecewiseCheb derivative() const;

    /// All real roots in [lo, hi], ascending, seam duplicates merged.
    std::vector<double> roots() const;

private:
    std::vector<ChebSeries> pieces_;
};

struct FitOptions {
    int max_degree = 100;      // per-piece degree cap; exceeded -> bisect
    int max_depth = 20;        // bisection recursion cap
    double coeff_tol = 1e-13;  // trailing-coefficient convergence threshold
};

/// Adaptive Chebyshev approximation of f on [lo, hi]: samples at
/// second-kind points with doubling resolution, accepts once the two
/// trailing coefficients drop below coeff_tol * max|a|, and bisects the
/// interval when the required degree exceeds max_degree.
PiecewiseCheb fit(const std::function<double(double)>& f, double lo, double hi,
                  const FitOptions& opts = {});

/// m x m colleague matrix of a degree-m Chebyshev series (a_m != 0):
/// tridiagonal halves plus the rank-one last-row correction -a_k/(2 a_m).
Eigen::MatrixXd colleague_matrix(const Eigen::VectorXd& coeffs);

/// All complex eigenvalues of a real upper-Hessenberg matrix.
/// Balances first (Lemonnier-Van Dooren style norm equalization), then
/// delegates to the dense eigensolver. Throws on non-convergence.
Eigen::VectorXcd eig_hessenberg(const Eigen::MatrixXd& M, bool balance = true);

/// Chebyshev coefficients from values at second-kind points
/// x_j = cos(pi j / n), j = 0..n (values.size() == n + 1).
Eigen::VectorXd coeffs_from_values(const Eigen::VectorXd& values);

/// Second-kind Chebyshev points cos(pi j / n), j = 0..n, mapped to [lo, hi],
/// ordered ascending in x.
Eigen::VectorXd cheb_points(int n, double lo, double hi);

}  // namespace tsroots::cheb
