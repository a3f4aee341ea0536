#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tsroots/spectral.hpp"

using namespace tsroots;

TEST_CASE("se_spectrum: closed-form constants at l = sigma = 1") {
    const auto s = SpectralBasis1D::se_spectrum(1.0, 1.0, 1e-16);
    CHECK(s.a() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.b() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.c() == doctest::Approx(1.118034).epsilon(1e-6));
    CHECK(s.big_a() == doctest::Approx(1.309017).epsilon(1e-6));
    CHECK(s.decay_ratio() == doctest::Approx(0.381966).epsilon(1e-6));
    CHECK(s.eigenvalue(0) == doctest::Approx(0.618034).epsilon(1e-6));
    CHECK(s.eigenvalue(1) == doctest::Approx(0.236068).epsilon(1e-6));
    CHECK(s.truncation() == 41);
}

TEST_CASE("se_spectrum: truncation rule is minimal and clamps at 1000") {
    const auto s = SpectralBasis1D::se_spectrum(1.0, 1.0, 1e-16);
    const double ratio = s.decay_ratio();
    const int n = s.truncation();
    CHECK(std::pow(ratio, n - 2) <= 1e-16);
    CHECK(std::pow(ratio, n - 3) > 1e-16);

    // tiny length scale: slow decay, hits the clamp
    const auto tight = SpectralBasis1D::se_spectrum(1e-3, 1.0, 1e-16);
    CHECK(tight.truncation() == 1000);
}

TEST_CASE("se_spectrum: eigenvalue decay is exactly geometric") {
    const auto s = SpectralBasis1D::se_spectrum(0.4, 1.0, 1e-12);
    const double ratio = s.decay_ratio();
    CHECK(ratio > 0.0);
    CHECK(ratio < 1.0);
    for (int k = 1; k < s.truncation(); ++k) {
        CHECK(s.eigenvalue(k) == doctest::Approx(s.eigenvalue(k - 1) * ratio).epsilon(1e-14));
    }
}

TEST_CASE("se_spectrum input validation") {
    CHECK_THROWS_AS(SpectralBasis1D::se_spectrum(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(SpectralBasis1D::se_spectrum(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(SpectralBasis1D::se_spectrum(1.0, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("eigenfunction: phi_0(0) = (c/a)^{1/4} and phi_1(0) = 0") {
    const auto s = SpectralBasis1D::se_spectrum(1.0, 1.0, 1e-16);
    CHECK(s.eigenfunction(0, 0.0) ==
          doctest::Approx(std::pow(s.c() / s.a(), 0.25)).epsilon(1e-12));
    CHECK(s.eigenfunction(0, 0.0) == doctest::Approx(1.22284).epsilon(1e-5));
    CHECK(s.eigenfunction(1, 0.0) == doctest::Approx(0.0));
    const auto s2 = SpectralBasis1D::se_spectrum(0.3, 0.7, 1e-10);
    CHECK(s2.eigenfunction(1, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("eigenfunction stays finite for |x| <= 10 and high order") {
    const auto s = SpectralBasis1D::se_spectrum(0.01, 1.0, 1e-16);
    REQUIRE(s.truncation() == 1000);
    for (const double x : {-10.0, -3.7, 0.0, 5.1, 10.0}) {
        CHECK(std::isfinite(s.eigenfunction(999, x)));
    }
}

TEST_CASE("eigenfunctions are orthonormal under the Gaussian measure") {
    // Gauss-Hermite oracle: integral phi_j phi_k dN(0, sigma^2), substituting
    // t = sqrt(a) x so the weight becomes exp(-t^2)/sqrt(pi)
    const auto s = SpectralBasis1D::se_spectrum(1.0, 1.0, 1e-16);
    Eigen::VectorXd t, w;
    oracles::gauss_hermite(80, t, w);
    for (int j = 0; j <= 10; ++j) {
        for (int k = j; k <= 10; ++k) {
            double acc = 0.0;
            for (Eigen::Index q = 0; q < t.size(); ++q) {
                const double x = t[q] / std::sqrt(s.a());
                acc += w[q] * s.eigenfunction(j, x) * s.eigenfunction(k, x);
            }
            acc /= std::sqrt(M_PI);
            const double want = (j == k) ? 1.0 : 0.0;
            CHECK(std::abs(acc - want) < 1e-8);
        }
    }
}

TEST_CASE("eigenfunction_deriv matches finite differences") {
    const auto s = SpectralBasis1D::se_spectrum(0.5, 1.0, 1e-14);
    const double h = 1e-6;
    for (const int k : {0, 1, 3, 7, 15}) {
        for (const double x : {-0.9, -0.2, 0.0, 0.4, 1.0}) {
            const double fd = (s.eigenfunction(k, x + h) - s.eigenfunction(k, x - h)) / (2.0 * h);
            CHECK(s.eigenfunction_deriv(k, x) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("kernel reconstruction error on [-1,1]") {
    const auto s = SpectralBasis1D::se_spectrum(1.0, 1.0, 1e-16);
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(21, -1.0, 1.0);
    CHECK(kernel_reconstruction_error(s, grid) < 1e-10);
    CHECK(kernel_reconstruction_error(s, grid, 1) > 0.1);

    // diagonal alone: kappa(x, x) = 1
    double diag_err = 0.0;
    Eigen::VectorXd phi;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        s.eigenfunctions(grid[i], phi);
        double acc = 0.0;
        for (int k = 0; k < s.truncation(); ++k) acc += s.eigenvalue(k) * phi[k] * phi[k];
        diag_err = std::max(diag_err, std::abs(acc - 1.0));
    }
    CHECK(diag_err < 1e-10);
}

TEST_CASE("sample_prior: single-term weights give the product of first eigenfunctions") {
    std::vector<SpectralBasis1D> bases;
    bases.push_back(SpectralBasis1D::se_spectrum(1.0, 1.0, 1e-16));
    bases.push_back(SpectralBasis1D::se_spectrum(0.5, 1.0, 1e-16));
    std::vector<Eigen::VectorXd> weights;
    for (const auto& b : bases) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(b.truncation());
        w[0] = 1.0;
        weights.push_back(w);
    }
    const SeparablePriorSample sample(bases, weights);
    Eigen::VectorXd x(2);
    x << 0.3, -0.6;
    double want = 1.0;
    for (int i = 0; i < 2; ++i) {
        want *= std::sqrt(bases[static_cast<std::size_t>(i)].eigenvalue(0)) *
                bases[static_cast<std::size_t>(i)].eigenfunction(0, x[i]);
    }
    CHECK(sample.value(x) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("sample_prior determinism and product form") {
    std::vector<SpectralBasis1D> bases(2, SpectralBasis1D::se_spectrum(0.8, 1.0, 1e-16));
    const SeparablePriorSample a(bases, 42);
    const SeparablePriorSample b(bases, 42);
    const SeparablePriorSample c(bases, 43);
    Eigen::VectorXd x(2);
    x << 0.11, -0.77;
    CHECK(a.value(x) == b.value(x));
    CHECK(a.value(x) != c.value(x));
    CHECK(a.value(x) ==
          doctest::Approx(a.component(0, x[0]) * a.component(1, x[1])).epsilon(1e-15));
}

TEST_CASE("sample_prior: empirical variance at 0 matches the spectral sum") {
    const auto basis = SpectralBasis1D::se_spectrum(1.0, 1.0, 1e-16);
    double want = 0.0;
    for (int k = 0; k < basis.truncation(); ++k) {
        const double phi = basis.eigenfunction(k, 0.0);
        want += basis.eigenvalue(k) * phi * phi;
    }
    std::vector<SpectralBasis1D> bases{basis};
    std::vector<double> draws;
    draws.reserve(5000);
    Eigen::VectorXd x(1);
    x << 0.0;
    for (int seed = 0; seed < 5000; ++seed) {
        draws.push_back(SeparablePriorSample(bases, static_cast<std::uint64_t>(seed)).value(x));
    }
    const auto stats = oracles::mean_var(draws);
    CHECK(std::abs(stats.var - want) <= 3.0 * stats.var_stderr());
}

TEST_CASE("component gradient matches finite differences and zero weights vanish") {
    std::vector<SpectralBasis1D> bases;
    bases.push_back(SpectralBasis1D::se_spectrum(0.6, 1.0, 1e-16));
    bases.push_back(SpectralBasis1D::se_spectrum(1.3, 1.0, 1e-16));
    const SeparablePriorSample sample(bases, 7);
    Rng rng(5);
    const double h = 1e-6;
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd x(2);
        x << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
        const Eigen::VectorXd g = sample.gradient(x);
        for (int i = 0; i < 2; ++i) {
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (sample.value(xp) - sample.value(xm)) / (2.0 * h);
            CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5));
        }
    }

    std::vector<Eigen::VectorXd> zero_w;
    for (const auto& b : bases) zero_w.push_back(Eigen::VectorXd::Zero(b.truncation()));
    const SeparablePriorSample zero(bases, zero_w);
    CHECK(zero.component(0, 0.37) == 0.0);
    CHECK(zero.value((Eigen::VectorXd(2) << 0.1, 0.2).finished()) == 0.0);
}

TEST_CASE("prior sample paths are C1: finite gradient across the box") {
    std::vector<SpectralBasis1D> bases(3, SpectralBasis1D::se_spectrum(0.25, 1.0, 1e-16));
    const SeparablePriorSample sample(bases, 99);
    Rng rng(31);
    for (int t = 0; t < 200; ++t) {
        Eigen::VectorXd x(3);
        for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-1.0, 1.0);
        CHECK(sample.gradient(x).allFinite());
    }
}

TEST_CASE("product-form second moment factorizes (statistical, d = 2)") {
    std::vector<SpectralBasis1D> bases;
    bases.push_back(SpectralBasis1D::se_spectrum(0.7, 1.0, 1e-16));
    bases.push_back(SpectralBasis1D::se_spectrum(1.1, 1.0, 1e-16));
    Eigen::VectorXd x(2), xp(2);
    x << 0.2, -0.4;
    xp << -0.5, 0.6;
    double want = 1.0;
    for (int i = 0; i < 2; ++i) {
        const auto& b = bases[static_cast<std::size_t>(i)];
        double acc = 0.0;
        for (int k = 0; k < b.truncation(); ++k) {
            acc += b.eigenvalue(k) * b.eigenfunction(k, x[i]) * b.eigenfunction(k, xp[i]);
        }
        want *= acc;
    }
    std::vector<double> prods;
    prods.reserve(4000);
    for (int seed = 0; seed < 4000; ++seed) {
        const SeparablePriorSample s(bases, static_cast<std::uint64_t>(seed) + 10000);
        prods.push_back(s.value(x) * s.value(xp));
    }
    const auto stats = oracles::mean_var(prods);
    CHECK(std::abs(stats.mean - want) <= 3.0 * stats.mean_stderr());
}

TEST_CASE("RFF prior: determinism, variance, and covariance against the SE kernel") {
    Eigen::VectorXd ls(1);
    ls << 1.0;
    const RffPriorSample a(ls, 2000, 5);
    const RffPriorSample b(ls, 2000, 5);
    Eigen::VectorXd x0(1), x1(1);
    x0 << 0.0;
    x1 << 0.5;
    CHECK(a.value(x0) == b.value(x0));

    std::vector<double> v0, v1;
    v0.reserve(4000);
    v1.reserve(4000);
    for (int seed = 0; seed < 4000; ++seed) {
        const RffPriorSample s(ls, 2000, static_cast<std::uint64_t>(seed));
        v0.push_back(s.value(x0));
        v1.push_back(s.value(x1));
    }
    const auto s0 = oracles::mean_var(v0);
    CHECK(std::abs(s0.var - 1.0) < 0.05);
    double cov = 0.0;
    const double m0 = s0.mean;
    const double m1 = oracles::mean_var(v1).mean;
    for (std::size_t i = 0; i < v0.size(); ++i) cov += (v0[i] - m0) * (v1[i] - m1);
    cov /= static_cast<double>(v0.size() - 1);
    CHECK(std::abs(cov - std::exp(-0.125)) < 0.05);
}

TEST_CASE("RFF gradient matches finite differences") {
    Eigen::VectorXd ls(2);
    ls << 0.7, 1.2;
    const RffPriorSample s(ls, 500, 11);
    Rng rng(3);
    const double h = 1e-6;
    for (int t = 0; t < 10; ++t) {
        Eigen::VectorXd x(2);
        x << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
        const Eigen::VectorXd g = s.gradient(x);
        for (int i = 0; i < 2; ++i) {
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (s.value(xp) - s.value(xm)) / (2.0 * h);
            CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("RFF reconstruction is inaccurate at small feature counts") {
    Eigen::VectorXd ls(1);
    ls << 1.0;
    const RffPriorSample s(ls, 100, 7);
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(21, -1.0, 1.0);
    CHECK(rff_reconstruction_error(s, 1.0, grid) > 0.01);
}
