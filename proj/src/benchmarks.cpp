#include "tsroots/benchmarks.hpp"

#include <cmath>
#include <stdexcept>

namespace tsroots {

double Benchmark::operator()(const Eigen::VectorXd& x) const {
    if (x.size() != dim) throw std::domain_error(name + ": wrong input dimension");
    for (int i = 0; i < dim; ++i) {
        if (x[i] < lo[i] - 1e-9 || x[i] > hi[i] + 1e-9) {
            throw std::domain_error(name + ": input outside the domain box");
        }
    }
    return eval(x);
}

Eigen::VectorXd Benchmark::to_normalized(const Eigen::VectorXd& raw) const {
    return (2.0 * (raw - lo).array() / (hi - lo).array() - 1.0).matrix();
}

Eigen::VectorXd Benchmark::from_normalized(const Eigen::VectorXd& z) const {
    return (lo.array() + (z.array() + 1.0) * 0.5 * (hi - lo).array()).matrix();
}

Benchmark make_schwefel(int d) {
    Benchmark b;
    b.name = "schwefel" + std::to_string(d);
    b.dim = d;
    b.lo = Eigen::VectorXd::Constant(d, -500.0);
    b.hi = Eigen::VectorXd::Constant(d, 500.0);
    b.eval = [d](const Eigen::VectorXd& x) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += x[i] * std::sin(std::sqrt(std::abs(x[i])));
        return 418.9829 * d - s;
    };
    b.grad = [d](const Eigen::VectorXd& x) {
        Eigen::VectorXd g(d);
        for (int i = 0; i < d; ++i) {
            const double r = std::sqrt(std::abs(x[i]));
            g[i] = (r == 0.0) ? 0.0 : -(std::sin(r) + 0.5 * r * std::cos(r));
        }
        return g;
    };
    b.f_star = 0.0;
    b.x_star = Eigen::VectorXd::Constant(d, 420.9687);
    return b;
}

Benchmark make_rosenbrock(int d) {
    Benchmark b;
    b.name = "rosenbrock" + std::to_string(d);
    b.dim = d;
    b.lo = Eigen::VectorXd::Constant(d, -5.0);
    b.hi = Eigen::VectorXd::Constant(d, 10.0);
    b.eval = [d](const Eigen::VectorXd& x) {
        double s = 0.0;
        for (int i = 0; i + 1 < d; ++i) {
            const double a = x[i + 1] - x[i] * x[i];
            const double c = x[i] - 1.0;
            s += 100.0 * a * a + c * c;
        }
        return s;
    };
    b.grad = [d](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
        for (int i = 0; i + 1 < d; ++i) {
            const double a = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * a + 2.0 * (x[i] - 1.0);
            g[i + 1] += 200.0 * a;
        }
        return g;
    };
    b.f_star = 0.0;
    b.x_star = Eigen::VectorXd::Constant(d, 1.0);
    return b;
}

Benchmark make_levy(int d) {
    Benchmark b;
    b.name = "levy" + std::to_string(d);
    b.dim = d;
    b.lo = Eigen::VectorXd::Constant(d, -10.0);
    b.hi = Eigen::VectorXd::Constant(d, 10.0);
    const auto w = [](double xi) { return 1.0 + (xi - 1.0) / 4.0; };
    b.eval = [d, w](const Eigen::VectorXd& x) {
        const double s1 = std::sin(M_PI * w(x[0]));
        double s = s1 * s1;
        for (int i = 0; i + 1 < d; ++i) {
            const double wi = w(x[i]);
            const double sp = std::sin(M_PI * wi + 1.0);
            s += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * sp * sp);
        }
        const double wd = w(x[d - 1]);
        const double s2 = std::sin(2.0 * M_PI * wd);
        s += (wd - 1.0) * (wd - 1.0) * (1.0 + s2 * s2);
        return s;
    };
    b.grad = [d, w](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
        constexpr double dw = 0.25;  // dw/dx
        {
            const double w1 = w(x[0]);
            g[0] += 2.0 * std::sin(M_PI * w1) * std::cos(M_PI * w1) * M_PI * dw;
        }
        for (int i = 0; i + 1 < d; ++i) {
            const double wi = w(x[i]);
            const double sp = std::sin(M_PI * wi + 1.0);
            const double cp = std::cos(M_PI * wi + 1.0);
            g[i] += dw * (2.0 * (wi - 1.0) * (1.0 + 10.0 * sp * sp) +
                          (wi - 1.0) * (wi - 1.0) * 20.0 * sp * cp * M_PI);
        }
        {
            const double wd = w(x[d - 1]);
            const double s2 = std::sin(2.0 * M_PI * wd);
            const double c2 = std::cos(2.0 * M_PI * wd);
            g[d - 1] += dw * (2.0 * (wd - 1.0) * (1.0 + s2 * s2) +
                              (wd - 1.0) * (wd - 1.0) * 4.0 * M_PI * s2 * c2);
        }
        return g;
    };
    b.f_star = 0.0;
    b.x_star = Eigen::VectorXd::Constant(d, 1.0);
    return b;
}

Benchmark make_ackley(int d) {
    Benchmark b;
    b.name = "ackley" + std::to_string(d);
    b.dim = d;
    b.lo = Eigen::VectorXd::Constant(d, -10.0);
    b.hi = Eigen::VectorXd::Constant(d, 10.0);
    constexpr double a = 20.0, bb = 0.2, c = 2.0 * M_PI;
    b.eval = [d](const Eigen::VectorXd& x) {
        const double m2 = x.squaredNorm() / d;
        double mc = 0.0;
        for (int i = 0; i < d; ++i) mc += std::cos(c * x[i]);
        mc /= d;
        return -a * std::exp(-bb * std::sqrt(m2)) - std::exp(mc) + a + std::exp(1.0);
    };
    b.grad = [d](const Eigen::VectorXd& x) {
        const double m2 = x.squaredNorm() / d;
        const double r = std::sqrt(m2);
        double mc = 0.0;
        for (int i = 0; i < d; ++i) mc += std::cos(c * x[i]);
        mc /= d;
        Eigen::VectorXd g(d);
        for (int i = 0; i < d; ++i) {
            // one-sided subgradient choice 0 at the non-smooth origin
            const double t1 = (r == 0.0) ? 0.0 : a * bb * std::exp(-bb * r) * x[i] / (d * r);
            const double t2 = std::exp(mc) * std::sin(c * x[i]) * c / d;
            g[i] = t1 + t2;
        }
        return g;
    };
    b.f_star = 0.0;
    b.x_star = Eigen::VectorXd::Zero(d);
    return b;
}

Benchmark make_powell(int d) {
    if (d % 4 != 0) throw std::invalid_argument("powell: dimension must be divisible by 4");
    Benchmark b;
    b.name = "powell" + std::to_string(d);
    b.dim = d;
    b.lo = Eigen::VectorXd::Constant(d, -4.0);
    b.hi = Eigen::VectorXd::Constant(d, 5.0);
    b.eval = [d](const Eigen::VectorXd& x) {
        double s = 0.0;
        for (int i = 0; i < d / 4; ++i) {
            const double x1 = x[4 * i], x2 = x[4 * i + 1], x3 = x[4 * i + 2], x4 = x[4 * i + 3];
            const double t1 = x1 + 10.0 * x2;
            const double t2 = x3 - x4;
            const double t3 = x2 - 2.0 * x3;
            const double t4 = x1 - x4;
            s += t1 * t1 + 5.0 * t2 * t2 + t3 * t3 * t3 * t3 + 10.0 * t4 * t4 * t4 * t4;
        }
        return s;
    };
    b.grad = [d](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d / 4; ++i) {
            const double x1 = x[4 * i], x2 = x[4 * i + 1], x3 = x[4 * i + 2], x4 = x[4 * i + 3];
            const double t1 = x1 + 10.0 * x2;
            const double t2 = x3 - x4;
            const double t3 = x2 - 2.0 * x3;
            const double t4 = x1 - x4;
            g[4 * i] += 2.0 * t1 + 40.0 * t4 * t4 * t4;
            g[4 * i + 1] += 20.0 * t1 + 4.0 * t3 * t3 * t3;
            g[4 * i + 2] += 10.0 * t2 - 8.0 * t3 * t3 * t3;
            g[4 * i + 3] += -10.0 * t2 - 40.0 * t4 * t4 * t4;
        }
        return g;
    };
    b.f_star = 0.0;
    b.x_star = Eigen::VectorXd::Zero(d);
    return b;
}

namespace {

Benchmark hartmann6_core() {
    Benchmark b;
    b.name = "hartmann6";
    b.dim = 6;
    b.lo = Eigen::VectorXd::Zero(6);
    b.hi = Eigen::VectorXd::Ones(6);
    static const Eigen::Vector4d alpha(1.0, 1.2, 3.0, 3.2);
    static const Eigen::Matrix<double, 4, 6> A = (Eigen::Matrix<double, 4, 6>() <<
        10, 3, 17, 3.5, 1.7, 8,
        0.05, 10, 17, 0.1, 8, 14,
        3, 3.5, 1.7, 10, 17, 8,
        17, 8, 0.05, 10, 0.1, 14).finished();
    static const Eigen::Matrix<double, 4, 6> P = 1e-4 * (Eigen::Matrix<double, 4, 6>() <<
        1312, 1696, 5569, 124, 8283, 5886,
        2329, 4135, 8307, 3736, 1004, 9991,
        2348, 1451, 3522, 2883, 3047, 6650,
        4047, 8828, 8732, 5743, 1091, 381).finished();
    b.eval = [](const Eigen::VectorXd& x) {
        double s = 0.0;
        for (int i = 0; i < 4; ++i) {
            double e = 0.0;
            for (int j = 0; j < 6; ++j) {
                const double dj = x[j] - P(i, j);
                e += A(i, j) * dj * dj;
            }
            s -= alpha[i] * std::exp(-e);
        }
        return s;
    };
    b.grad = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(6);
        for (int i = 0; i < 4; ++i) {
            double e = 0.0;
            for (int j = 0; j < 6; ++j) {
                const double dj = x[j] - P(i, j);
                e += A(i, j) * dj * dj;
            }
            const double w = alpha[i] * std::exp(-e);
            for (int j = 0; j < 6; ++j) {
                g[j] += w * 2.0 * A(i, j) * (x[j] - P(i, j));
            }
        }
        return g;
    };
    b.f_star = -3.32237;
    Eigen::VectorXd xs(6);
    xs << 0.20169, 0.150011, 0.476874, 0.275332, 0.311625, 0.6573;
    b.x_star = xs;
    return b;
}

}  // namespace

Benchmark make_hartmann6() { return hartmann6_core(); }

Benchmark make_hartmann6_rescaled() {
    Benchmark base = hartmann6_core();
    Benchmark b = base;
    b.name = "hartmann6r";
    b.eval = [e = base.eval](const Eigen::VectorXd& x) { return (e(x) - 2.58) / 1.94; };
    b.grad = [g = base.grad](const Eigen::VectorXd& x) {
        return (g(x) / 1.94).eval();
    };
    b.f_star = (base.f_star - 2.58) / 1.94;
    return b;
}

Benchmark benchmark_by_name(const std::string& name) {
    if (name == "hartmann6") return make_hartmann6();
    if (name == "hartmann6r") return make_hartmann6_rescaled();
    const auto split = name.find_first_of("0123456789");
    if (split == std::string::npos) {
        throw std::invalid_argument("unknown benchmark: " + name);
    }
    const std::string family = name.substr(0, split);
    const int d = std::stoi(name.substr(split));
    if (d < 1) throw std::invalid_argument("benchmark dimension must be >= 1: " + name);
    if (family == "schwefel") return make_schwefel(d);
    if (family == "rosenbrock") return make_rosenbrock(d);
    if (family == "levy") return make_levy(d);
    if (family == "ackley") return make_ackley(d);
    if (family == "powell") return make_powell(d);
    if (family == "sphere") {
        Benchmark b;
        b.name = name;
        b.dim = d;
        b.lo = Eigen::VectorXd::Constant(d, -1.0);
        b.hi = Eigen::VectorXd::Constant(d, 1.0);
        b.eval = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
        b.grad = [](const Eigen::VectorXd& x) { return (2.0 * x).eval(); };
        b.f_star = 0.0;
        b.x_star = Eigen::VectorXd::Zero(d);
        return b;
    }
    throw std::invalid_argument("unknown benchmark: " + name);
}

std::vector<std::string> benchmark_names() {
    return {"schwefel2",  "rosenbrock4", "levy10",     "ackley6",  "ackley16",
            "powell16",   "hartmann6",   "hartmann6r", "sphere2"};
}

}  // namespace tsroots
