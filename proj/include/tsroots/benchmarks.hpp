#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tsroots {

/// Analytic test function on a raw-unit box with its known optimum.
struct Benchmark {
    std::string name;
    int dim = 0;
    Eigen::VectorXd lo, hi;
    std::function<double(const Eigen::VectorXd&)> eval;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;  // one-sided at kinks
    double f_star = 0.0;
    std::optional<Eigen::VectorXd> x_star;

    /// Throws std::domain_error when x leaves the box (beyond 1e-9 slack).
    double operator()(const Eigen::VectorXd& x) const;

    Eigen::VectorXd to_normalized(const Eigen::VectorXd& raw) const;
    Eigen::VectorXd from_normalized(const Eigen::VectorXd& z) const;
};

Benchmark make_schwefel(int d);
Benchmark make_rosenbrock(int d);
Benchmark make_levy(int d);
Benchmark make_ackley(int d);
Benchmark make_powell(int d);  // d must be divisible by 4
Benchmark make_hartmann6();
Benchmark make_hartmann6_rescaled();  // (f - 2.58) / 1.94

/// Lookup by "<family><dim>" (e.g. "schwefel2", "ackley16") or a fixed name
/// ("hartmann6", "hartmann6r"). Throws std::invalid_argument on unknown names.
Benchmark benchmark_by_name(const std::string& name);

/// Names of the canonical instances, for the CLI listing.
std::vector<std::string> benchmark_names();

}  // namespace tsroots
