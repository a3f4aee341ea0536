#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "tsroots/extrema.hpp"
#include "tsroots/gp.hpp"
#include "tsroots/local_opt.hpp"

namespace tsroots {

enum class StartProvenance { Explore, Exploit, Random, Grid, Lhs };

std::string to_string(StartProvenance p);

struct StartPoint {
    Eigen::VectorXd x;
    double posterior_value = 0.0;
    StartProvenance src = StartProvenance::Explore;
    int set_index = -1;        // 1-based rank within its set
    int candidate_index = -1;  // 1-based rank within the prior-minima candidate set
};

struct StartPointSet {
    std::vector<StartPoint> explore;
    std::vector<StartPoint> exploit;
    std::size_t n_candidates = 0;  // size of the ranked prior-minima set actually built

    std::size_t total() const { return explore.size() + exploit.size(); }
};

struct StartSetSizes {
    int n_candidate = 500;
    int n_explore = 250;
    int n_exploit = 200;
    double alpha = 3.0;
};

/// Posterior sample with its prior components replaced by their Chebyshev
/// surrogates. The surrogates are what the candidate machinery needs anyway,
/// and Clenshaw evaluation is several times cheaper than the spectral
/// recurrence for short length scales, so the whole inner loop runs on this.
class CompiledPosterior {
public:
    CompiledPosterior(const PosteriorSample& sample, const cheb::FitOptions& fit_opts = {});

    int dim() const { return static_cast<int>(components_.size()); }
    const std::vector<cheb::PiecewiseCheb>& components() const { return components_; }
    double prior_scale() const { return prior_scale_; }

    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
    double value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;

private:
    std::vector<cheb::PiecewiseCheb> components_;   // unit-variance prior parts
    std::vector<cheb::PiecewiseCheb> derivatives_;  // exact surrogate derivatives
    double prior_scale_;
    SeparableSEKernel kernel_;
    Eigen::MatrixXd X_;
    Eigen::VectorXd v_;
};

/// Exploration set: posterior-value argmin-k over the n_candidate best prior
/// minima; exploitation set: posterior-value argmin-k over the observed
/// locations (pre-filtered by y when n > 200). Both sorted ascending.
StartPointSet build_start_sets(const CompiledPosterior& sample, const Dataset& data,
                               const StartSetSizes& sizes);
StartPointSet build_start_sets(const PosteriorSample& sample, const Dataset& data,
                               const StartSetSizes& sizes,
                               const cheb::FitOptions& fit_opts = {});

struct StartOutcome {
    StartPoint start;
    LocalResult result;
};

struct TsRootsDiagnostics {
    int n_starts = 0;
    double build_seconds = 0.0;
    double optimize_seconds = 0.0;
    // 1-based minimum index, per set, of starts that reached the winner (-1: none)
    int win_explore_index = -1;
    int win_exploit_index = -1;
    int win_candidate_index = -1;  // candidate rank behind win_explore_index
    StartProvenance win_src = StartProvenance::Explore;
    std::vector<StartOutcome> outcomes;
};

struct TsRootsResult {
    Eigen::VectorXd x_opt;
    double f_opt = 0.0;
    TsRootsDiagnostics diag;
};

/// Gradient-based multistart over explicit starts; results deduplicated within
/// 1e-6 and the winner chosen by lowest value, ties by lexicographic location.
struct MultistartResult {
    Eigen::VectorXd x_opt;
    double f_opt = 0.0;
    int win_index = -1;  // 0-based index into starts
    int n_converged = 0;
    std::vector<LocalResult> results;
};

MultistartResult multistart_minimize(const ObjectiveFn& f,
                                     const std::vector<Eigen::VectorXd>& starts, const Box& box,
                                     const LocalOptions& opts = {}, int workers = 0);

/// TS-roots on an existing posterior sample (shared-draw comparisons use this).
TsRootsResult ts_roots(const CompiledPosterior& sample, const Dataset& data,
                       const StartSetSizes& sizes, const LocalOptions& lopts = {},
                       int workers = 0);
TsRootsResult ts_roots(const PosteriorSample& sample, const Dataset& data,
                       const StartSetSizes& sizes, const LocalOptions& lopts = {},
                       int workers = 0, const cheb::FitOptions& fit_opts = {});

/// Draws the posterior sample for (kernel, data, seed) and optimizes it.
TsRootsResult ts_roots(const SeparableSEKernel& kernel, const Dataset& data,
                       const StartSetSizes& sizes, std::uint64_t seed, double eta = 1e-16,
                       const LocalOptions& lopts = {}, int workers = 0);

}  // namespace tsroots
