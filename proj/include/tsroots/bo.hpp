#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "tsroots/benchmarks.hpp"
#include "tsroots/gp.hpp"
#include "tsroots/rng.hpp"
#include "tsroots/tsroots_opt.hpp"

namespace tsroots {

/// Latin hypercube in [-1,1]^d: exactly one point per axis stratum of width 2/n.
Eigen::MatrixXd lhs_design(int n, int d, Rng& rng);
Eigen::MatrixXd lhs_design(int n, int d, std::uint64_t seed);

struct Standardization {
    double mean = 0.0;
    double sd = 1.0;

    static Standardization fit(const Eigen::VectorXd& y);  // sample sd (n-1); sd 0 -> 1
    Eigen::VectorXd apply(const Eigen::VectorXd& y) const;
    double apply(double y) const { return (y - mean) / sd; }
    double invert(double z) const { return z * sd + mean; }
};

enum class AcqKind {
    TsRoots,
    TsRandomMultistart,
    TsGrid,
    TsLhs,
    TsRff,
    Ats,
    Ei,
    Lcb,
    RandomSearch
};

struct AcquisitionSpec {
    AcqKind kind = AcqKind::TsRoots;
    double beta = 2.0;        // LCB weight
    double n_c = 1.0;         // aTS sample-average control
    int rff_features = 2000;  // TS-RF feature count

    std::string label() const;
    static AcquisitionSpec parse(const std::string& kind_name);
};

struct BoOptions {
    int budget = 50;
    int n_initial = 0;  // 0 -> 10 d
    int refit_cadence = 1;
    StartSetSizes sizes;
    double eta = 1e-16;
    double noise_sd = 1e-6;
    HyperBounds hyper;
    LocalOptions local;
    int workers = 0;
    int hyper_starts_initial = 6;
    int hyper_starts_refit = 2;
};

struct BoState {
    Eigen::MatrixXd X;      // n x d, normalized coordinates
    Eigen::VectorXd y_raw;  // raw objective values
    SeparableSEKernel kernel;
    double noise_sd = 1e-6;
    Standardization standardization;
    int iteration = 0;

    Eigen::Index size() const { return X.rows(); }
    int dim() const { return static_cast<int>(X.cols()); }
    /// Standardized view used by all inner-loop machinery.
    Dataset dataset() const;
    double y_min() const { return y_raw.minCoeff(); }
    Eigen::VectorXd x_min() const;
};

BoState bo_init(const Benchmark& bench, const BoOptions& opts, std::uint64_t seed);
void bo_refit(BoState& state, const BoOptions& opts, std::uint64_t seed);
void bo_observe(BoState& state, const Benchmark& bench, const Eigen::VectorXd& x_norm);

enum class InnerScheme { Rootfinding, RandomMultistart, Grid, Lhs };

struct InnerResult {
    Eigen::VectorXd x;
    double alpha_star = 0.0;
    int n_starts = 0;
    int win_index = -1;          // 1-based rank of the winning start (-1 unknown)
    std::string win_src = "na";
    int win_explore_index = -1;  // winning set ranks (rootfinding only)
    int win_exploit_index = -1;
    int win_candidate_index = -1;
    double build_seconds = 0.0;
};

/// Minimizes one posterior sample with the chosen start scheme. Rootfinding
/// derives its own start count; the others take n_starts (<= 0 mirrors the
/// configured set sizes, matching the equal-budget comparisons).
InnerResult optimize_sample(const CompiledPosterior& sample, const Dataset& data,
                            InnerScheme scheme, const BoOptions& opts, Rng& rng,
                            int n_starts = -1);
InnerResult optimize_sample(const PosteriorSample& sample, const Dataset& data,
                            InnerScheme scheme, const BoOptions& opts, Rng& rng,
                            int n_starts = -1);

struct AcquireResult {
    Eigen::VectorXd x;  // normalized proposal
    double alpha_star = 0.0;
    int n_starts = 0;
    int win_index = -1;
    std::string win_src = "na";
};

/// One inner-loop optimization for the given acquisition at iteration `iter`.
AcquireResult acquire(const BoState& state, const AcquisitionSpec& spec, const BoOptions& opts,
                      std::uint64_t seed, int iter);

struct IterationRecord {
    int iter = 0;
    std::string acq;
    double y_min = 0.0;
    double log_err = 0.0;   // log10(y_min - f*), NaN when f* unknown
    double log_dist = 0.0;  // log10 ||x_min - x*||, NaN when x* unknown
    double alpha_star = 0.0;
    int n_starts = 0;
    int win_idx = -1;
    std::string win_src = "na";
    double t_cum_ms = 0.0;
};

std::vector<IterationRecord> run_bo(const Benchmark& bench, const AcquisitionSpec& spec,
                                    const BoOptions& opts, std::uint64_t seed);

}  // namespace tsroots
