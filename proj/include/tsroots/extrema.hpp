#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

#include "tsroots/cheb.hpp"

namespace tsroots {

/// Candidate coordinates of one component f_i on [lo, hi]: interior critical
/// points plus the interval endpoints, with values, h-values (f'' inside,
/// inward f' at the ends), and the mono/mixed and sign classifications.
struct DimCandidates {
    std::vector<double> xi;
    std::vector<double> f;
    std::vector<double> h;
    std::vector<bool> mono;      // f * h > 0
    std::vector<bool> positive;  // f > 0
    std::size_t degenerate_excluded = 0;

    std::size_t size() const { return xi.size(); }
};

DimCandidates candidate_coordinates(const cheb::PiecewiseCheb& f,
                                    const cheb::PiecewiseCheb& df,
                                    const cheb::PiecewiseCheb& ddf);

/// Tensor-grid sizes, signed sums, and minima counts of a separable
/// function. Products saturate at kCountSat; `saturated`
/// marks instances whose exact counts exceed that bound.
struct ExtremaCounts {
    static constexpr unsigned long long kCountSat = 1000000000000000000ULL;  // 1e18

    std::vector<long long> n_mixed, n_mono;
    std::vector<long long> n_pos_mixed, n_neg_mixed, n_pos_mono, n_neg_mono;
    unsigned long long grid_mixed = 0, grid_mono = 0;  // N^(1), N^(0)
    long long signed_mixed = 0, signed_mono = 0;       // S^(1), S^(0)
    unsigned long long n_neg_minima = 0;               // (N^(1) - S^(1)) / 2
    unsigned long long n_pos_minima = 0;               // (N^(0) + S^(0)) / 2
    unsigned long long n_minima = 0;
    bool saturated = false;
};

ExtremaCounts count_minima(const std::vector<DimCandidates>& dims);

/// Top-k multi-indices by row-wise sum over a sorted-descending 2-d array.
struct MaxkSumResult {
    std::vector<std::vector<int>> indices;  // ordered: sum descending, then lexicographic
    std::vector<double> sums;
    std::size_t insertions = 0;  // heap pushes performed
};

/// Min-heap selection of the k largest sums a_{1,I_1} + ... + a_{d,I_d}.
/// Each row must be sorted descending. k beyond the combination count
/// returns every combination. O(t k log k) time with t = sum of row lengths.
MaxkSumResult maxk_sum(const std::vector<std::vector<double>>& rows, std::size_t k);

/// The best local minima of a separable function, ascending by value.
struct RankedMinima {
    std::vector<Eigen::VectorXd> points;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

struct MinsortOptions {
    double alpha = 3.0;                      // buffer coefficient
    int max_alpha_retries = 3;               // doublings before full enumeration
    unsigned long long enumeration_cap = 1ULL << 22;
};

/// Returns min(n_o, total minima) local minima of prod_i f_i, ascending,
/// following the negative-first branch structure: heap selection over the
/// mixed grid when n_o <= count of negative minima, spilling into the mono
/// grid (smallest positives) or full enumeration otherwise.
RankedMinima minsort(const std::vector<DimCandidates>& dims, std::size_t n_o,
                     const MinsortOptions& opts = {});

/// Convenience: builds derivatives and candidate coordinates first.
RankedMinima minsort(const std::vector<cheb::PiecewiseCheb>& components, std::size_t n_o,
                     const MinsortOptions& opts = {});

}  // namespace tsroots
