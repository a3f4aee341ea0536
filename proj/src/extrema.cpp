#include "tsroots/extrema.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace tsroots {

namespace {

constexpr double kLogFloor = -690.77552789821371;  // log(1e-300)
constexpr double kValueDegeneracyRel = 1e-12;
constexpr double kCurvatureDegeneracyRel = 1e-10;

double floored_log_abs(double v) {
    const double a = std::abs(v);
    return (a < 1e-300) ? kLogFloor : std::log(a);
}

unsigned long long sat_mul(unsigned long long a, unsigned long long b, bool& saturated) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    if (p > ExtremaCounts::kCountSat) {
        saturated = true;
        return ExtremaCounts::kCountSat;
    }
    return static_cast<unsigned long long>(p);
}

long long sat_mul_signed(long long a, long long b, bool& saturated) {
    const __int128 p = static_cast<__int128>(a) * b;
    const __int128 cap = static_cast<__int128>(ExtremaCounts::kCountSat);
    if (p > cap) { saturated = true; return static_cast<long long>(ExtremaCounts::kCountSat); }
    if (p < -cap) { saturated = true; return -static_cast<long long>(ExtremaCounts::kCountSat); }
    return static_cast<long long>(p);
}

}  // namespace

DimCandidates candidate_coordinates(const cheb::PiecewiseCheb& f,
                                    const cheb::PiecewiseCheb& df,
                                    const cheb::PiecewiseCheb& ddf) {
    const double lo = f.lo(), hi = f.hi();
    std::vector<double> xi = df.roots();
    // interior critical points only; endpoint coincidences are handled by the
    // endpoint h-rule and would be degenerate (f' = 0) anyway
    std::erase_if(xi, [&](double r) { return r <= lo + 1e-10 || r >= hi - 1e-10; });

    std::vector<double> coords, fv, hv;
    coords.push_back(lo);
    fv.push_back(f(lo));
    hv.push_back(df(lo));
    for (double r : xi) {
        coords.push_back(r);
        fv.push_back(f(r));
        hv.push_back(ddf(r));
    }
    coords.push_back(hi);
    fv.push_back(f(hi));
    hv.push_back(-df(hi));

    double fscale = 0.0, hscale = 0.0;
    for (std::size_t j = 0; j < coords.size(); ++j) {
        fscale = std::max(fscale, std::abs(fv[j]));
        hscale = std::max(hscale, std::abs(hv[j]));
    }

    DimCandidates out;
    for (std::size_t j = 0; j < coords.size(); ++j) {
        if (std::abs(fv[j]) <= kValueDegeneracyRel * fscale ||
            std::abs(hv[j]) <= kCurvatureDegeneracyRel * hscale) {
            ++out.degenerate_excluded;
            continue;
        }
        out.xi.push_back(coords[j]);
        out.f.push_back(fv[j]);
        out.h.push_back(hv[j]);
        out.mono.push_back(fv[j] * hv[j] > 0.0);
        out.positive.push_back(fv[j] > 0.0);
    }
    return out;
}

ExtremaCounts count_minima(const std::vector<DimCandidates>& dims) {
    ExtremaCounts c;
    const std::size_t d = dims.size();
    c.n_mixed.resize(d); c.n_mono.resize(d);
    c.n_pos_mixed.resize(d); c.n_neg_mixed.resize(d);
    c.n_pos_mono.resize(d); c.n_neg_mono.resize(d);

    c.grid_mixed = 1; c.grid_mono = 1;
    c.signed_mixed = 1; c.signed_mono = 1;
    for (std::size_t i = 0; i < d; ++i) {
        long long pm = 0, nm = 0, po = 0, no = 0;
        for (std::size_t j = 0; j < dims[i].size(); ++j) {
            if (dims[i].mono[j]) {
                (dims[i].positive[j] ? po : no) += 1;
            } else {
                (dims[i].positive[j] ? pm : nm) += 1;
            }
        }
        c.n_pos_mixed[i] = pm; c.n_neg_mixed[i] = nm;
        c.n_pos_mono[i] = po; c.n_neg_mono[i] = no;
        c.n_mixed[i] = pm + nm;
        c.n_mono[i] = po + no;
        c.grid_mixed = sat_mul(c.grid_mixed, static_cast<unsigned long long>(pm + nm), c.saturated);
        c.grid_mono = sat_mul(c.grid_mono, static_cast<unsigned long long>(po + no), c.saturated);
        c.signed_mixed = sat_mul_signed(c.signed_mixed, pm - nm, c.saturated);
        c.signed_mono = sat_mul_signed(c.signed_mono, po - no, c.saturated);
    }

    const auto count_from = [&](unsigned long long n, long long s, bool plus) -> unsigned long long {
        __int128 v = static_cast<__int128>(n);
        v = plus ? v + s : v - s;
        v /= 2;
        if (v < 0) v = 0;
        const __int128 cap = static_cast<__int128>(ExtremaCounts::kCountSat);
        if (v > cap) { c.saturated = true; return ExtremaCounts::kCountSat; }
        return static_cast<unsigned long long>(v);
    };
    c.n_neg_minima = count_from(c.grid_mixed, c.signed_mixed, /*plus=*/false);
    c.n_pos_minima = count_from(c.grid_mono, c.signed_mono, /*plus=*/true);
    const unsigned __int128 tot =
        static_cast<unsigned __int128>(c.n_neg_minima) + c.n_pos_minima;
    c.n_minima = tot > ExtremaCounts::kCountSat ? ExtremaCounts::kCountSat
                                                : static_cast<unsigned long long>(tot);
    return c;
}

MaxkSumResult maxk_sum(const std::vector<std::vector<double>>& rows, std::size_t k) {
    if (k < 1) throw std::invalid_argument("maxk_sum: k must be >= 1");
    for (const auto& r : rows) {
        if (r.empty()) throw std::invalid_argument("maxk_sum: empty row");
        if (!std::is_sorted(r.begin(), r.end(), std::greater<double>())) {
            throw std::invalid_argument("maxk_sum: rows must be sorted descending");
        }
    }

    MaxkSumResult res;
    if (rows.empty()) return res;

    // combinations are stored as parent chains in an arena, so heap pushes
    // never copy a multi-index; paths are materialized once at the end
    struct Node {
        int parent;
        int idx;
    };
    std::vector<Node> pool;
    pool.reserve(64);
    struct Entry {
        double key;
        int node;
    };

    const auto path_of = [&](int node) {
        std::vector<int> path;
        for (int n = node; n >= 0; n = pool[static_cast<std::size_t>(n)].parent) {
            path.push_back(pool[static_cast<std::size_t>(n)].idx);
        }
        std::reverse(path.begin(), path.end());
        return path;
    };
    // "better" = larger sum, ties (rare for continuous keys) to the
    // lexicographically smaller multi-index
    const auto better = [&](const Entry& a, const Entry& b) {
        if (a.key != b.key) return a.key > b.key;
        return path_of(a.node) < path_of(b.node);
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(better)> heap(better);

    // offset so working keys are nonpositive; added back on output
    double offset = 0.0;
    for (const auto& r : rows) offset += r[0];

    const auto try_push = [&](double key, int parent, int j) {
        const Entry cand{key, -1};
        if (heap.size() >= k) {
            // compare against the worst without allocating the node yet
            const Entry& worst = heap.top();
            if (cand.key < worst.key) return false;
            if (cand.key == worst.key) {
                // candidate path = parent path + j
                std::vector<int> cp = (parent >= 0) ? path_of(parent) : std::vector<int>{};
                cp.push_back(j);
                if (!(cp < path_of(worst.node))) return false;
            }
            heap.pop();
        }
        pool.push_back({parent, j});
        heap.push(Entry{key, static_cast<int>(pool.size()) - 1});
        ++res.insertions;
        return true;
    };

    for (int j = 0; j < static_cast<int>(rows[0].size()); ++j) {
        if (!try_push(rows[0][j] - rows[0][0], -1, j)) break;
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::vector<Entry> prev;
        prev.reserve(heap.size());
        while (!heap.empty()) {
            prev.push_back(heap.top());
            heap.pop();
        }
        const double head = rows[i][0];
        for (const auto& base : prev) {
            for (int j = 0; j < static_cast<int>(rows[i].size()); ++j) {
                // descending row: once a candidate fails, later j only get worse
                if (!try_push(base.key + rows[i][j] - head, base.node, j)) break;
            }
        }
    }

    std::vector<Entry> all;
    all.reserve(heap.size());
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    std::sort(all.begin(), all.end(), better);
    res.indices.reserve(all.size());
    res.sums.reserve(all.size());
    for (const auto& e : all) {
        res.sums.push_back(e.key + offset);
        res.indices.push_back(path_of(e.node));
    }
    return res;
}

namespace {

// One sign class of the per-dimension candidates (mixed or mono).
struct ClassView {
    std::vector<double> coord;
    std::vector<double> value;
    std::vector<bool> negative;
};

std::vector<ClassView> make_class(const std::vector<DimCandidates>& dims, bool mixed) {
    std::vector<ClassView> out(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
        for (std::size_t j = 0; j < dims[i].size(); ++j) {
            if (dims[i].mono[j] == mixed) continue;
            out[i].coord.push_back(dims[i].xi[j]);
            out[i].value.push_back(dims[i].f[j]);
            out[i].negative.push_back(!dims[i].positive[j]);
        }
    }
    return out;
}

struct GridPoint {
    double value;
    std::vector<int> idx;
};

Eigen::VectorXd materialize(const std::vector<ClassView>& cls, const std::vector<int>& idx) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        x[static_cast<Eigen::Index>(i)] = cls[i].coord[static_cast<std::size_t>(idx[i])];
    }
    return x;
}

// Enumerates the full tensor grid, keeping points of the requested sign.
std::vector<GridPoint> enumerate_sign_class(const std::vector<ClassView>& cls, bool want_negative,
                                            unsigned long long cap) {
    unsigned long long total = 1;
    bool sat = false;
    for (const auto& c : cls) total = sat_mul(total, c.coord.size(), sat);
    if (sat || total > cap) {
        throw std::runtime_error("minsort: tensor grid too large to enumerate");
    }
    std::vector<GridPoint> out;
    if (total == 0) return out;
    const std::size_t d = cls.size();
    std::vector<int> idx(d, 0);
    while (true) {
        double v = 1.0;
        bool neg = false;
        for (std::size_t i = 0; i < d; ++i) {
            v *= cls[i].value[static_cast<std::size_t>(idx[i])];
            neg ^= cls[i].negative[static_cast<std::size_t>(idx[i])];
        }
        if (neg == want_negative) out.push_back({v, idx});
        std::size_t pos = d;
        while (pos > 0) {
            --pos;
            if (++idx[pos] < static_cast<int>(cls[pos].coord.size())) break;
            idx[pos] = 0;
            if (pos == 0) return out;
        }
    }
}

void sort_grid_points(std::vector<GridPoint>& pts) {
    std::sort(pts.begin(), pts.end(), [](const GridPoint& a, const GridPoint& b) {
        if (a.value != b.value) return a.value < b.value;
        return a.idx < b.idx;
    });
}

// Heap selection of `want` points of the given sign with the smallest values.
// smallest_magnitude selects by ascending |f| (positive minima), otherwise by
// descending |f| (most negative first). Returns found points sorted ascending
// by value; may return fewer than `want` if the alpha buffer was too small.
std::vector<GridPoint> heap_select(const std::vector<ClassView>& cls, bool want_negative,
                                   bool smallest_magnitude, std::size_t want, std::size_t buffer) {
    const std::size_t d = cls.size();
    std::vector<std::vector<double>> rows(d);
    std::vector<std::vector<int>> perm(d);
    for (std::size_t i = 0; i < d; ++i) {
        const std::size_t t = cls[i].value.size();
        perm[i].resize(t);
        std::iota(perm[i].begin(), perm[i].end(), 0);
        std::sort(perm[i].begin(), perm[i].end(), [&](int a, int b) {
            const double la = floored_log_abs(cls[i].value[static_cast<std::size_t>(a)]);
            const double lb = floored_log_abs(cls[i].value[static_cast<std::size_t>(b)]);
            if (la != lb) return smallest_magnitude ? la < lb : la > lb;
            return a < b;
        });
        rows[i].resize(t);
        for (std::size_t j = 0; j < t; ++j) {
            const double l = floored_log_abs(cls[i].value[static_cast<std::size_t>(perm[i][j])]);
            rows[i][j] = smallest_magnitude ? -l : l;
        }
    }
    const MaxkSumResult sel = maxk_sum(rows, buffer);
    std::vector<GridPoint> found;
    for (const auto& sorted_idx : sel.indices) {
        std::vector<int> idx(d);
        double v = 1.0;
        bool neg = false;
        for (std::size_t i = 0; i < d; ++i) {
            idx[i] = perm[i][static_cast<std::size_t>(sorted_idx[i])];
            v *= cls[i].value[static_cast<std::size_t>(idx[i])];
            neg ^= cls[i].negative[static_cast<std::size_t>(idx[i])];
        }
        if (neg == want_negative) found.push_back({v, std::move(idx)});
    }
    sort_grid_points(found);
    if (found.size() > want) found.resize(want);
    return found;
}

// All negative local minima (the mixed-grid negatives); count known exactly.
std::vector<GridPoint> all_negative_minima(const std::vector<ClassView>& mixed,
                                           unsigned long long n_neg, const MinsortOptions& opts) {
    std::vector<GridPoint> neg;
    if (n_neg == 0) return neg;
    unsigned long long total = 1;
    bool sat = false;
    for (const auto& c : mixed) total = sat_mul(total, c.coord.size(), sat);
    if (!sat && total <= opts.enumeration_cap) {
        neg = enumerate_sign_class(mixed, /*want_negative=*/true, opts.enumeration_cap);
        sort_grid_points(neg);
        return neg;
    }
    // grid too large: harvest by doubling the magnitude buffer until the
    // exact count from the signed-sum formulas is reached
    std::size_t buffer = static_cast<std::size_t>(std::min<unsigned long long>(4 * n_neg, opts.enumeration_cap));
    while (true) {
        neg = heap_select(mixed, /*want_negative=*/true, /*smallest_magnitude=*/false,
                          static_cast<std::size_t>(n_neg), buffer);
        if (neg.size() >= n_neg) return neg;
        if (buffer >= opts.enumeration_cap) {
            throw std::runtime_error("minsort: could not collect all negative minima");
        }
        buffer = static_cast<std::size_t>(std::min<unsigned long long>(
            static_cast<unsigned long long>(buffer) * 2, opts.enumeration_cap));
    }
}

}  // namespace

namespace {

void append_materialized(const std::vector<ClassView>& cls, const std::vector<GridPoint>& pts,
                         RankedMinima& out) {
    for (const auto& p : pts) {
        out.points.push_back(materialize(cls, p.idx));
        out.values.push_back(p.value);
    }
}

}  // namespace

RankedMinima minsort(const std::vector<DimCandidates>& dims, std::size_t n_o,
                     const MinsortOptions& opts) {
    if (n_o < 1) throw std::invalid_argument("minsort: n_o must be >= 1");
    if (!(opts.alpha >= 1.0)) throw std::invalid_argument("minsort: alpha must be >= 1");

    const ExtremaCounts counts = count_minima(dims);
    const std::vector<ClassView> mixed = make_class(dims, /*mixed=*/true);
    const std::vector<ClassView> mono = make_class(dims, /*mixed=*/false);

    RankedMinima out;

    if (n_o <= counts.n_neg_minima) {
        // enough negative minima: heap-select the most negative
        std::vector<GridPoint> neg;
        bool done = false;
        double alpha = opts.alpha;
        for (int attempt = 0; attempt <= opts.max_alpha_retries && !done; ++attempt) {
            const std::size_t buffer = static_cast<std::size_t>(
                std::ceil(alpha * static_cast<double>(n_o)));
            neg = heap_select(mixed, /*want_negative=*/true, /*smallest_magnitude=*/false,
                              n_o, buffer);
            done = neg.size() >= n_o;
            alpha *= 2.0;
        }
        if (!done) {
            neg = all_negative_minima(mixed, counts.n_neg_minima, opts);
            if (neg.size() > n_o) neg.resize(n_o);
        }
        append_materialized(mixed, neg, out);
    } else {
        const std::vector<GridPoint> neg = all_negative_minima(mixed, counts.n_neg_minima, opts);
        append_materialized(mixed, neg, out);
        const std::size_t need = n_o - neg.size();
        std::vector<GridPoint> pos;
        if (counts.n_pos_minima > 0 && need > 0) {
            if (n_o <= counts.n_minima) {
                bool done = false;
                double alpha = opts.alpha;
                for (int attempt = 0; attempt <= opts.max_alpha_retries && !done; ++attempt) {
                    const std::size_t buffer = static_cast<std::size_t>(
                        std::ceil(alpha * static_cast<double>(need)));
                    pos = heap_select(mono, /*want_negative=*/false, /*smallest_magnitude=*/true,
                                      need, buffer);
                    done = pos.size() >= need;
                    alpha *= 2.0;
                }
                if (!done) {
                    pos = enumerate_sign_class(mono, /*want_negative=*/false, opts.enumeration_cap);
                    sort_grid_points(pos);
                    if (pos.size() > need) pos.resize(need);
                }
            } else {
                pos = enumerate_sign_class(mono, /*want_negative=*/false, opts.enumeration_cap);
                sort_grid_points(pos);
            }
        }
        append_materialized(mono, pos, out);
    }

    // negatives precede positives and each part is sorted ascending already
    return out;
}

RankedMinima minsort(const std::vector<cheb::PiecewiseCheb>& components, std::size_t n_o,
                     const MinsortOptions& opts) {
    std::vector<DimCandidates> dims;
    dims.reserve(components.size());
    for (const auto& f : components) {
        const cheb::PiecewiseCheb df = f.derivative();
        const cheb::PiecewiseCheb ddf = df.derivative();
        dims.push_back(candidate_coordinates(f, df, ddf));
    }
    return minsort(dims, n_o, opts);
}

}  // namespace tsroots
