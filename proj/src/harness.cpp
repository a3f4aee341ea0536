#include "tsroots/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace tsroots {

const char* const kRecordHeader =
    "run_id,seed,iter,acq,y_min,log_err,log_dist,alpha_star,n_starts,win_idx,win_src,t_cum_ms";

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

using nlohmann::json;

AcquisitionSpec parse_acquisition(const json& j) {
    if (j.is_string()) return AcquisitionSpec::parse(j.get<std::string>());
    AcquisitionSpec spec = AcquisitionSpec::parse(j.at("kind").get<std::string>());
    if (j.contains("beta")) spec.beta = j.at("beta").get<double>();
    if (j.contains("nc")) spec.n_c = j.at("nc").get<double>();
    if (j.contains("rff_features")) spec.rff_features = j.at("rff_features").get<int>();
    return spec;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig c;
    c.schema_version = j.at("schema_version").get<int>();
    if (c.schema_version != 1) {
        throw std::invalid_argument("config: unsupported schema_version");
    }
    c.mode = j.at("mode").get<std::string>();
    if (j.contains("benchmark")) c.benchmark = j.at("benchmark").get<std::string>();
    if (j.contains("acquisitions")) {
        for (const auto& a : j.at("acquisitions")) c.acquisitions.push_back(parse_acquisition(a));
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("budget")) c.budget = j.at("budget").get<int>();
    if (j.contains("n_initial")) c.n_initial = j.at("n_initial").get<int>();
    if (j.contains("set_sizes")) {
        const auto& s = j.at("set_sizes");
        if (s.contains("n_candidate")) c.sizes.n_candidate = s.at("n_candidate").get<int>();
        if (s.contains("n_explore")) c.sizes.n_explore = s.at("n_explore").get<int>();
        if (s.contains("n_exploit")) c.sizes.n_exploit = s.at("n_exploit").get<int>();
        if (s.contains("alpha")) c.sizes.alpha = s.at("alpha").get<double>();
    }
    if (j.contains("eta")) c.eta = j.at("eta").get<double>();
    if (j.contains("noise_sd")) c.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("refit_cadence")) c.refit_cadence = j.at("refit_cadence").get<int>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("timing")) c.timing = j.at("timing").get<bool>();
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
    if (j.contains("reference_starts")) c.reference_starts = j.at("reference_starts").get<int>();
    if (j.contains("nc_values")) c.nc_values = j.at("nc_values").get<std::vector<double>>();
    if (j.contains("spectrum")) {
        const auto& s = j.at("spectrum");
        if (s.contains("l")) c.spectrum_l = s.at("l").get<double>();
        if (s.contains("sigma")) c.spectrum_sigma = s.at("sigma").get<double>();
        if (s.contains("eta")) c.spectrum_eta = s.at("eta").get<double>();
        if (s.contains("terms")) c.spectrum_terms = s.at("terms").get<std::vector<int>>();
        if (s.contains("grid_points")) c.spectrum_grid = s.at("grid_points").get<int>();
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

void ExperimentConfig::validate() const {
    static const std::set<std::string> kModes = {"outer", "inner_compare", "set_size_study",
                                                 "ats_sweep", "spectrum_check"};
    if (!kModes.count(mode)) throw std::invalid_argument("config: unknown mode " + mode);
    if (mode == "spectrum_check") {
        if (spectrum_terms.empty()) throw std::invalid_argument("config: spectrum terms empty");
        return;
    }
    if (benchmark.empty()) throw std::invalid_argument("config: benchmark required");
    benchmark_by_name(benchmark);  // resolvable or throws
    if (seeds.empty()) throw std::invalid_argument("config: seeds required");
    std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
    if (uniq.size() != seeds.size()) throw std::invalid_argument("config: seeds must be distinct");
    if (budget < 1) throw std::invalid_argument("config: budget must be >= 1");
    if (mode == "outer" && acquisitions.empty()) {
        throw std::invalid_argument("config: outer mode needs at least one acquisition");
    }
    if (mode == "inner_compare") {
        if (acquisitions.size() < 2) {
            throw std::invalid_argument("config: inner_compare needs at least two optimizers");
        }
        for (const auto& a : acquisitions) {
            const AcqKind k = a.kind;
            if (k != AcqKind::TsRoots && k != AcqKind::TsRandomMultistart &&
                k != AcqKind::TsGrid && k != AcqKind::TsLhs) {
                throw std::invalid_argument(
                    "config: inner_compare optimizers must be ts_* sample optimizers");
            }
        }
    }
    if (mode == "ats_sweep" && nc_values.empty()) {
        throw std::invalid_argument("config: ats_sweep needs nc_values");
    }
}

BoOptions ExperimentConfig::bo_options() const {
    BoOptions opts;
    opts.budget = budget;
    opts.n_initial = n_initial;
    opts.refit_cadence = refit_cadence;
    opts.sizes = sizes;
    opts.eta = eta;
    opts.noise_sd = noise_sd;
    opts.workers = 1;  // parallelism lives at the seed level
    return opts;
}

namespace {

struct Csv {
    std::ostringstream out;

    void row(const HarnessRecord& r, bool timing) {
        out << r.run_id << ',' << r.seed << ',' << r.rec.iter << ',' << r.rec.acq << ','
            << format_double(r.rec.y_min) << ',' << format_double(r.rec.log_err) << ','
            << format_double(r.rec.log_dist) << ',' << format_double(r.rec.alpha_star) << ','
            << r.rec.n_starts << ',' << r.rec.win_idx << ',' << r.rec.win_src << ','
            << format_double(timing ? r.rec.t_cum_ms : 0.0) << '\n';
    }
};

double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    const double frac = pos - static_cast<double>(i);
    return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

void write_file(const std::filesystem::path& path, const std::string& content,
                std::vector<std::string>& written) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    written.push_back(path.string());
}

// per-iteration median and quartiles of one metric across runs of one acquisition
void write_summaries(const std::vector<HarnessRecord>& records,
                     const std::filesystem::path& dir, std::vector<std::string>& written) {
    struct MetricDef {
        const char* name;
        double IterationRecord::* field;
    };
    static const MetricDef kMetrics[] = {
        {"y_min", &IterationRecord::y_min},
        {"log_err", &IterationRecord::log_err},
        {"log_dist", &IterationRecord::log_dist},
        {"alpha_star", &IterationRecord::alpha_star},
    };
    std::set<std::string> acqs;
    for (const auto& r : records) acqs.insert(r.rec.acq);
    for (const auto& acq : acqs) {
        for (const auto& metric : kMetrics) {
            std::map<int, std::vector<double>> by_iter;
            for (const auto& r : records) {
                if (r.rec.acq != acq) continue;
                const double v = r.rec.*(metric.field);
                if (std::isfinite(v)) by_iter[r.rec.iter].push_back(v);
            }
            if (by_iter.empty()) continue;
            std::ostringstream out;
            out << "iter,median,q25,q75\n";
            for (auto& [iter, vals] : by_iter) {
                std::sort(vals.begin(), vals.end());
                out << iter << ',' << format_double(quantile_sorted(vals, 0.5)) << ','
                    << format_double(quantile_sorted(vals, 0.25)) << ','
                    << format_double(quantile_sorted(vals, 0.75)) << '\n';
            }
            write_file(dir / ("summary_" + std::string(metric.name) + "_" + acq + ".csv"),
                       out.str(), written);
        }
    }
}

struct Job {
    std::string run_id;
    std::uint64_t seed = 0;
    std::function<std::vector<HarnessRecord>()> work;
};

void run_jobs(std::vector<Job>& jobs, int workers, HarnessResult& result) {
    std::vector<std::vector<HarnessRecord>> buffers(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                buffers[i] = jobs[i].work();
            } catch (const std::exception& e) {
                errors[i] = jobs[i].run_id + ": " + e.what();
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!errors[i].empty()) {
            result.failures.push_back(errors[i]);
        } else {
            for (auto& r : buffers[i]) result.records.push_back(std::move(r));
        }
    }
}

std::vector<HarnessRecord> run_inner_compare_seed(const ExperimentConfig& config,
                                                  const Benchmark& bench, std::uint64_t seed) {
    const BoOptions opts = config.bo_options();
    BoState state = bo_init(bench, opts, seed);
    std::vector<HarnessRecord> out;
    std::map<std::string, double> cum_seconds;

    for (int k = 1; k <= config.budget; ++k) {
        if ((k - 1) % std::max(1, config.refit_cadence) == 0) bo_refit(state, opts, seed);
        const Dataset data = state.dataset();
        const std::uint64_t draw_seed = splitmix64(
            splitmix64(seed) ^ (static_cast<std::uint64_t>(k) * 0x9e3779b9ULL + 1));
        const CompiledPosterior sample(
            draw_posterior_sample(state.kernel, data, draw_seed, config.eta));

        // equal budget across optimizers: the rootfinding realized count
        const StartPointSet set = build_start_sets(sample, data, config.sizes);
        const int n_starts = static_cast<int>(set.total());

        // reference optimum for low-dimensional problems; single-threaded
        // here because seeds already fan out across the worker pool
        double alpha_ref = std::numeric_limits<double>::quiet_NaN();
        Eigen::VectorXd x_ref;
        if (bench.dim <= 2 && config.reference_starts > 0) {
            Rng ref_rng = Rng::forked(draw_seed, 0x726566ULL);
            std::vector<Eigen::VectorXd> starts;
            starts.reserve(static_cast<std::size_t>(config.reference_starts));
            for (int i = 0; i < config.reference_starts; ++i) {
                Eigen::VectorXd x(bench.dim);
                for (int j = 0; j < bench.dim; ++j) x[j] = ref_rng.uniform(-1.0, 1.0);
                starts.push_back(std::move(x));
            }
            const ObjectiveFn obj = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
                return grad ? sample.value_and_gradient(x, *grad) : sample.value(x);
            };
            const MultistartResult ms = multistart_minimize(
                obj, starts, Box::unit_cube(bench.dim), opts.local, /*workers=*/1);
            if (ms.win_index >= 0) {
                alpha_ref = ms.f_opt;
                x_ref = ms.x_opt;
            }
        }

        Eigen::VectorXd advance_x;
        for (std::size_t oi = 0; oi < config.acquisitions.size(); ++oi) {
            const AcquisitionSpec& acq = config.acquisitions[oi];
            InnerScheme scheme = InnerScheme::Rootfinding;
            if (acq.kind == AcqKind::TsRandomMultistart) scheme = InnerScheme::RandomMultistart;
            if (acq.kind == AcqKind::TsGrid) scheme = InnerScheme::Grid;
            if (acq.kind == AcqKind::TsLhs) scheme = InnerScheme::Lhs;
            // fork per optimizer kind so duplicated kinds yield identical columns
            std::uint64_t label_hash = 1469598103934665603ULL;
            for (const char ch : acq.label()) {
                label_hash = (label_hash ^ static_cast<std::uint64_t>(ch)) * 1099511628211ULL;
            }
            Rng rng = Rng::forked(draw_seed, label_hash);

            const auto t0 = std::chrono::steady_clock::now();
            const InnerResult r = optimize_sample(sample, data, scheme, opts, rng,
                                                  scheme == InnerScheme::Rootfinding ? -1
                                                                                     : n_starts);
            cum_seconds[acq.label()] +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (r.n_starts != n_starts) {
                throw std::logic_error("inner_compare: unequal start budgets");
            }

            HarnessRecord hr;
            hr.run_id = config.mode + "-" + config.benchmark + "-" + acq.label() + "-s" +
                        std::to_string(seed);
            hr.seed = seed;
            hr.rec.iter = k;
            hr.rec.acq = acq.label();
            hr.rec.y_min = state.y_min();
            hr.rec.alpha_star = r.alpha_star;
            hr.rec.log_err = std::isfinite(alpha_ref)
                                 ? std::log10(std::max(r.alpha_star - alpha_ref, 1e-300))
                                 : std::numeric_limits<double>::quiet_NaN();
            hr.rec.log_dist = (x_ref.size() > 0)
                                  ? std::log10(std::max((r.x - x_ref).norm(), 1e-300))
                                  : std::numeric_limits<double>::quiet_NaN();
            hr.rec.n_starts = r.n_starts;
            hr.rec.win_idx = r.win_index;
            hr.rec.win_src = r.win_src;
            hr.rec.t_cum_ms = cum_seconds[acq.label()] * 1000.0;
            out.push_back(std::move(hr));

            if (oi == 0) advance_x = r.x;
        }
        bo_observe(state, bench, advance_x);
    }
    return out;
}

std::vector<HarnessRecord> run_set_size_seed(const ExperimentConfig& config,
                                             const Benchmark& bench, std::uint64_t seed) {
    const BoOptions opts = config.bo_options();
    BoState state = bo_init(bench, opts, seed);
    std::vector<HarnessRecord> out;
    double cum_seconds = 0.0;

    for (int k = 1; k <= config.budget; ++k) {
        if ((k - 1) % std::max(1, config.refit_cadence) == 0) bo_refit(state, opts, seed);
        const Dataset data = state.dataset();
        const std::uint64_t draw_seed = splitmix64(
            splitmix64(seed) ^ (static_cast<std::uint64_t>(k) * 0x9e3779b9ULL + 1));
        const PosteriorSample sample =
            draw_posterior_sample(state.kernel, data, draw_seed, config.eta);

        const auto t0 = std::chrono::steady_clock::now();
        const TsRootsResult r = ts_roots(sample, data, config.sizes, opts.local, 1);
        cum_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bo_observe(state, bench, r.x_opt);

        HarnessRecord hr;
        hr.run_id =
            config.mode + "-" + config.benchmark + "-ts_roots-s" + std::to_string(seed);
        hr.seed = seed;
        hr.rec.iter = k;
        hr.rec.acq = "ts_roots";
        hr.rec.y_min = state.y_min();
        hr.rec.log_err = std::log10(std::max(hr.rec.y_min - bench.f_star, 1e-300));
        hr.rec.log_dist = std::numeric_limits<double>::quiet_NaN();
        if (bench.x_star) {
            const Eigen::VectorXd xm = bench.from_normalized(state.x_min());
            hr.rec.log_dist = std::log10(std::max((xm - *bench.x_star).norm(), 1e-300));
        }
        hr.rec.alpha_star = r.f_opt;
        hr.rec.n_starts = r.diag.n_starts;
        const int ie = r.diag.win_explore_index, ix = r.diag.win_exploit_index;
        hr.rec.win_idx = (ie > 0 && (ix < 0 || ie <= ix)) ? ie : ix;
        hr.rec.win_src = to_string(r.diag.win_src);
        hr.rec.t_cum_ms = cum_seconds * 1000.0;
        hr.i_e = ie;
        hr.i_x = ix;
        hr.i_o = r.diag.win_candidate_index;
        out.push_back(std::move(hr));
    }
    return out;
}

}  // namespace

HarnessResult run_experiment(const ExperimentConfig& config_in,
                             const std::string& out_dir_override, int workers_override,
                             std::uint64_t seed_offset) {
    ExperimentConfig config = config_in;
    config.validate();
    if (!out_dir_override.empty()) config.out_dir = out_dir_override;
    if (workers_override > 0) config.workers = workers_override;
    if (seed_offset != 0) {
        for (auto& s : config.seeds) s += seed_offset;
    }

    HarnessResult result;
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);

    if (config.mode == "spectrum_check") {
        const SpectralBasis1D basis = SpectralBasis1D::se_spectrum(
            config.spectrum_l, config.spectrum_sigma, config.spectrum_eta);
        Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(config.spectrum_grid, -1.0, 1.0);
        std::ostringstream out;
        out << "n_terms,sup_error\n";
        for (const int n : config.spectrum_terms) {
            out << n << ',' << format_double(kernel_reconstruction_error(basis, grid, n)) << '\n';
        }
        write_file(dir / "spectrum.csv", out.str(), result.written_files);
        return result;
    }

    const Benchmark bench = benchmark_by_name(config.benchmark);
    std::vector<Job> jobs;

    if (config.mode == "outer" || config.mode == "ats_sweep") {
        std::vector<AcquisitionSpec> acqs = config.acquisitions;
        if (config.mode == "ats_sweep") {
            acqs.clear();
            for (const double nc : config.nc_values) {
                AcquisitionSpec spec;
                spec.kind = AcqKind::Ats;
                spec.n_c = nc;
                acqs.push_back(spec);
            }
        }
        for (const auto& acq : acqs) {
            for (const std::uint64_t seed : config.seeds) {
                Job job;
                job.run_id = config.mode + "-" + config.benchmark + "-" + acq.label() + "-s" +
                             std::to_string(seed);
                job.seed = seed;
                job.work = [&config, bench, acq, seed, run_id = job.run_id]() {
                    const std::vector<IterationRecord> recs =
                        run_bo(bench, acq, config.bo_options(), seed);
                    std::vector<HarnessRecord> out;
                    out.reserve(recs.size());
                    for (const auto& r : recs) out.push_back({run_id, seed, r, -1, -1, -1});
                    return out;
                };
                jobs.push_back(std::move(job));
            }
        }
    } else if (config.mode == "inner_compare") {
        for (const std::uint64_t seed : config.seeds) {
            Job job;
            job.run_id =
                config.mode + "-" + config.benchmark + "-s" + std::to_string(seed);
            job.seed = seed;
            job.work = [&config, bench, seed]() {
                return run_inner_compare_seed(config, bench, seed);
            };
            jobs.push_back(std::move(job));
        }
    } else if (config.mode == "set_size_study") {
        for (const std::uint64_t seed : config.seeds) {
            Job job;
            job.run_id =
                config.mode + "-" + config.benchmark + "-s" + std::to_string(seed);
            job.seed = seed;
            job.work = [&config, bench, seed]() { return run_set_size_seed(config, bench, seed); };
            jobs.push_back(std::move(job));
        }
    }

    run_jobs(jobs, config.workers, result);

    Csv csv;
    csv.out << kRecordHeader << '\n';
    for (const auto& r : result.records) csv.row(r, config.timing);
    write_file(dir / "records.csv", csv.out.str(), result.written_files);

    write_summaries(result.records, dir, result.written_files);

    if (config.mode == "set_size_study") {
        std::ostringstream out;
        out << "run_id,seed,iter,i_e,i_x,i_o\n";
        for (const auto& r : result.records) {
            out << r.run_id << ',' << r.seed << ',' << r.rec.iter << ',' << r.i_e << ',' << r.i_x
                << ',' << r.i_o << '\n';
        }
        write_file(dir / "indices.csv", out.str(), result.written_files);
    }

    if (!result.failures.empty()) {
        std::ostringstream out;
        out << "run_id_and_reason\n";
        for (const auto& f : result.failures) out << f << '\n';
        write_file(dir / "failures.csv", out.str(), result.written_files);
    }
    return result;
}

}  // namespace tsroots
