#include <CLI11.hpp>

#include <cstdint>
#include <iostream>

#include "tsroots/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"TS-roots Bayesian optimization toolkit"};
    app.require_subcommand(1);

    // run --config <path> [--out <dir>] [--workers N] [--seed-offset K]
    auto* run = app.add_subcommand("run", "Run a batch experiment from a JSON config");
    std::string config_path, out_dir;
    int workers = 0;
    std::uint64_t seed_offset = 0;
    run->add_option("--config", config_path, "Experiment config file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides config)");
    run->add_option("--workers", workers, "Worker threads for seed dispatch");
    run->add_option("--seed-offset", seed_offset, "Offset added to every seed");

    auto* list = app.add_subcommand("list-benchmarks", "List the benchmark registry");

    auto* spectrum = app.add_subcommand("spectrum", "Print SE Mercer spectrum constants");
    double l = 1.0, eta = 1e-16, sigma = 1.0;
    spectrum->add_option("--l", l, "Length scale")->required();
    spectrum->add_option("--eta", eta, "Truncation ratio")->required();
    spectrum->add_option("--sigma", sigma, "Gaussian measure sigma");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const tsroots::ExperimentConfig config =
                tsroots::ExperimentConfig::from_json_file(config_path);
            const tsroots::HarnessResult res =
                tsroots::run_experiment(config, out_dir, workers, seed_offset);
            for (const auto& f : res.written_files) std::cout << "wrote " << f << "\n";
            for (const auto& f : res.failures) std::cerr << "failed " << f << "\n";
            const bool all_failed = res.records.empty() && !res.failures.empty();
            return all_failed ? 1 : 0;
        }
        if (*list) {
            for (const auto& name : tsroots::benchmark_names()) {
                const tsroots::Benchmark b = tsroots::benchmark_by_name(name);
                std::cout << name << "  d=" << b.dim << "  f*=" << b.f_star << "\n";
            }
            std::cout << "families schwefel/rosenbrock/levy/ackley/powell/sphere accept any "
                         "dimension suffix, e.g. schwefel8\n";
            return 0;
        }
        if (*spectrum) {
            const tsroots::SpectralBasis1D basis =
                tsroots::SpectralBasis1D::se_spectrum(l, sigma, eta);
            Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(21, -1.0, 1.0);
            std::cout << "a=" << tsroots::format_double(basis.a())
                      << " b=" << tsroots::format_double(basis.b())
                      << " c=" << tsroots::format_double(basis.c())
                      << " A=" << tsroots::format_double(basis.big_a()) << "\n"
                      << "decay_ratio=" << tsroots::format_double(basis.decay_ratio())
                      << " N=" << basis.truncation() << "\n"
                      << "lambda0=" << tsroots::format_double(basis.eigenvalue(0))
                      << " lambda1=" << tsroots::format_double(basis.eigenvalue(1)) << "\n"
                      << "kernel_reconstruction_sup_error="
                      << tsroots::format_double(tsroots::kernel_reconstruction_error(basis, grid))
                      << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
