#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsroots/bo.hpp"

namespace tsroots {

/// Batch experiment description, loaded from a versioned JSON config.
struct ExperimentConfig {
    int schema_version = 1;
    std::string mode;  // outer | inner_compare | set_size_study | ats_sweep | spectrum_check
    std::string benchmark;
    std::vector<AcquisitionSpec> acquisitions;
    std::vector<std::uint64_t> seeds;
    int budget = 50;
    int n_initial = 0;
    StartSetSizes sizes;
    double eta = 1e-16;
    double noise_sd = 1e-6;
    int refit_cadence = 1;
    std::string out_dir = "results";
    bool timing = true;
    int workers = 1;
    int reference_starts = 10000;   // inner_compare reference budget (d <= 2)
    std::vector<double> nc_values;  // ats_sweep

    double spectrum_l = 1.0;
    double spectrum_sigma = 1.0;
    double spectrum_eta = 1e-16;
    std::vector<int> spectrum_terms = {4, 8, 16, 32};
    int spectrum_grid = 21;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);

    /// Schema + referential checks; throws std::invalid_argument on violations.
    void validate() const;

    BoOptions bo_options() const;
};

struct HarnessRecord {
    std::string run_id;
    std::uint64_t seed = 0;
    IterationRecord rec;
    // set-size study extras (-1 when absent)
    int i_e = -1, i_x = -1, i_o = -1;
};

struct HarnessResult {
    std::vector<HarnessRecord> records;
    std::vector<std::string> failures;       // "run_id: reason"
    std::vector<std::string> written_files;  // paths under out_dir
};

/// Runs the configured experiment and writes records.csv plus per-metric
/// summaries (and mode-specific files) under out_dir. Deterministic given the
/// seed list; all floats printed with 17 significant digits.
HarnessResult run_experiment(const ExperimentConfig& config,
                             const std::string& out_dir_override = "",
                             int workers_override = 0, std::uint64_t seed_offset = 0);

/// Fixed record header shared by every mode.
extern const char* const kRecordHeader;

std::string format_double(double v);  // %.17g

}  // namespace tsroots
