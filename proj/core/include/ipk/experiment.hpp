#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipk/config.hpp"
#include "ipk/datagen.hpp"
#include "ipk/estimator.hpp"
#include "ipk/evaluation.hpp"
#include "ipk/theory.hpp"

namespace ipk {

struct ExperimentConfig {
    std::uint64_t master_seed = 1;
    std::vector<int> sample_grid;  // M grid
    int tokens = 3;                // N
    std::vector<int> dims = {5};
    int degree_true = 3;
    int basis_true = 16;  // K_star
    int degree_est = 3;
    double k_scale = 16.0;
    double lambda_scale = 2.0;
    double ridge_lambda_override = -1.0;  // < 0 means "use the formula"
    double noise_sd = 0.07;
    int seeds_per_cell = 20;
    int rounds = 4;  // T
    AStepConfig a_step;
    double hot_start_sd = 5e-7;
    int test_size = 500;
    MatrixScheme scheme = MatrixScheme::Diagonal;
    int rank = 2;  // for the low-rank scheme
    std::string out_dir;
    std::string cell_filter;
    int threads = 0;  // 0 = hardware concurrency

    // theory-check settings
    int theory_dim = 5;
    int theory_token_samples = 10000;
    int theory_bins = 0;  // 0 = ceil(sqrt(pair count))
    int theory_interval_count = 16;
    int theory_codewords = 16;
    double theory_holder_l = 1.0;
    int coercivity_trials = 50;

    double beta() const { return degree_true - 1; }
};

ExperimentConfig experiment_config_from(const Config& cfg);

// Raised when more than 20% of cells fail; the CLI maps it to exit code 2.
struct CellFailureOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// generate -> fit -> evaluate over the (d, M, seed) grid; cell-level
// parallelism with per-cell RNG streams, so results are independent of
// execution order. Writes report.csv / report.json under out_dir when set.
RateStudyReport run_rate_study(const ExperimentConfig& config);

theory::TheoryReport run_theory_check(const ExperimentConfig& config);

// One Fig.-1-style log-log SVG per beta value present in the report; returns
// the written file paths.
std::vector<std::string> emit_plots(const RateStudyReport& report, const std::string& out_dir);

std::string cell_id(int dim, int samples, double beta, std::uint64_t seed);

}  // namespace ipk
