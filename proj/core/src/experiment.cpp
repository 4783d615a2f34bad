#include "ipk/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "ipk/rng.hpp"
#include "ipk/svg.hpp"

namespace ipk {

namespace fs = std::filesystem;

ExperimentConfig experiment_config_from(const Config& cfg) {
    ExperimentConfig out;
    out.master_seed = static_cast<std::uint64_t>(cfg.integer_or("seed", 1));
    if (cfg.has("sample_grid")) {
        for (auto m : cfg.integers("sample_grid")) out.sample_grid.push_back(static_cast<int>(m));
    } else {
        out.sample_grid = {2000, 4000, 8000, 16000};
    }
    out.tokens = static_cast<int>(cfg.integer_or("tokens", out.tokens));
    if (cfg.has("dims")) {
        out.dims.clear();
        for (auto d : cfg.integers("dims")) out.dims.push_back(static_cast<int>(d));
    }
    out.degree_true = static_cast<int>(cfg.integer_or("degree_true", out.degree_true));
    out.basis_true = static_cast<int>(cfg.integer_or("basis_true", out.basis_true));
    out.degree_est = static_cast<int>(cfg.integer_or("degree_est", out.degree_true));
    out.k_scale = cfg.number_or("k_scale", out.k_scale);
    out.lambda_scale = cfg.number_or("lambda_scale", out.lambda_scale);
    out.ridge_lambda_override = cfg.number_or("ridge_lambda", -1.0);
    out.noise_sd = cfg.number_or("noise_sd", out.noise_sd);
    out.seeds_per_cell = static_cast<int>(cfg.integer_or("seeds_per_cell", out.seeds_per_cell));
    out.rounds = static_cast<int>(cfg.integer_or("rounds", out.rounds));
    out.a_step.learning_rate = cfg.number_or("a_step_lr", out.a_step.learning_rate);
    out.a_step.epochs = static_cast<int>(cfg.integer_or("a_step_epochs", out.a_step.epochs));
    if (cfg.text_or("a_step_optimizer", "adam") == "gd")
        out.a_step.optimizer = AStepOptimizer::GradientDescent;
    out.hot_start_sd = cfg.number_or("hot_start_sd", out.hot_start_sd);
    out.test_size = static_cast<int>(cfg.integer_or("test_size", out.test_size));
    if (cfg.text_or("matrix_scheme", "diagonal") == "low_rank") out.scheme = MatrixScheme::LowRank;
    out.rank = static_cast<int>(cfg.integer_or("rank", out.rank));
    out.out_dir = cfg.text_or("out_dir", "");
    out.threads = static_cast<int>(cfg.integer_or("threads", 0));

    out.theory_dim = static_cast<int>(cfg.integer_or("theory_dim", out.theory_dim));
    out.theory_token_samples =
        static_cast<int>(cfg.integer_or("theory_token_samples", out.theory_token_samples));
    out.theory_bins = static_cast<int>(cfg.integer_or("theory_bins", 0));
    out.theory_interval_count =
        static_cast<int>(cfg.integer_or("theory_interval_count", out.theory_interval_count));
    out.theory_codewords = static_cast<int>(cfg.integer_or("theory_codewords", out.theory_codewords));
    out.theory_holder_l = cfg.number_or("theory_holder_l", out.theory_holder_l);
    out.coercivity_trials =
        static_cast<int>(cfg.integer_or("coercivity_trials", out.coercivity_trials));
    return out;
}

std::string cell_id(int dim, int samples, double beta, std::uint64_t seed) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "d=%d,M=%d,beta=%g,seed=%llu", dim, samples, beta,
                  static_cast<unsigned long long>(seed));
    return buf;
}

namespace {

struct Cell {
    int dim;
    int samples;
    std::uint64_t seed;
};

double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = p * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

ErrorRecord run_cell(const ExperimentConfig& cfg, const Cell& cell) {
    ErrorRecord rec;
    rec.dim = cell.dim;
    rec.samples = cell.samples;
    rec.tokens = cfg.tokens;
    rec.beta = cfg.beta();
    rec.seed = cell.seed;

    const auto t0 = std::chrono::steady_clock::now();
    try {
        // Truth and test tokens are keyed by (d, seed) only, so every M on a
        // rate curve estimates the same target.
        auto gt_rng = rng::substream(cfg.master_seed, rng::Role::GroundTruth,
                                     static_cast<std::uint64_t>(cell.dim),
                                     static_cast<std::uint64_t>(cfg.degree_true), cell.seed);
        const GroundTruth truth = sample_ground_truth(gt_rng, cell.dim, cfg.degree_true,
                                                      cfg.basis_true, cfg.scheme, cfg.rank);

        auto data_rng = rng::substream(cfg.master_seed, rng::Role::Tokens,
                                       static_cast<std::uint64_t>(cell.dim),
                                       static_cast<std::uint64_t>(cell.samples), cell.seed);
        const Dataset data = generate_dataset(data_rng, truth, cell.samples, cfg.tokens, cell.dim,
                                              cfg.noise_sd);

        const HyperParams hyper = select_hyperparams(cell.samples, cfg.tokens, cfg.beta(),
                                                     cfg.k_scale, cfg.lambda_scale);
        FitConfig fit_cfg;
        fit_cfg.degree = cfg.degree_est;
        fit_cfg.basis_size = hyper.basis_size;
        fit_cfg.ridge_lambda =
            cfg.ridge_lambda_override >= 0.0 ? cfg.ridge_lambda_override : hyper.ridge_lambda;
        fit_cfg.rounds = cfg.rounds;
        fit_cfg.a_step = cfg.a_step;
        fit_cfg.hot_start_sd = cfg.hot_start_sd;
        fit_cfg.hot_start_seed = rng::mix(cfg.master_seed,
                                          static_cast<std::uint64_t>(rng::Role::HotStart),
                                          static_cast<std::uint64_t>(cell.dim),
                                          static_cast<std::uint64_t>(cell.samples), cell.seed);
        const FitResult result = fit(data, fit_cfg, truth.matrix.entries);

        auto test_rng = rng::substream(cfg.master_seed, rng::Role::TestTokens,
                                       static_cast<std::uint64_t>(cell.dim), cell.seed);
        const TokenBatch test = sample_tokens(test_rng, cfg.test_size, cfg.tokens, cell.dim);
        rec.composed_mse = composed_mse(result.kernel, result.matrix, truth, test);
        rec.pairwise_l2 = pairwise_l2(result.kernel, result.matrix, truth, test);
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace

RateStudyReport run_rate_study(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    for (int d : cfg.dims)
        for (int m : cfg.sample_grid)
            for (int s = 0; s < cfg.seeds_per_cell; ++s) {
                if (!cfg.cell_filter.empty() &&
                    cell_id(d, m, cfg.beta(), s).find(cfg.cell_filter) == std::string::npos)
                    continue;
                cells.push_back({d, m, static_cast<std::uint64_t>(s)});
            }
    if (cells.empty()) throw std::invalid_argument("run_rate_study: empty cell grid");

    std::unique_ptr<std::ofstream> progress;
    std::mutex progress_mutex;
    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        progress = std::make_unique<std::ofstream>(fs::path(cfg.out_dir) / "records.partial.csv");
        *progress << "d,M,N,beta,seed,composed_mse,pairwise_l2,wall_s\n";
    }

    std::vector<ErrorRecord> records(cells.size());
    std::atomic<std::size_t> next{0};
    int n_threads = cfg.threads > 0 ? cfg.threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(cells.size())));

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            ErrorRecord rec = run_cell(cfg, cells[i]);
            if (progress) {
                // whole lines under the lock, so a crash leaves a readable file
                char buf[256];
                std::snprintf(buf, sizeof(buf), "%d,%d,%d,%g,%llu,%.17g,%.17g,%.3f\n", rec.dim,
                              rec.samples, rec.tokens, rec.beta,
                              static_cast<unsigned long long>(rec.seed), rec.composed_mse,
                              rec.pairwise_l2, rec.wall_seconds);
                std::lock_guard<std::mutex> lk(progress_mutex);
                *progress << buf << std::flush;
            }
            records[i] = rec;
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    const auto failed =
        std::count_if(records.begin(), records.end(), [](const ErrorRecord& r) { return r.failed; });
    if (static_cast<double>(failed) > 0.2 * static_cast<double>(records.size())) {
        std::string first;
        for (const auto& r : records)
            if (r.failed) {
                first = r.error;
                break;
            }
        throw CellFailureOverflow("run_rate_study: " + std::to_string(failed) + "/" +
                                  std::to_string(records.size()) + " cells failed; first: " + first);
    }

    RateStudyReport report;
    report.records = std::move(records);
    for (int d : cfg.dims) {
        RateStudyReport::Series series;
        series.dim = d;
        series.beta = cfg.beta();
        series.theoretical_slope = theoretical_slope(cfg.beta());
        std::vector<std::pair<double, double>> points;
        for (int m : cfg.sample_grid) {
            std::vector<double> errs;
            for (const auto& r : report.records)
                if (!r.failed && r.dim == d && r.samples == m) errs.push_back(r.composed_mse);
            if (errs.empty()) continue;
            series.sample_sizes.push_back(m);
            series.median_composed_mse.push_back(quantile(errs, 0.5));
            series.q1_composed_mse.push_back(quantile(errs, 0.25));
            series.q3_composed_mse.push_back(quantile(errs, 0.75));
            points.emplace_back(m, series.median_composed_mse.back());
        }
        bool positive = std::all_of(points.begin(), points.end(),
                                    [](const auto& p) { return p.second > 0.0; });
        if (points.size() >= 3 && positive) series.slope = rate_slope(points);
        if (!series.sample_sizes.empty()) report.series.push_back(std::move(series));
    }

    if (!cfg.out_dir.empty()) {
        std::ofstream csv(fs::path(cfg.out_dir) / "report.csv");
        write_report_csv(report, csv);
        std::ofstream json(fs::path(cfg.out_dir) / "report.json");
        json << report_to_json(report);
        for (const auto& path : emit_plots(report, cfg.out_dir)) (void)path;
    }
    return report;
}

theory::TheoryReport run_theory_check(const ExperimentConfig& cfg) {
    const int d = cfg.theory_dim;
    auto gt_rng = rng::substream(cfg.master_seed, rng::Role::GroundTruth,
                                 static_cast<std::uint64_t>(d),
                                 static_cast<std::uint64_t>(cfg.degree_true),
                                 static_cast<std::uint64_t>(0));
    const GroundTruth truth =
        sample_ground_truth(gt_rng, d, cfg.degree_true, cfg.basis_true, cfg.scheme, cfg.rank);

    auto tok_rng = rng::substream(cfg.master_seed, rng::Role::Theory, static_cast<std::uint64_t>(1));
    const TokenBatch tokens = sample_tokens(tok_rng, cfg.theory_token_samples, cfg.tokens, d);

    const std::int64_t pairs = static_cast<std::int64_t>(tokens.samples) * tokens.tokens *
                               (tokens.tokens - 1);
    const int bins = cfg.theory_bins > 0
                         ? cfg.theory_bins
                         : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(pairs))));

    theory::TheoryReport report;
    report.density = theory::estimate_pU(tokens, truth.matrix, bins);

    theory::HypothesisConstants constants;
    constants.holder_l = cfg.theory_holder_l;
    constants.interval_count = cfg.theory_interval_count;
    // Varshamov-Gilbert only guarantees 2^ceil(K_bar/8) words at the distance
    // floor, so cap the request at what the bound can feasibly deliver.
    const int kbar = cfg.theory_interval_count;
    const int shift = std::min(30, (kbar + 7) / 8);
    constants.target_codewords = std::min(cfg.theory_codewords, 1 << shift);
    constants.codebook_seed =
        rng::mix(cfg.master_seed, static_cast<std::uint64_t>(rng::Role::Theory), 2ULL);
    report.hypotheses = theory::build_hypotheses(report.density, cfg.theory_token_samples,
                                                 cfg.tokens, cfg.beta(), constants);

    const int words = static_cast<int>(report.hypotheses.codebook.size());
    report.min_separation = std::numeric_limits<double>::infinity();
    for (int k = 0; k < words; ++k)
        for (int kp = k + 1; kp < words; ++kp)
            report.min_separation = std::min(
                report.min_separation, theory::l2_separation(report.hypotheses, k, kp, report.density));

    double kl_sum = 0.0;
    report.max_kl = 0.0;
    for (int k = 0; k < words; ++k) {
        const double kl =
            theory::kl_budget(report.hypotheses, k, tokens, truth.matrix, cfg.noise_sd);
        kl_sum += kl;
        report.max_kl = std::max(report.max_kl, kl);
    }
    report.mean_kl = words > 0 ? kl_sum / words : 0.0;
    report.kl_alpha = words > 1 ? report.mean_kl / std::log(static_cast<double>(words)) : 0.0;

    for (int t = 0; t < cfg.coercivity_trials; ++t) {
        auto trial_rng = rng::substream(cfg.master_seed, rng::Role::Theory, 10ULL,
                                        static_cast<std::uint64_t>(t));
        const GroundTruth g =
            sample_ground_truth(trial_rng, d, cfg.degree_true, cfg.basis_true, cfg.scheme, cfg.rank);
        const GroundTruth gs =
            sample_ground_truth(trial_rng, d, cfg.degree_true, cfg.basis_true, cfg.scheme, cfg.rank);
        const TokenBatch mc = sample_tokens(trial_rng, 2000, cfg.tokens, d);
        report.coercivity.push_back(
            theory::coercivity_check(g.kernel, g.matrix, gs.kernel, gs.matrix, mc));
    }

    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        std::ofstream json(fs::path(cfg.out_dir) / "theory.json");
        json << theory_report_to_json(report);
    }
    return report;
}

std::vector<std::string> emit_plots(const RateStudyReport& report, const std::string& out_dir) {
    static const char* kPalette[] = {"#1f6fb2", "#d1495b", "#2e8b57", "#8a5bb2", "#d88a2a"};
    if (report.series.empty()) throw std::invalid_argument("emit_plots: no series to plot");
    fs::create_directories(out_dir);
    std::vector<std::string> written;

    std::vector<double> betas;
    for (const auto& s : report.series)
        if (std::find(betas.begin(), betas.end(), s.beta) == betas.end()) betas.push_back(s.beta);

    for (double beta : betas) {
        std::vector<svg::Series> series;
        std::vector<svg::Guide> guides;
        int color = 0;
        for (const auto& s : report.series) {
            if (s.beta != beta) continue;
            svg::Series sv;
            char lab[64];
            std::snprintf(lab, sizeof(lab), "d=%d (slope %.3f)", s.dim, s.slope.slope);
            sv.label = lab;
            sv.color = kPalette[color++ % 5];
            for (std::size_t i = 0; i < s.sample_sizes.size(); ++i) {
                const double m = s.sample_sizes[i];
                sv.medians.push_back({m, s.median_composed_mse[i]});
                sv.lower_whisker.push_back({m, s.q1_composed_mse[i]});
                sv.upper_whisker.push_back({m, s.q3_composed_mse[i]});
            }
            if (guides.empty() && !sv.medians.empty()) {
                char label[64];
                std::snprintf(label, sizeof(label), "slope %.3f", s.theoretical_slope);
                guides.push_back({label, s.theoretical_slope, sv.medians.front().x,
                                  sv.medians.front().y});
            }
            series.push_back(std::move(sv));
        }
        if (series.empty()) continue;

        char title[64];
        std::snprintf(title, sizeof(title), "composed error vs M (beta=%g)", beta);
        char name[64];
        std::snprintf(name, sizeof(name), "rates_beta%g.svg", beta);
        const auto path = fs::path(out_dir) / name;
        std::ofstream os(path);
        os << svg::loglog_plot(title, series, guides);
        written.push_back(path.string());
    }
    return written;
}

}  // namespace ipk
