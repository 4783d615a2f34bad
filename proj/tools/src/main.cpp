// Command-line front end: generate / fit / rate-study / theory-check / plot.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ipk/config.hpp"
#include "ipk/datagen.hpp"
#include "ipk/estimator.hpp"
#include "ipk/evaluation.hpp"
#include "ipk/experiment.hpp"
#include "ipk/rng.hpp"
#include "ipk/theory.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string cells;
};

ipk::ExperimentConfig load_config(const CommonArgs& args, ipk::Config* raw = nullptr) {
    ipk::Config cfg = args.config_path.empty() ? ipk::Config::parse_string("")
                                               : ipk::Config::parse_file(args.config_path);
    if (raw) *raw = cfg;
    ipk::ExperimentConfig exp = ipk::experiment_config_from(cfg);
    if (args.seed) exp.master_seed = *args.seed;
    if (!args.out_dir.empty()) exp.out_dir = args.out_dir;
    exp.cell_filter = args.cells;
    return exp;
}

void echo_config(const ipk::Config& cfg, const std::string& out_dir) {
    if (out_dir.empty()) return;
    fs::create_directories(out_dir);
    std::ofstream os(fs::path(out_dir) / "config.echo.toml");
    os << cfg.source();
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file (TOML key = value)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "master seed override");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--cells", args.cells, "cell filter substring, e.g. d=5 or M=8000");
}

int cmd_generate(const CommonArgs& args) {
    ipk::Config raw;
    ipk::ExperimentConfig cfg = load_config(args, &raw);
    if (cfg.out_dir.empty()) throw std::invalid_argument("generate: --out is required");
    echo_config(raw, cfg.out_dir);

    const int d = cfg.dims.front();
    const int m = cfg.sample_grid.front();
    auto gt_rng = ipk::rng::substream(cfg.master_seed, ipk::rng::Role::GroundTruth,
                                      static_cast<std::uint64_t>(d),
                                      static_cast<std::uint64_t>(cfg.degree_true), 0ULL);
    const ipk::GroundTruth truth =
        ipk::sample_ground_truth(gt_rng, d, cfg.degree_true, cfg.basis_true, cfg.scheme, cfg.rank);
    auto data_rng = ipk::rng::substream(cfg.master_seed, ipk::rng::Role::Tokens,
                                        static_cast<std::uint64_t>(d),
                                        static_cast<std::uint64_t>(m), 0ULL);
    const ipk::Dataset ds =
        ipk::generate_dataset(data_rng, truth, m, cfg.tokens, d, cfg.noise_sd);

    std::ofstream csv(fs::path(cfg.out_dir) / "dataset.csv");
    ipk::write_dataset_csv(ds, csv);
    std::ofstream bin(fs::path(cfg.out_dir) / "dataset.bin", std::ios::binary);
    ipk::write_dataset_binary(ds, bin);
    std::cout << "wrote " << m << " samples (d=" << d << ", N=" << cfg.tokens << ") to "
              << cfg.out_dir << "\n";
    return 0;
}

int cmd_fit(const CommonArgs& args, const std::string& data_path) {
    ipk::Config raw;
    ipk::ExperimentConfig cfg = load_config(args, &raw);
    echo_config(raw, cfg.out_dir);

    const int m = cfg.sample_grid.front();
    ipk::Dataset ds;
    int d = cfg.dims.front();
    if (!data_path.empty()) {
        std::ifstream is(data_path, std::ios::binary);
        if (!is) throw std::invalid_argument("fit: cannot open " + data_path);
        if (data_path.size() > 4 && data_path.substr(data_path.size() - 4) == ".bin")
            ds = ipk::read_dataset_binary(is);
        else
            ds = ipk::read_dataset_csv(is);
        d = ds.tokens.dim;
    }
    // The hot start always perturbs the configured ground-truth matrix; for
    // external data files the truth is re-derived from the same config keys.
    auto gt_rng = ipk::rng::substream(cfg.master_seed, ipk::rng::Role::GroundTruth,
                                      static_cast<std::uint64_t>(d),
                                      static_cast<std::uint64_t>(cfg.degree_true), 0ULL);
    const ipk::GroundTruth truth = ipk::sample_ground_truth(gt_rng, d, cfg.degree_true,
                                                            cfg.basis_true, cfg.scheme, cfg.rank);
    std::optional<Eigen::MatrixXd> hint = truth.matrix.entries;
    if (data_path.empty()) {
        auto data_rng = ipk::rng::substream(cfg.master_seed, ipk::rng::Role::Tokens,
                                            static_cast<std::uint64_t>(d),
                                            static_cast<std::uint64_t>(m), 0ULL);
        ds = ipk::generate_dataset(data_rng, truth, m, cfg.tokens, d, cfg.noise_sd);
    }

    const ipk::HyperParams hyper = ipk::select_hyperparams(
        ds.tokens.samples, ds.tokens.tokens, cfg.beta(), cfg.k_scale, cfg.lambda_scale);
    ipk::FitConfig fit_cfg;
    fit_cfg.degree = cfg.degree_est;
    fit_cfg.basis_size = hyper.basis_size;
    fit_cfg.ridge_lambda =
        cfg.ridge_lambda_override >= 0.0 ? cfg.ridge_lambda_override : hyper.ridge_lambda;
    fit_cfg.rounds = cfg.rounds;
    fit_cfg.a_step = cfg.a_step;
    fit_cfg.hot_start_sd = cfg.hot_start_sd;
    fit_cfg.hot_start_seed = ipk::rng::mix(
        cfg.master_seed, static_cast<std::uint64_t>(ipk::rng::Role::HotStart), 0ULL);
    const ipk::FitResult result = ipk::fit(ds, fit_cfg, hint);

    const std::string json = ipk::fit_result_to_json(result);
    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        std::ofstream os(fs::path(cfg.out_dir) / "fit.json");
        os << json;
    } else {
        std::cout << json << "\n";
    }
    std::cout << "fit: K=" << fit_cfg.basis_size << " lambda=" << fit_cfg.ridge_lambda
              << " final loss=" << result.trajectory.back() << "\n";
    return 0;
}

int cmd_rate_study(const CommonArgs& args) {
    ipk::Config raw;
    ipk::ExperimentConfig cfg = load_config(args, &raw);
    echo_config(raw, cfg.out_dir);
    const ipk::RateStudyReport report = ipk::run_rate_study(cfg);
    for (const auto& s : report.series) {
        std::printf("d=%d beta=%g slope=%.4f (theory %.4f, R^2=%.3f)\n", s.dim, s.beta,
                    s.slope.slope, s.theoretical_slope, s.slope.r_squared);
    }
    return 0;
}

int cmd_theory_check(const CommonArgs& args) {
    ipk::Config raw;
    ipk::ExperimentConfig cfg = load_config(args, &raw);
    echo_config(raw, cfg.out_dir);
    const auto report = ipk::run_theory_check(cfg);
    double worst = 0.0;
    for (const auto& c : report.coercivity)
        worst = std::min(worst, c.margin_se > 0 ? c.margin / c.margin_se : c.margin);
    std::printf("K_bar=%d words=%zu min_sep=%.6g target=%.6g mean_KL=%.6g alpha=%.4f\n",
                report.hypotheses.interval_count(), report.hypotheses.codebook.size(),
                report.min_separation, report.hypotheses.separation_target, report.mean_kl,
                report.kl_alpha);
    std::printf("coercivity: %zu trials, worst margin %.3f SE\n", report.coercivity.size(), worst);
    return 0;
}

int cmd_plot(const CommonArgs& args, const std::string& report_path) {
    if (report_path.empty()) throw std::invalid_argument("plot: --report is required");
    if (args.out_dir.empty()) throw std::invalid_argument("plot: --out is required");
    std::ifstream is(report_path);
    if (!is) throw std::invalid_argument("plot: cannot open " + report_path);
    std::stringstream ss;
    ss << is.rdbuf();
    const ipk::RateStudyReport report = ipk::report_from_json(ss.str());
    for (const auto& path : ipk::emit_plots(report, args.out_dir))
        std::cout << "wrote " << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interacting-particle kernel estimation experiments"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string data_path, report_path;

    auto* generate = app.add_subcommand("generate", "sample a ground truth and write a dataset");
    add_common(generate, args);
    auto* fit = app.add_subcommand("fit", "run the alternating estimator on one dataset");
    add_common(fit, args);
    fit->add_option("--data", data_path, "dataset file (.csv or .bin); default: regenerate");
    auto* rate = app.add_subcommand("rate-study", "generate/fit/evaluate over the (d, M, seed) grid");
    add_common(rate, args);
    auto* theory = app.add_subcommand("theory-check", "density, packing, KL and coercivity checks");
    add_common(theory, args);
    auto* plot = app.add_subcommand("plot", "render log-log SVG plots from a report JSON");
    add_common(plot, args);
    plot->add_option("--report", report_path, "report.json produced by rate-study");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (generate->parsed()) return cmd_generate(args);
        if (fit->parsed()) return cmd_fit(args, data_path);
        if (rate->parsed()) return cmd_rate_study(args);
        if (theory->parsed()) return cmd_theory_check(args);
        if (plot->parsed()) return cmd_plot(args, report_path);
    } catch (const ipk::CellFailureOverflow& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
