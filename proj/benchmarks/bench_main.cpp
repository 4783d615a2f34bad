#include <benchmark/benchmark.h>

#include "ipk/bspline.hpp"
#include "ipk/datagen.hpp"
#include "ipk/estimator.hpp"
#include "ipk/rng.hpp"

namespace {

ipk::Dataset make_dataset(int samples, int tokens, int dim) {
    auto gt_rng = ipk::rng::substream(7, ipk::rng::Role::GroundTruth, 1ULL);
    const auto truth =
        ipk::sample_ground_truth(gt_rng, dim, 3, 16, ipk::MatrixScheme::Diagonal);
    auto rng = ipk::rng::substream(7, ipk::rng::Role::Tokens, 1ULL);
    return ipk::generate_dataset(rng, truth, samples, tokens, dim, 0.07);
}

void BM_BasisWindow(benchmark::State& state) {
    const auto knots = ipk::build_knots(3, 64, -1.0, 1.0);
    double out[4];
    double u = -1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ipk::eval_basis_window(knots, u, out));
        u += 1e-4;
        if (u > 1.0) u = -1.0;
    }
}
BENCHMARK(BM_BasisWindow);

void BM_DesignMatrix(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const auto data = make_dataset(m, 3, 5);
    auto gt_rng = ipk::rng::substream(7, ipk::rng::Role::GroundTruth, 1ULL);
    const auto truth = ipk::sample_ground_truth(gt_rng, 5, 3, 16, ipk::MatrixScheme::Diagonal);
    const auto knots = ipk::build_knots(3, 48, -1.0, 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(ipk::design_matrix(data, truth.matrix, knots));
    state.SetItemsProcessed(state.iterations() * m * 3);
}
BENCHMARK(BM_DesignMatrix)->Arg(1000)->Arg(4000);

void BM_LossGradA(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const auto data = make_dataset(m, 3, 5);
    auto gt_rng = ipk::rng::substream(7, ipk::rng::Role::GroundTruth, 1ULL);
    const auto truth = ipk::sample_ground_truth(gt_rng, 5, 3, 16, ipk::MatrixScheme::Diagonal);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            ipk::loss_and_grad_A(data, truth.matrix.entries, truth.kernel, 1e-5));
    state.SetItemsProcessed(state.iterations() * m);
}
BENCHMARK(BM_LossGradA)->Arg(1000)->Arg(4000);

void BM_Fit(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const auto data = make_dataset(m, 3, 5);
    auto gt_rng = ipk::rng::substream(7, ipk::rng::Role::GroundTruth, 1ULL);
    const auto truth = ipk::sample_ground_truth(gt_rng, 5, 3, 16, ipk::MatrixScheme::Diagonal);
    ipk::FitConfig cfg;
    cfg.basis_size = ipk::select_hyperparams(m, 3, 2.0, 16.0, 2.0).basis_size;
    cfg.ridge_lambda = ipk::select_hyperparams(m, 3, 2.0, 16.0, 2.0).ridge_lambda;
    for (auto _ : state) benchmark::DoNotOptimize(ipk::fit(data, cfg, truth.matrix.entries));
}
BENCHMARK(BM_Fit)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
