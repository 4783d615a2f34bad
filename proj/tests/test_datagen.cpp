#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ipk/datagen.hpp"
#include "ipk/rng.hpp"

using namespace ipk;

TEST_CASE("sample_tokens: support, mean, determinism") {
    auto g = rng::substream(3, rng::Role::Tokens, 1ULL);
    const auto batch = sample_tokens(g, 200, 4, 7);
    const double hi = 1.0 / std::sqrt(7.0);
    for (double v : batch.data) {
        CHECK(v >= 0.0);
        CHECK(v <= hi);
    }

    auto g1 = rng::substream(3, rng::Role::Tokens, 2ULL);
    const auto big = sample_tokens(g1, 50000, 2, 1);
    const double mean = std::accumulate(big.data.begin(), big.data.end(), 0.0) / big.data.size();
    const double se = std::sqrt(1.0 / 12.0 / static_cast<double>(big.data.size()));
    CHECK(std::abs(mean - 0.5) <= 3.0 * se);

    auto ga = rng::substream(3, rng::Role::Tokens, 3ULL);
    auto gb = rng::substream(3, rng::Role::Tokens, 3ULL);
    CHECK(sample_tokens(ga, 10, 3, 2).data == sample_tokens(gb, 10, 3, 2).data);

    auto gc = rng::substream(3, rng::Role::Tokens, 4ULL);
    CHECK_THROWS_AS(sample_tokens(gc, 5, 1, 2), std::invalid_argument);
}

TEST_CASE("sample_ground_truth: normalization and diagonal scheme") {
    auto g = rng::substream(5, rng::Role::GroundTruth, 1ULL);
    const auto truth = sample_ground_truth(g, 6, 3, 16, MatrixScheme::Diagonal);
    double norm2 = 0.0;
    for (double t : truth.kernel.theta) norm2 += t * t;
    CHECK(std::abs(std::sqrt(norm2) - 4.0) <= 1e-12);
    CHECK(truth.smoothness() == 2);

    CHECK(truth.matrix.entries(0, 0) == 1.0);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            if (i != j) CHECK(truth.matrix.entries(i, j) == 0.0);
            else CHECK(std::abs(truth.matrix.entries(i, i)) <= 1.0);
        }
    CHECK(truth.matrix.op_norm() <= 1.0 + 1e-9);

    auto g1 = rng::substream(5, rng::Role::GroundTruth, 2ULL);
    const auto d1 = sample_ground_truth(g1, 1, 3, 8, MatrixScheme::Diagonal);
    CHECK(d1.matrix.entries(0, 0) == 1.0);
}

TEST_CASE("sample_ground_truth: low-rank factorization") {
    auto g = rng::substream(5, rng::Role::GroundTruth, 3ULL);
    const auto truth = sample_ground_truth(g, 8, 3, 12, MatrixScheme::LowRank, 2);
    REQUIRE(truth.matrix.rank_bound.has_value());
    CHECK(*truth.matrix.rank_bound == 2);
    CHECK((truth.matrix.entries - truth.matrix.factor_q * truth.matrix.factor_k.transpose()).norm() <=
          1e-12);
    CHECK(truth.matrix.op_norm() == doctest::Approx(1.0).epsilon(1e-6));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(truth.matrix.entries);
    CHECK(svd.singularValues()[2] <= 1e-12);  // rank <= 2
}

TEST_CASE("forward_operator: pairwise averages") {
    const auto kv = build_knots(1, 3, -1.0, 1.0);
    SplineKernel kernel{kv, {0.4, 1.0, -0.2}};
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = -0.5;
    const auto matrix = InteractionMatrix::dense(a);

    // N = 2: each output is the single opposite-pair evaluation
    const double toks2[] = {0.3, 0.1, 0.5, 0.7};
    const auto out2 = forward_operator(kernel, matrix, toks2, 2, 2);
    const double u12 = 0.3 * 0.5 - 0.5 * 0.1 * 0.7;
    CHECK(out2[0] == doctest::Approx(eval_spline(kernel, u12)).epsilon(1e-15));
    CHECK(out2[1] == doctest::Approx(eval_spline(kernel, u12)).epsilon(1e-15));

    // constant kernel -> constant output
    SplineKernel constant{kv, {3.0, 3.0, 3.0}};
    const auto outc = forward_operator(constant, matrix, toks2, 2, 2);
    CHECK(outc[0] == doctest::Approx(3.0).epsilon(1e-14));

    // N = 3 hand oracle: brute-force pair loop
    const double toks3[] = {0.3, 0.1, 0.5, 0.7, 0.2, 0.6};
    const auto out3 = forward_operator(kernel, matrix, toks3, 3, 2);
    for (int i = 0; i < 3; ++i) {
        double acc = 0.0;
        for (int j = 0; j < 3; ++j) {
            if (j == i) continue;
            const double u = toks3[2 * i] * toks3[2 * j] * 1.0 +
                             toks3[2 * i + 1] * toks3[2 * j + 1] * -0.5;
            acc += eval_spline(kernel, u);
        }
        CHECK(std::abs(out3[i] - acc / 2.0) <= 1e-12);
    }
}

TEST_CASE("generate_dataset: noiseless equals forward operator") {
    auto g0 = rng::substream(8, rng::Role::GroundTruth, 1ULL);
    const auto truth = sample_ground_truth(g0, 3, 3, 8, MatrixScheme::Diagonal);
    auto g1 = rng::substream(8, rng::Role::Tokens, 1ULL);
    const auto ds = generate_dataset(g1, truth, 20, 3, 3, 0.0);
    for (int m = 0; m < 20; ++m) {
        const auto clean = forward_operator(truth.kernel, truth.matrix, ds.tokens.token(m, 0), 3, 3);
        for (int i = 0; i < 3; ++i) CHECK(ds.response(m, i) == clean[i]);
    }
}

TEST_CASE("generate_dataset: noise variance and response bound") {
    auto g0 = rng::substream(8, rng::Role::GroundTruth, 2ULL);
    const auto truth = sample_ground_truth(g0, 2, 3, 8, MatrixScheme::Diagonal);
    const double sd = 0.3;
    auto ga = rng::substream(8, rng::Role::Tokens, 2ULL);
    const auto noisy = generate_dataset(ga, truth, 34000, 3, 2, sd);
    auto gb = rng::substream(8, rng::Role::Tokens, 2ULL);
    const auto clean = generate_dataset(gb, truth, 34000, 3, 2, 0.0);
    REQUIRE(noisy.tokens.data == clean.tokens.data);

    double ss = 0.0;
    const std::size_t n = noisy.responses.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double e = noisy.responses[k] - clean.responses[k];
        ss += e * e;
    }
    CHECK(ss / static_cast<double>(n) == doctest::Approx(sd * sd).epsilon(0.05));

    // |Y - eta| = |clean| <= sup |phi|
    double sup = 0.0;
    for (int t = 0; t <= 4000; ++t)
        sup = std::max(sup, std::abs(eval_spline(truth.kernel, -1.0 + t * 5e-4)));
    for (double y : clean.responses) CHECK(std::abs(y) <= sup + 1e-12);
}

TEST_CASE("permutation equivariance of clean responses") {
    auto g0 = rng::substream(9, rng::Role::GroundTruth, 1ULL);
    const auto truth = sample_ground_truth(g0, 4, 3, 10, MatrixScheme::Diagonal);
    auto g1 = rng::substream(9, rng::Role::Tokens, 1ULL);
    const auto batch = sample_tokens(g1, 5, 4, 4);
    const int perm[4] = {2, 0, 3, 1};
    for (int m = 0; m < 5; ++m) {
        const auto base = forward_operator(truth.kernel, truth.matrix, batch.token(m, 0), 4, 4);
        std::vector<double> shuffled(4 * 4);
        for (int i = 0; i < 4; ++i)
            std::copy(batch.token(m, perm[i]), batch.token(m, perm[i]) + 4, &shuffled[4 * i]);
        const auto permuted = forward_operator(truth.kernel, truth.matrix, shuffled.data(), 4, 4);
        for (int i = 0; i < 4; ++i) CHECK(permuted[i] == doctest::Approx(base[perm[i]]).epsilon(1e-13));
    }
}

TEST_CASE("score boundedness under the operator norm budget") {
    auto g0 = rng::substream(10, rng::Role::GroundTruth, 1ULL);
    const auto truth = sample_ground_truth(g0, 5, 3, 8, MatrixScheme::Diagonal);
    auto g1 = rng::substream(10, rng::Role::Tokens, 1ULL);
    const auto batch = sample_tokens(g1, 50, 3, 5);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> all(
        batch.data.data(), 150, 5);
    const Eigen::MatrixXd scores = all * truth.matrix.entries * all.transpose();
    CHECK(scores.cwiseAbs().maxCoeff() <= truth.matrix.op_norm_bound + 1e-12);
}

TEST_CASE("dataset round trips: CSV and binary") {
    auto g0 = rng::substream(11, rng::Role::GroundTruth, 1ULL);
    const auto truth = sample_ground_truth(g0, 3, 3, 8, MatrixScheme::Diagonal);
    auto g1 = rng::substream(11, rng::Role::Tokens, 1ULL);
    const auto ds = generate_dataset(g1, truth, 17, 3, 3, 0.05);

    std::stringstream csv;
    write_dataset_csv(ds, csv);
    const std::string first_line = csv.str().substr(0, csv.str().find('\n'));
    CHECK(first_line == "m,i,y,x0,x1,x2");
    const auto from_csv = read_dataset_csv(csv);
    CHECK(from_csv.tokens.data == ds.tokens.data);
    CHECK(from_csv.responses == ds.responses);

    std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
    write_dataset_binary(ds, bin);
    const auto from_bin = read_dataset_binary(bin);
    CHECK(from_bin.tokens.data == ds.tokens.data);
    CHECK(from_bin.responses == ds.responses);
    CHECK(from_bin.noise_sd == ds.noise_sd);
}
