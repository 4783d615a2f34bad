#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ipk/bspline.hpp"

namespace ipk {

// M samples of N tokens in R^d, each token in [0, 1/sqrt(d)]^d so that every
// token has Euclidean norm at most 1. Row-major (m, i, coordinate) layout.
struct TokenBatch {
    int samples = 0;  // M
    int tokens = 0;   // N
    int dim = 0;      // d
    std::vector<double> data;

    const double* token(int m, int i) const { return data.data() + (static_cast<std::size_t>(m) * tokens + i) * dim; }
    double* token(int m, int i) { return data.data() + (static_cast<std::size_t>(m) * tokens + i) * dim; }
};

// d x d score matrix with an operator-norm budget. When rank_bound is set the
// matrix is stored as Q K^T with factors of width r, so rank(A) <= r by
// construction.
struct InteractionMatrix {
    Eigen::MatrixXd entries;
    double op_norm_bound = 1.0;
    std::optional<int> rank_bound;
    Eigen::MatrixXd factor_q;  // populated only when rank_bound is set
    Eigen::MatrixXd factor_k;

    int dim() const { return static_cast<int>(entries.rows()); }
    // largest singular value via power iteration on A^T A, tolerance 1e-6
    double op_norm() const;
    bool satisfies_norm_bound() const { return op_norm() <= op_norm_bound + 1e-6; }

    static InteractionMatrix dense(Eigen::MatrixXd a, double bound = 1.0);
    static InteractionMatrix low_rank(Eigen::MatrixXd q, Eigen::MatrixXd k, double bound = 1.0);
};

enum class MatrixScheme {
    Diagonal,  // A_11 = 1, A_ii ~ Unif[-1,1] for i > 1
    LowRank,   // random Q K^T rescaled to op norm 1
};

struct GroundTruth {
    SplineKernel kernel;  // phi
    InteractionMatrix matrix;
    int degree = 3;
    int smoothness() const { return degree - 1; }  // beta of a degree-P spline
};

struct Dataset {
    TokenBatch tokens;
    std::vector<double> responses;  // M x N, row-major
    double noise_sd = 0.0;
    std::uint64_t seed = 0;

    double response(int m, int i) const { return responses[static_cast<std::size_t>(m) * tokens.tokens + i]; }
};

TokenBatch sample_tokens(std::mt19937_64& rng, int samples, int tokens, int dim);

GroundTruth sample_ground_truth(std::mt19937_64& rng, int dim, int degree, int basis_size,
                                MatrixScheme scheme, int rank = 2);

// Per-token off-diagonal average of kernel(x_i^T A x_j) for one sample of N
// tokens stored contiguously (N x dim).
std::vector<double> forward_operator(const SplineKernel& kernel, const InteractionMatrix& matrix,
                                     const double* sample_tokens, int tokens, int dim);

Dataset generate_dataset(std::mt19937_64& rng, const GroundTruth& truth, int samples, int tokens,
                         int dim, double noise_sd);

// Columnar CSV: header "m,i,y,x0,...,x{d-1}", one row per (m, i).
void write_dataset_csv(const Dataset& ds, std::ostream& os);
Dataset read_dataset_csv(std::istream& is);

// Compact binary container with a versioned header; round-trips bit-exactly.
void write_dataset_binary(const Dataset& ds, std::ostream& os);
Dataset read_dataset_binary(std::istream& is);

}  // namespace ipk
