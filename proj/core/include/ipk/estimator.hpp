#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipk/bspline.hpp"
#include "ipk/datagen.hpp"

namespace ipk {

enum class AStepOptimizer { GradientDescent, Adam };

struct AStepConfig {
    AStepOptimizer optimizer = AStepOptimizer::Adam;
    double learning_rate = 1e-8;
    int epochs = 20;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct FitConfig {
    int degree = 3;
    int basis_size = 16;           // K_est
    double ridge_lambda = 0.0;     // lambda_theta
    double matrix_lambda = 1e-5;   // lambda_A
    int rounds = 4;                // T
    AStepConfig a_step;
    double hot_start_sd = 5e-7;    // entrywise sd is hot_start_sd / d
    std::uint64_t hot_start_seed = 0;
    std::optional<Eigen::MatrixXd> initial_matrix;  // overrides the hot start
    bool project_op_norm = false;  // rescale A to op_norm_bound after each epoch
};

struct FitResult {
    SplineKernel kernel;        // phi hat
    InteractionMatrix matrix;   // A hat
    std::vector<double> trajectory;  // training loss, length rounds+1
    double gram_condition = 0.0;     // estimate at the final theta-step
    int rounds_executed = 0;
};

// K and lambda rules: K_est = round(K_scale (M/log M)^{1/(2 beta + 1)}),
// lambda_theta = lambda_scale * K_est / (M (N-1)). Rounding half-away-from-zero.
struct HyperParams {
    int basis_size;
    double ridge_lambda;
};
HyperParams select_hyperparams(int samples, int tokens, double beta, double k_scale,
                               double lambda_scale);

// Row (m, i) holds (1/(N-1)) sum_{j != i} B_k(x_i^T A x_j); every row sums to 1.
Eigen::MatrixXd design_matrix(const Dataset& dataset, const InteractionMatrix& matrix,
                              const KnotVector& knots);

// Solves (U^T U + lambda I) theta = U^T y by LLT; on failure with lambda = 0
// retries with jitter 1e-10 tr(G)/K, then falls back to a least-squares solve.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& responses,
                            double ridge_lambda);

// loss = (1/(MN)) sum_{m,i} (R[X^m]_i - Y^m_i)^2 + (lambda_A / 2) ||A||_F^2
// with R the (1/(N-1))-normalized forward operator; the gradient is exact via
// the analytic spline derivative.
struct LossGrad {
    double loss;
    Eigen::MatrixXd grad;
};
LossGrad loss_and_grad_A(const Dataset& dataset, const Eigen::MatrixXd& a,
                         const SplineKernel& kernel, double matrix_lambda);

Eigen::MatrixXd a_step(const Dataset& dataset, const Eigen::MatrixXd& a_init,
                       const SplineKernel& kernel, double matrix_lambda, const AStepConfig& cfg,
                       bool project_op_norm = false, double op_norm_bound = 1.0);

// Hot start (theta-solve at A^0) followed by `rounds` alternating
// (A-step, theta-step) pairs.
FitResult fit(const Dataset& dataset, const FitConfig& config,
              const std::optional<Eigen::MatrixXd>& hot_start_hint = std::nullopt);

// Training data-term loss at fixed (kernel, A); used for trajectories/tests.
double training_loss(const Dataset& dataset, const SplineKernel& kernel, const Eigen::MatrixXd& a);

// FitResult round trip as JSON (theta, knots, A row-major, trajectory).
std::string fit_result_to_json(const FitResult& result);

}  // namespace ipk
