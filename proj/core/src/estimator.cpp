#include "ipk/estimator.hpp"

#include <cmath>
#include <json.hpp>
#include <stdexcept>

#include "ipk/rng.hpp"

namespace ipk {

HyperParams select_hyperparams(int samples, int tokens, double beta, double k_scale,
                               double lambda_scale) {
    if (samples <= 2 || std::log(static_cast<double>(samples)) <= 1.0)
        throw std::invalid_argument("select_hyperparams: need M > e");
    if (beta <= 0.0) throw std::invalid_argument("select_hyperparams: beta must be positive");
    const double m = static_cast<double>(samples);
    const double k_raw = k_scale * std::pow(m / std::log(m), 1.0 / (2.0 * beta + 1.0));
    HyperParams hp;
    hp.basis_size = static_cast<int>(std::llround(k_raw));
    hp.ridge_lambda = lambda_scale * hp.basis_size / (m * (tokens - 1));
    return hp;
}

Eigen::MatrixXd design_matrix(const Dataset& dataset, const InteractionMatrix& matrix,
                              const KnotVector& knots) {
    const int m_count = dataset.tokens.samples;
    const int n = dataset.tokens.tokens;
    const int d = dataset.tokens.dim;
    if (m_count < 1) throw std::invalid_argument("design_matrix: empty dataset");
    const int k = knots.basis_size();
    const int p = knots.degree;

    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_count) * n, k);
    std::vector<double> window(p + 1);
    const double inv = 1.0 / (n - 1);
    for (int m = 0; m < m_count; ++m) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
            dataset.tokens.token(m, 0), n, d);
        const Eigen::MatrixXd scores = x * matrix.entries * x.transpose();
        for (int i = 0; i < n; ++i) {
            auto row = design.row(static_cast<Eigen::Index>(m) * n + i);
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const int first = eval_basis_window(knots, scores(i, j), window.data());
                for (int w = 0; w <= p; ++w) row(first + w) += inv * window[w];
            }
        }
    }
    return design;
}

Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& responses,
                            double ridge_lambda) {
    if (design.rows() != responses.size())
        throw std::invalid_argument("ridge_solve: inconsistent dimensions");
    if (ridge_lambda < 0.0) throw std::invalid_argument("ridge_solve: lambda must be >= 0");
    const int k = static_cast<int>(design.cols());
    const Eigen::MatrixXd gram = design.transpose() * design;
    const Eigen::VectorXd rhs = design.transpose() * responses;

    auto try_solve = [&](double shift) -> std::optional<Eigen::VectorXd> {
        Eigen::MatrixXd g = gram;
        if (shift > 0.0) g.diagonal().array() += shift;
        Eigen::LLT<Eigen::MatrixXd> llt(g);
        if (llt.info() != Eigen::Success) return std::nullopt;
        return llt.solve(rhs);
    };

    if (auto theta = try_solve(ridge_lambda)) return *theta;
    // conditioning failure: jitter retry, then least-squares fallback
    const double jitter = 1e-10 * gram.trace() / k;
    if (auto theta = try_solve(ridge_lambda + jitter)) return *theta;
    return design.colPivHouseholderQr().solve(responses);
}

LossGrad loss_and_grad_A(const Dataset& dataset, const Eigen::MatrixXd& a,
                         const SplineKernel& kernel, double matrix_lambda) {
    if (kernel.knots.degree < 1)
        throw std::invalid_argument("loss_and_grad_A: kernel degree must be >= 1");
    const int m_count = dataset.tokens.samples;
    const int n = dataset.tokens.tokens;
    const int d = dataset.tokens.dim;
    const SplineKernel deriv = derivative_kernel(kernel);
    const double inv = 1.0 / (n - 1);

    double loss = 0.0;
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd weights(n, n);
    for (int m = 0; m < m_count; ++m) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
            dataset.tokens.token(m, 0), n, d);
        const Eigen::MatrixXd scores = x * a * x.transpose();
        weights.setZero();
        for (int i = 0; i < n; ++i) {
            double r = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != i) r += eval_spline(kernel, scores(i, j));
            r = r * inv - dataset.response(m, i);
            loss += r * r;
            for (int j = 0; j < n; ++j)
                if (j != i) weights(i, j) = r * inv * eval_spline(deriv, scores(i, j));
        }
        // d loss / dA accumulates residual-weighted outer products X_i X_j^T
        grad.noalias() += x.transpose() * weights * x;
    }
    const double scale = 1.0 / (static_cast<double>(m_count) * n);
    loss *= scale;
    grad *= 2.0 * scale;
    loss += 0.5 * matrix_lambda * a.squaredNorm();
    grad += matrix_lambda * a;
    return {loss, std::move(grad)};
}

Eigen::MatrixXd a_step(const Dataset& dataset, const Eigen::MatrixXd& a_init,
                       const SplineKernel& kernel, double matrix_lambda, const AStepConfig& cfg,
                       bool project_op_norm, double op_norm_bound) {
    if (cfg.learning_rate <= 0.0) throw std::invalid_argument("a_step: learning rate must be > 0");
    if (cfg.epochs < 1) throw std::invalid_argument("a_step: epochs must be >= 1");
    Eigen::MatrixXd a = a_init;
    Eigen::MatrixXd m1 = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const LossGrad lg = loss_and_grad_A(dataset, a, kernel, matrix_lambda);
        if (!std::isfinite(lg.loss)) throw std::runtime_error("a_step: non-finite loss (divergent step size)");
        switch (cfg.optimizer) {
            case AStepOptimizer::GradientDescent:
                a -= cfg.learning_rate * lg.grad;
                break;
            case AStepOptimizer::Adam: {
                m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * lg.grad;
                m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * lg.grad.cwiseProduct(lg.grad);
                const double c1 = 1.0 - std::pow(cfg.beta1, epoch);
                const double c2 = 1.0 - std::pow(cfg.beta2, epoch);
                a -= cfg.learning_rate *
                     ((m1 / c1).array() / ((m2 / c2).array().sqrt() + cfg.epsilon)).matrix();
                break;
            }
        }
        if (project_op_norm) {
            InteractionMatrix probe = InteractionMatrix::dense(a, op_norm_bound);
            const double norm = probe.op_norm();
            if (norm > op_norm_bound) a *= op_norm_bound / norm;
        }
    }
    return a;
}

double training_loss(const Dataset& dataset, const SplineKernel& kernel, const Eigen::MatrixXd& a) {
    const int m_count = dataset.tokens.samples;
    const int n = dataset.tokens.tokens;
    const InteractionMatrix mat = InteractionMatrix::dense(a);
    double loss = 0.0;
    for (int m = 0; m < m_count; ++m) {
        const auto r = forward_operator(kernel, mat, dataset.tokens.token(m, 0), n, dataset.tokens.dim);
        for (int i = 0; i < n; ++i) {
            const double e = r[i] - dataset.response(m, i);
            loss += e * e;
        }
    }
    return loss / (static_cast<double>(m_count) * n);
}

FitResult fit(const Dataset& dataset, const FitConfig& config,
              const std::optional<Eigen::MatrixXd>& hot_start_hint) {
    const int d = dataset.tokens.dim;
    Eigen::MatrixXd a;
    if (config.initial_matrix) {
        a = *config.initial_matrix;
    } else if (hot_start_hint) {
        a = *hot_start_hint;
        if (config.hot_start_sd > 0.0) {
            auto g = rng::substream(config.hot_start_seed,
                                    static_cast<std::uint64_t>(rng::Role::HotStart));
            const double sd = config.hot_start_sd / d;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) a(i, j) += sd * rng::gaussian(g);
        }
    } else {
        throw std::invalid_argument("fit: hot start requires a hint or an explicit initial matrix");
    }

    FitResult result;
    result.kernel.knots = build_knots(config.degree, config.basis_size, -1.0, 1.0);
    const Eigen::Map<const Eigen::VectorXd> y(dataset.responses.data(),
                                              static_cast<Eigen::Index>(dataset.responses.size()));

    auto theta_step = [&](const Eigen::MatrixXd& current_a) {
        const Eigen::MatrixXd u = design_matrix(dataset, InteractionMatrix::dense(current_a),
                                                result.kernel.knots);
        const Eigen::VectorXd theta = ridge_solve(u, y, config.ridge_lambda);
        result.kernel.theta.assign(theta.data(), theta.data() + theta.size());
        Eigen::MatrixXd gram = u.transpose() * u;
        gram.diagonal().array() += config.ridge_lambda;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        result.gram_condition = hi / std::max(lo, 1e-300);
    };

    try {
        theta_step(a);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("fit: hot start: ") + e.what());
    }
    result.trajectory.push_back(training_loss(dataset, result.kernel, a));

    for (int t = 1; t <= config.rounds; ++t) {
        try {
            a = a_step(dataset, a, result.kernel, config.matrix_lambda, config.a_step,
                       config.project_op_norm, 1.0);
            theta_step(a);
        } catch (const std::exception& e) {
            throw std::runtime_error("fit: round " + std::to_string(t) + ": " + e.what());
        }
        result.trajectory.push_back(training_loss(dataset, result.kernel, a));
        result.rounds_executed = t;
    }
    result.matrix = InteractionMatrix::dense(a);
    return result;
}

std::string fit_result_to_json(const FitResult& result) {
    nlohmann::json j;
    j["theta"] = result.kernel.theta;
    j["knots"] = {{"degree", result.kernel.knots.degree},
                  {"values", result.kernel.knots.knots}};
    std::vector<double> a_rows;
    for (int i = 0; i < result.matrix.dim(); ++i)
        for (int jj = 0; jj < result.matrix.dim(); ++jj) a_rows.push_back(result.matrix.entries(i, jj));
    j["matrix"] = {{"dim", result.matrix.dim()}, {"entries_row_major", a_rows}};
    j["trajectory"] = result.trajectory;
    j["gram_condition"] = result.gram_condition;
    j["rounds_executed"] = result.rounds_executed;
    return j.dump(2);
}

}  // namespace ipk
