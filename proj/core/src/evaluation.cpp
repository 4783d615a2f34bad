#include "ipk/evaluation.hpp"

#include <cmath>
#include <json.hpp>
#include <ostream>
#include <stdexcept>

namespace ipk {

double composed_mse(const SplineKernel& fit_kernel, const InteractionMatrix& fit_matrix,
                    const GroundTruth& truth, const TokenBatch& test_tokens) {
    const int m_count = test_tokens.samples;
    const int n = test_tokens.tokens;
    double acc = 0.0;
    for (int m = 0; m < m_count; ++m) {
        const auto est = forward_operator(fit_kernel, fit_matrix, test_tokens.token(m, 0), n,
                                          test_tokens.dim);
        const auto ref = forward_operator(truth.kernel, truth.matrix, test_tokens.token(m, 0), n,
                                          test_tokens.dim);
        for (int i = 0; i < n; ++i) {
            const double e = est[i] - ref[i];
            acc += e * e;
        }
    }
    return acc / (static_cast<double>(m_count) * n);
}

double pairwise_l2(const SplineKernel& fit_kernel, const InteractionMatrix& fit_matrix,
                   const GroundTruth& truth, const TokenBatch& test_tokens) {
    const int m_count = test_tokens.samples;
    const int n = test_tokens.tokens;
    const int d = test_tokens.dim;
    double acc = 0.0;
    for (int m = 0; m < m_count; ++m) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
            test_tokens.token(m, 0), n, d);
        const Eigen::MatrixXd fit_scores = x * fit_matrix.entries * x.transpose();
        const Eigen::MatrixXd ref_scores = x * truth.matrix.entries * x.transpose();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double e =
                    eval_spline(fit_kernel, fit_scores(i, j)) - eval_spline(truth.kernel, ref_scores(i, j));
                acc += e * e;
            }
    }
    return acc / (static_cast<double>(m_count) * n * (n - 1));
}

SlopeFit rate_slope(const std::vector<std::pair<double, double>>& points) {
    std::vector<double> distinct;
    for (const auto& [m, err] : points) {
        if (err <= 0.0) throw std::invalid_argument("rate_slope: errors must be positive");
        if (std::find(distinct.begin(), distinct.end(), m) == distinct.end()) distinct.push_back(m);
    }
    if (distinct.size() < 3)
        throw std::invalid_argument("rate_slope: need at least 3 distinct sample sizes");

    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double count = static_cast<double>(points.size());
    for (const auto& [m, err] : points) {
        const double lx = std::log(m), ly = std::log(err);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    SlopeFit fitres;
    const double vxx = sxx - sx * sx / count;
    const double vxy = sxy - sx * sy / count;
    const double vyy = syy - sy * sy / count;
    fitres.slope = vxy / vxx;
    fitres.intercept = (sy - fitres.slope * sx) / count;
    fitres.r_squared = vyy > 0.0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
    return fitres;
}

double theoretical_slope(double beta) {
    if (beta <= 0.0) throw std::invalid_argument("theoretical_slope: beta must be positive");
    return -2.0 * beta / (2.0 * beta + 1.0);
}

void write_report_csv(const RateStudyReport& report, std::ostream& os) {
    os << "d,M,N,beta,seed,composed_mse,pairwise_l2,wall_s\n";
    char buf[160];
    for (const auto& r : report.records) {
        if (r.failed) continue;
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g,%llu,%.17g,%.17g,%.6f\n", r.dim, r.samples,
                      r.tokens, r.beta, static_cast<unsigned long long>(r.seed), r.composed_mse,
                      r.pairwise_l2, r.wall_seconds);
        os << buf;
    }
}

std::string report_to_json(const RateStudyReport& report) {
    nlohmann::json j;
    j["records"] = nlohmann::json::array();
    for (const auto& r : report.records) {
        nlohmann::json rec = {{"d", r.dim},
                              {"M", r.samples},
                              {"N", r.tokens},
                              {"beta", r.beta},
                              {"seed", r.seed},
                              {"composed_mse", r.composed_mse},
                              {"pairwise_l2", r.pairwise_l2},
                              {"wall_s", r.wall_seconds},
                              {"failed", r.failed}};
        if (r.failed) rec["error"] = r.error;
        j["records"].push_back(rec);
    }
    j["series"] = nlohmann::json::array();
    for (const auto& s : report.series) {
        j["series"].push_back({{"d", s.dim},
                               {"beta", s.beta},
                               {"M", s.sample_sizes},
                               {"median_composed_mse", s.median_composed_mse},
                               {"q1_composed_mse", s.q1_composed_mse},
                               {"q3_composed_mse", s.q3_composed_mse},
                               {"slope", s.slope.slope},
                               {"intercept", s.slope.intercept},
                               {"r_squared", s.slope.r_squared},
                               {"theoretical_slope", s.theoretical_slope}});
    }
    return j.dump(2);
}

RateStudyReport report_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    RateStudyReport report;
    for (const auto& rec : j.at("records")) {
        ErrorRecord r;
        r.dim = rec.at("d");
        r.samples = rec.at("M");
        r.tokens = rec.at("N");
        r.beta = rec.at("beta");
        r.seed = rec.at("seed");
        r.composed_mse = rec.at("composed_mse");
        r.pairwise_l2 = rec.at("pairwise_l2");
        r.wall_seconds = rec.at("wall_s");
        r.failed = rec.value("failed", false);
        report.records.push_back(std::move(r));
    }
    for (const auto& s : j.at("series")) {
        RateStudyReport::Series series;
        series.dim = s.at("d");
        series.beta = s.at("beta");
        series.sample_sizes = s.at("M").get<std::vector<int>>();
        series.median_composed_mse = s.at("median_composed_mse").get<std::vector<double>>();
        series.q1_composed_mse = s.at("q1_composed_mse").get<std::vector<double>>();
        series.q3_composed_mse = s.at("q3_composed_mse").get<std::vector<double>>();
        series.slope.slope = s.at("slope");
        series.slope.intercept = s.at("intercept");
        series.slope.r_squared = s.at("r_squared");
        series.theoretical_slope = s.at("theoretical_slope");
        report.series.push_back(std::move(series));
    }
    return report;
}

}  // namespace ipk
