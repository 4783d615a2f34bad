#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ipk/datagen.hpp"
#include "ipk/estimator.hpp"

namespace ipk {

struct ErrorRecord {
    int dim = 0;
    int samples = 0;  // M
    int tokens = 0;   // N
    double beta = 0.0;
    std::uint64_t seed = 0;
    double composed_mse = 0.0;
    double pairwise_l2 = 0.0;
    double wall_seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

struct RateStudyReport {
    std::vector<ErrorRecord> records;
    // one fitted slope per (dim, beta) series, on medians across seeds
    struct Series {
        int dim;
        double beta;
        std::vector<int> sample_sizes;
        std::vector<double> median_composed_mse;
        std::vector<double> q1_composed_mse;
        std::vector<double> q3_composed_mse;
        SlopeFit slope;
        double theoretical_slope;
    };
    std::vector<Series> series;
};

// Average over test samples and rows of |R_ghat[X]_i - R_gstar[X]_i|^2, both
// operators (1/(N-1))-normalized.
double composed_mse(const SplineKernel& fit_kernel, const InteractionMatrix& fit_matrix,
                    const GroundTruth& truth, const TokenBatch& test_tokens);

// Average of |ghat(X_i, X_j) - gstar(X_i, X_j)|^2 over all off-diagonal pairs
// of all test samples; Monte-Carlo integration against the empirical
// exploration measure. Always >= composed_mse by Jensen.
double pairwise_l2(const SplineKernel& fit_kernel, const InteractionMatrix& fit_matrix,
                   const GroundTruth& truth, const TokenBatch& test_tokens);

// OLS of log(error) on log(M); needs >= 3 distinct sample sizes and positive
// errors.
SlopeFit rate_slope(const std::vector<std::pair<double, double>>& points);

// -2 beta / (2 beta + 1)
double theoretical_slope(double beta);

void write_report_csv(const RateStudyReport& report, std::ostream& os);
std::string report_to_json(const RateStudyReport& report);
RateStudyReport report_from_json(const std::string& text);

}  // namespace ipk
