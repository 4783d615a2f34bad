#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ipk/bspline.hpp"
#include "ipk/datagen.hpp"

namespace ipk::theory {

// Histogram of the bilinear scores x_i^T A x_j over off-diagonal pairs,
// normalized to a probability vector on [-a_bar, a_bar].
struct DensityEstimate {
    std::vector<double> edges;   // bins + 1, strictly increasing
    std::vector<double> masses;  // sum to 1
    std::int64_t sample_count = 0;

    int bins() const { return static_cast<int>(masses.size()); }
    double bin_width(int b) const { return edges[b + 1] - edges[b]; }
    double density(int b) const { return masses[b] / bin_width(b); }
    // piecewise-constant density at u (0 outside the domain)
    double density_at(double u) const;
};

DensityEstimate estimate_pU(const TokenBatch& tokens, const InteractionMatrix& matrix, int bins);

// Smooth compactly supported bump exp(-1/(1-(2u)^2)) on |u| <= 1/2.
double bump_psi(double u);

// ||psi||_2^2 and ||psi||_inf, computed once by quadrature / at the peak.
double bump_psi_l2_squared();
inline double bump_psi_sup() { return bump_psi(0.0); }

// Family of separated hypothesis perturbations: disjoint intervals of
// half-width h packed into the super-level set of the density, a scaled bump
// on each, and a binary codebook selecting which bumps each hypothesis turns
// on.
struct HypothesisSet {
    std::vector<double> centers;  // interval centers r_l, size K_bar
    double half_width = 0.0;      // h_M
    double amplitude = 0.0;       // L h_M^beta
    double beta = 0.0;
    double holder_l = 0.0;        // L
    std::vector<std::vector<std::uint8_t>> codebook;  // words of length K_bar
    // constants of the construction, computed from the density estimate
    double level_floor = 0.0;     // a_0 underline
    double level_sup = 0.0;       // a_0 = max density
    double run_length_budget = 0.0;  // L_0
    int run_count = 0;               // n_0
    double separation_target = 0.0;  // 2 s_{N,M}
    double c0n = 0.0;

    int interval_count() const { return static_cast<int>(centers.size()); }
    // phi_k(u) = sum_l word_l * amplitude * psi((u - r_l)/h)
    double eval_hypothesis(int k, double u) const;
};

struct HypothesisConstants {
    double holder_l = 1.0;                 // L
    std::optional<double> level_floor;     // default: half the mean bin density
    std::optional<int> interval_count;     // explicit K_bar override
    std::optional<double> c0;              // C_0 when K_bar is derived from M
    int target_codewords = 16;
    std::uint64_t codebook_seed = 0;
};

// Packs K_bar disjoint intervals into maximal runs of bins whose density
// exceeds the floor, with h = L_0 / (8 n_0 K_bar), and attaches a codebook
// with pairwise Hamming distance >= ceil(K_bar/8). Throws when the
// super-level region cannot host K_bar intervals.
HypothesisSet build_hypotheses(const DensityEstimate& density, int samples, int tokens, double beta,
                               const HypothesisConstants& constants);

// Binary words of length k_bar including the all-zeros word, with pairwise
// Hamming distance >= ceil(k_bar/8); randomized greedy with a bounded retry
// budget.
std::vector<std::vector<std::uint8_t>> vg_codebook(int k_bar, int target_count,
                                                   std::mt19937_64& rng);

// L^2 distance of hypotheses k and k' against the density estimate, composite
// midpoint quadrature with >= 64 nodes per interval.
double l2_separation(const HypothesisSet& set, int k, int k_prime, const DensityEstimate& density);

// Exact conditional KL for Gaussian shifts:
// (1 / (2 sigma^2)) sum_m ||R_{phi_k}[X^m]||^2 with the (1/(N-1))-normalized
// operator and scores taken through `matrix`.
double kl_budget(const HypothesisSet& set, int k, const TokenBatch& tokens,
                 const InteractionMatrix& matrix, double noise_sd);

// Monte-Carlo check of the coercivity inequality
// (1/(N-1)) ||g - g*||^2_{L2_rho} <= E_inf(g) - E_inf(g*).
struct CoercivityResult {
    double lhs = 0.0;     // (1/(N-1)) pairwise L2 of the difference
    double rhs = 0.0;     // (1/N) E ||R_{g-g*}[X]||^2
    double margin = 0.0;  // rhs - lhs
    double margin_se = 0.0;
};
CoercivityResult coercivity_check(const SplineKernel& g_kernel, const InteractionMatrix& g_matrix,
                                  const SplineKernel& gs_kernel, const InteractionMatrix& gs_matrix,
                                  const TokenBatch& tokens);

// JSON report: density summary, packing geometry, min separation, KL budget,
// coercivity margins.
struct TheoryReport {
    DensityEstimate density;
    HypothesisSet hypotheses;
    double min_separation = 0.0;
    double max_kl = 0.0;
    double mean_kl = 0.0;
    double kl_alpha = 0.0;  // mean KL / log(#codewords)
    std::vector<CoercivityResult> coercivity;
};
std::string theory_report_to_json(const TheoryReport& report);

}  // namespace ipk::theory
