#include "ipk/theory.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <stdexcept>

#include "ipk/rng.hpp"

namespace ipk::theory {

namespace {
// node count shared by l2_separation and bump_psi_l2_squared, so that the
// separation bound and its target are computed under the same quadrature rule
constexpr int kQuadNodes = 256;
}  // namespace

double DensityEstimate::density_at(double u) const {
    if (u < edges.front() || u > edges.back()) return 0.0;
    const auto it = std::upper_bound(edges.begin(), edges.end(), u);
    int b = static_cast<int>(it - edges.begin()) - 1;
    b = std::clamp(b, 0, bins() - 1);
    return density(b);
}

DensityEstimate estimate_pU(const TokenBatch& tokens, const InteractionMatrix& matrix, int bins) {
    if (bins < 2) throw std::invalid_argument("estimate_pU: need at least 2 bins");
    const int m_count = tokens.samples;
    const int n = tokens.tokens;
    const int d = tokens.dim;
    const std::int64_t pairs = static_cast<std::int64_t>(m_count) * n * (n - 1);
    if (pairs < 10LL * bins)
        throw std::invalid_argument("estimate_pU: need at least 10 off-diagonal pairs per bin");

    const double a_bar = matrix.op_norm_bound;
    DensityEstimate est;
    est.edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b)
        est.edges[b] = -a_bar + 2.0 * a_bar * static_cast<double>(b) / bins;
    est.masses.assign(bins, 0.0);
    est.sample_count = pairs;

    for (int m = 0; m < m_count; ++m) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
            tokens.token(m, 0), n, d);
        const Eigen::MatrixXd scores = x * matrix.entries * x.transpose();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double u = std::clamp(scores(i, j), -a_bar, a_bar);
                int b = static_cast<int>((u + a_bar) / (2.0 * a_bar) * bins);
                b = std::clamp(b, 0, bins - 1);
                est.masses[b] += 1.0;
            }
    }
    for (auto& mass : est.masses) mass /= static_cast<double>(pairs);
    return est;
}

double bump_psi(double u) {
    const double q = 2.0 * u;
    if (std::abs(u) >= 0.5) return 0.0;
    return std::exp(-1.0 / (1.0 - q * q));
}

double bump_psi_l2_squared() {
    // composite midpoint over [-1, 1] with the shared node count
    static const double value = [] {
        double acc = 0.0;
        for (int i = 0; i < kQuadNodes; ++i) {
            const double v = -1.0 + (i + 0.5) * (2.0 / kQuadNodes);
            const double p = bump_psi(v);
            acc += p * p;
        }
        return acc * (2.0 / kQuadNodes);
    }();
    return value;
}

double HypothesisSet::eval_hypothesis(int k, double u) const {
    const auto& word = codebook.at(k);
    for (int l = 0; l < interval_count(); ++l) {
        if (!word[l]) continue;
        if (std::abs(u - centers[l]) < half_width)
            return amplitude * bump_psi((u - centers[l]) / half_width);
    }
    return 0.0;
}

std::vector<std::vector<std::uint8_t>> vg_codebook(int k_bar, int target_count,
                                                   std::mt19937_64& rng) {
    if (k_bar < 8) throw std::invalid_argument("vg_codebook: need word length >= 8");
    const int floor_dist = (k_bar + 7) / 8;
    if (target_count < 1) throw std::invalid_argument("vg_codebook: target_count must be >= 1");
    const double capacity = std::pow(2.0, static_cast<double>((k_bar + 7) / 8));
    if (static_cast<double>(target_count) > capacity)
        throw std::invalid_argument("vg_codebook: target_count exceeds 2^ceil(K/8)");

    std::vector<std::vector<std::uint8_t>> words;
    words.emplace_back(k_bar, std::uint8_t{0});
    int budget = 10000;
    std::vector<std::uint8_t> candidate(k_bar);
    while (static_cast<int>(words.size()) < target_count && budget-- > 0) {
        for (auto& bit : candidate) bit = static_cast<std::uint8_t>(rng() & 1u);
        bool ok = true;
        for (const auto& w : words) {
            int dist = 0;
            for (int i = 0; i < k_bar; ++i) dist += (w[i] != candidate[i]);
            if (dist < floor_dist) {
                ok = false;
                break;
            }
        }
        if (ok) words.push_back(candidate);
    }
    if (static_cast<int>(words.size()) < target_count)
        throw std::runtime_error("vg_codebook: retry budget exhausted; lower target_count");
    return words;
}

HypothesisSet build_hypotheses(const DensityEstimate& density, int samples, int tokens, double beta,
                               const HypothesisConstants& constants) {
    const int bins = density.bins();
    const double a_bar = std::max(std::abs(density.edges.front()), std::abs(density.edges.back()));

    double mean_density = 0.0;
    double sup_density = 0.0;
    for (int b = 0; b < bins; ++b) {
        mean_density += density.density(b);
        sup_density = std::max(sup_density, density.density(b));
    }
    mean_density /= bins;
    const double floor = constants.level_floor.value_or(0.5 * mean_density);
    if (floor <= 0.0 || floor >= sup_density)
        throw std::invalid_argument("build_hypotheses: level floor must lie in (0, max density)");

    // maximal runs of bins above the floor
    struct Run {
        double lo, hi;
        double length() const { return hi - lo; }
    };
    std::vector<Run> runs;
    for (int b = 0; b < bins;) {
        if (density.density(b) > floor) {
            int e = b;
            while (e < bins && density.density(e) > floor) ++e;
            runs.push_back({density.edges[b], density.edges[e]});
            b = e;
        } else {
            ++b;
        }
    }
    if (runs.empty()) throw std::runtime_error("build_hypotheses: super-level set is empty");
    std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.length() > b.length(); });
    const double total_length =
        std::accumulate(runs.begin(), runs.end(), 0.0, [](double acc, const Run& r) { return acc + r.length(); });

    double l0 = (1.0 - 2.0 * a_bar * floor) / (sup_density - floor);
    l0 = std::clamp(l0, 1e-12, total_length);
    int n0 = 0;
    double covered = 0.0;
    while (n0 < static_cast<int>(runs.size()) && covered <= 0.5 * l0) covered += runs[n0++].length();

    const double exponent = 1.0 / (2.0 * beta + 1.0);
    int k_bar;
    double c0n;
    if (constants.interval_count) {
        k_bar = *constants.interval_count;
        c0n = k_bar / std::pow(static_cast<double>(samples), exponent);
    } else {
        const double c0 = constants.c0.value_or(1.0);
        c0n = c0 * std::pow(static_cast<double>(tokens), exponent);
        k_bar = static_cast<int>(std::ceil(c0n * std::pow(static_cast<double>(samples), exponent)));
    }
    if (k_bar < 8) throw std::invalid_argument("build_hypotheses: interval count below 8");

    const double h = l0 / (8.0 * n0 * k_bar);

    HypothesisSet set;
    set.half_width = h;
    set.beta = beta;
    set.holder_l = constants.holder_l;
    set.amplitude = constants.holder_l * std::pow(h, beta);
    set.level_floor = floor;
    set.level_sup = sup_density;
    set.run_length_budget = l0;
    set.run_count = n0;
    set.c0n = c0n;
    for (const auto& run : runs) {
        const int count = static_cast<int>(std::floor(run.length() / (2.0 * h)));
        for (int l = 1; l <= count && set.interval_count() < k_bar; ++l)
            set.centers.push_back(run.lo + (2.0 * l - 1.0) * h);
        if (set.interval_count() >= k_bar) break;
    }
    if (set.interval_count() < k_bar)
        throw std::runtime_error("build_hypotheses: infeasible packing; reduce the interval count or c0");
    std::sort(set.centers.begin(), set.centers.end());

    const double c1 = std::sqrt(floor) * constants.holder_l * std::sqrt(bump_psi_l2_squared()) /
                      (4.0 * std::sqrt(2.0)) * std::pow(l0 / (8.0 * n0), beta + 0.5);
    const double s = c1 * std::pow(c0n, -beta) * std::pow(static_cast<double>(samples), -beta * exponent);
    set.separation_target = 2.0 * s;

    auto g = rng::substream(constants.codebook_seed, static_cast<std::uint64_t>(rng::Role::Theory));
    set.codebook = vg_codebook(k_bar, constants.target_codewords, g);
    return set;
}

double l2_separation(const HypothesisSet& set, int k, int k_prime, const DensityEstimate& density) {
    if (k == k_prime) return 0.0;
    const auto& wa = set.codebook.at(k);
    const auto& wb = set.codebook.at(k_prime);
    // bumps live on disjoint intervals, so only differing intervals contribute
    double acc = 0.0;
    const double h = set.half_width;
    for (int l = 0; l < set.interval_count(); ++l) {
        if (wa[l] == wb[l]) continue;
        const double lo = set.centers[l] - h;
        const double step = 2.0 * h / kQuadNodes;
        double part = 0.0;
        for (int i = 0; i < kQuadNodes; ++i) {
            const double u = lo + (i + 0.5) * step;
            const double v = set.amplitude * bump_psi((u - set.centers[l]) / h);
            part += v * v * density.density_at(u);
        }
        acc += part * step;
    }
    return std::sqrt(acc);
}

double kl_budget(const HypothesisSet& set, int k, const TokenBatch& tokens,
                 const InteractionMatrix& matrix, double noise_sd) {
    if (noise_sd <= 0.0) throw std::invalid_argument("kl_budget: need positive noise sd");
    const int m_count = tokens.samples;
    const int n = tokens.tokens;
    const int d = tokens.dim;
    double acc = 0.0;
    for (int m = 0; m < m_count; ++m) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
            tokens.token(m, 0), n, d);
        const Eigen::MatrixXd scores = x * matrix.entries * x.transpose();
        for (int i = 0; i < n; ++i) {
            double r = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != i) r += set.eval_hypothesis(k, scores(i, j));
            r /= (n - 1);
            acc += r * r;
        }
    }
    return acc / (2.0 * noise_sd * noise_sd);
}

CoercivityResult coercivity_check(const SplineKernel& g_kernel, const InteractionMatrix& g_matrix,
                                  const SplineKernel& gs_kernel, const InteractionMatrix& gs_matrix,
                                  const TokenBatch& tokens) {
    const int m_count = tokens.samples;
    const int n = tokens.tokens;
    const int d = tokens.dim;
    double sum = 0.0, sum_sq = 0.0, lhs_acc = 0.0, rhs_acc = 0.0;
    for (int m = 0; m < m_count; ++m) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
            tokens.token(m, 0), n, d);
        const Eigen::MatrixXd s_g = x * g_matrix.entries * x.transpose();
        const Eigen::MatrixXd s_gs = x * gs_matrix.entries * x.transpose();
        double pair_sq = 0.0;
        double op_sq = 0.0;
        for (int i = 0; i < n; ++i) {
            double row = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double delta = eval_spline(g_kernel, s_g(i, j)) - eval_spline(gs_kernel, s_gs(i, j));
                pair_sq += delta * delta;
                row += delta;
            }
            row /= (n - 1);
            op_sq += row * row;
        }
        const double lhs_m = pair_sq / (static_cast<double>(n) * (n - 1) * (n - 1));
        const double rhs_m = op_sq / n;
        lhs_acc += lhs_m;
        rhs_acc += rhs_m;
        const double margin_m = rhs_m - lhs_m;
        sum += margin_m;
        sum_sq += margin_m * margin_m;
    }
    CoercivityResult res;
    res.lhs = lhs_acc / m_count;
    res.rhs = rhs_acc / m_count;
    res.margin = sum / m_count;
    const double var = std::max(0.0, sum_sq / m_count - res.margin * res.margin);
    res.margin_se = std::sqrt(var / m_count);
    return res;
}

std::string theory_report_to_json(const TheoryReport& report) {
    nlohmann::json j;
    j["density"] = {{"bins", report.density.bins()},
                    {"sample_count", report.density.sample_count},
                    {"edges", report.density.edges},
                    {"masses", report.density.masses}};
    j["hypotheses"] = {{"interval_count", report.hypotheses.interval_count()},
                       {"half_width", report.hypotheses.half_width},
                       {"amplitude", report.hypotheses.amplitude},
                       {"beta", report.hypotheses.beta},
                       {"holder_l", report.hypotheses.holder_l},
                       {"level_floor", report.hypotheses.level_floor},
                       {"level_sup", report.hypotheses.level_sup},
                       {"run_length_budget", report.hypotheses.run_length_budget},
                       {"run_count", report.hypotheses.run_count},
                       {"separation_target", report.hypotheses.separation_target},
                       {"codewords", report.hypotheses.codebook.size()},
                       {"centers", report.hypotheses.centers}};
    auto& words = j["hypotheses"]["codebook"] = nlohmann::json::array();
    for (const auto& w : report.hypotheses.codebook) {
        std::string bits(w.size(), '0');
        for (std::size_t i = 0; i < w.size(); ++i) bits[i] = w[i] ? '1' : '0';
        words.push_back(bits);
    }
    j["min_separation"] = report.min_separation;
    j["max_kl"] = report.max_kl;
    j["mean_kl"] = report.mean_kl;
    j["kl_alpha"] = report.kl_alpha;
    j["coercivity"] = nlohmann::json::array();
    for (const auto& c : report.coercivity)
        j["coercivity"].push_back(
            {{"lhs", c.lhs}, {"rhs", c.rhs}, {"margin", c.margin}, {"margin_se", c.margin_se}});
    return j.dump(2);
}

}  // namespace ipk::theory
