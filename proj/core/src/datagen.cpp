#include "ipk/datagen.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ipk/rng.hpp"

namespace ipk {

double InteractionMatrix::op_norm() const {
    const int d = dim();
    if (d == 0) return 0.0;
    if (d == 1) return std::abs(entries(0, 0));
    // power iteration on A^T A
    Eigen::VectorXd v = Eigen::VectorXd::Ones(d).normalized();
    double sigma = 0.0;
    for (int it = 0; it < 1000; ++it) {
        Eigen::VectorXd w = entries.transpose() * (entries * v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        w /= norm;
        const double next = std::sqrt(norm);
        if (std::abs(next - sigma) <= 1e-6 * std::max(1.0, next)) return next;
        sigma = next;
        v = w;
    }
    return sigma;
}

InteractionMatrix InteractionMatrix::dense(Eigen::MatrixXd a, double bound) {
    InteractionMatrix m;
    m.entries = std::move(a);
    m.op_norm_bound = bound;
    return m;
}

InteractionMatrix InteractionMatrix::low_rank(Eigen::MatrixXd q, Eigen::MatrixXd k, double bound) {
    InteractionMatrix m;
    m.entries = q * k.transpose();
    m.op_norm_bound = bound;
    m.rank_bound = static_cast<int>(q.cols());
    m.factor_q = std::move(q);
    m.factor_k = std::move(k);
    return m;
}

TokenBatch sample_tokens(std::mt19937_64& rng, int samples, int tokens, int dim) {
    if (samples < 1 || dim < 1) throw std::invalid_argument("sample_tokens: samples and dim must be positive");
    if (tokens < 2) throw std::invalid_argument("sample_tokens: model needs at least 2 tokens");
    TokenBatch batch;
    batch.samples = samples;
    batch.tokens = tokens;
    batch.dim = dim;
    batch.data.resize(static_cast<std::size_t>(samples) * tokens * dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (auto& x : batch.data) x = rng::uniform01(rng) * scale;
    return batch;
}

GroundTruth sample_ground_truth(std::mt19937_64& rng, int dim, int degree, int basis_size,
                                MatrixScheme scheme, int rank) {
    if (basis_size < degree + 1)
        throw std::invalid_argument("sample_ground_truth: basis_size must be >= degree+1");
    GroundTruth truth;
    truth.degree = degree;
    truth.kernel.knots = build_knots(degree, basis_size, -1.0, 1.0);
    truth.kernel.theta.resize(basis_size);
    double norm2 = 0.0;
    for (auto& t : truth.kernel.theta) {
        t = rng::gaussian(rng);
        norm2 += t * t;
    }
    // ||theta|| = sqrt(K)
    const double scale = std::sqrt(static_cast<double>(basis_size) / norm2);
    for (auto& t : truth.kernel.theta) t *= scale;

    switch (scheme) {
        case MatrixScheme::Diagonal: {
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
            a(0, 0) = 1.0;
            for (int i = 1; i < dim; ++i) a(i, i) = 2.0 * rng::uniform01(rng) - 1.0;
            truth.matrix = InteractionMatrix::dense(std::move(a), 1.0);
            break;
        }
        case MatrixScheme::LowRank: {
            Eigen::MatrixXd q(dim, rank), k(dim, rank);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < rank; ++j) {
                    q(i, j) = rng::gaussian(rng);
                    k(i, j) = rng::gaussian(rng);
                }
            InteractionMatrix m = InteractionMatrix::low_rank(q, k, 1.0);
            const double norm = m.op_norm();
            if (norm > 0.0) {
                m.factor_q /= std::sqrt(norm);
                m.factor_k /= std::sqrt(norm);
                m.entries /= norm;
            }
            truth.matrix = std::move(m);
            break;
        }
    }
    return truth;
}

std::vector<double> forward_operator(const SplineKernel& kernel, const InteractionMatrix& matrix,
                                     const double* sample, int tokens, int dim) {
    if (tokens < 2) throw std::invalid_argument("forward_operator: needs at least 2 tokens");
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
        sample, tokens, dim);
    // scores(i, j) = x_i^T A x_j
    const Eigen::MatrixXd scores = x * matrix.entries * x.transpose();
    std::vector<double> out(tokens, 0.0);
    for (int i = 0; i < tokens; ++i) {
        double acc = 0.0;
        for (int j = 0; j < tokens; ++j)
            if (j != i) acc += eval_spline(kernel, scores(i, j));
        out[i] = acc / (tokens - 1);
    }
    return out;
}

Dataset generate_dataset(std::mt19937_64& rng, const GroundTruth& truth, int samples, int tokens,
                         int dim, double noise_sd) {
    if (noise_sd < 0.0) throw std::invalid_argument("generate_dataset: noise_sd must be >= 0");
    Dataset ds;
    ds.tokens = sample_tokens(rng, samples, tokens, dim);
    ds.noise_sd = noise_sd;
    ds.responses.resize(static_cast<std::size_t>(samples) * tokens);
    for (int m = 0; m < samples; ++m) {
        const auto clean = forward_operator(truth.kernel, truth.matrix, ds.tokens.token(m, 0), tokens, dim);
        for (int i = 0; i < tokens; ++i) {
            double y = clean[i];
            if (noise_sd > 0.0) y += noise_sd * rng::gaussian(rng);
            ds.responses[static_cast<std::size_t>(m) * tokens + i] = y;
        }
    }
    return ds;
}

namespace {

void print_double(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

void write_dataset_csv(const Dataset& ds, std::ostream& os) {
    os << "m,i,y";
    for (int k = 0; k < ds.tokens.dim; ++k) os << ",x" << k;
    os << "\n";
    for (int m = 0; m < ds.tokens.samples; ++m)
        for (int i = 0; i < ds.tokens.tokens; ++i) {
            os << m << ',' << i << ',';
            print_double(os, ds.response(m, i));
            const double* x = ds.tokens.token(m, i);
            for (int k = 0; k < ds.tokens.dim; ++k) {
                os << ',';
                print_double(os, x[k]);
            }
            os << "\n";
        }
}

Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("dataset csv: empty stream");
    int dim = -2;  // columns after m,i,y
    for (char c : line)
        if (c == ',') ++dim;
    if (dim < 1) throw std::runtime_error("dataset csv: bad header");

    std::vector<double> ys;
    std::vector<double> coords;
    int max_m = -1, max_i = -1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        const int m = std::stoi(field);
        std::getline(ss, field, ',');
        const int i = std::stoi(field);
        std::getline(ss, field, ',');
        ys.push_back(std::stod(field));
        for (int k = 0; k < dim; ++k) {
            std::getline(ss, field, ',');
            coords.push_back(std::stod(field));
        }
        max_m = std::max(max_m, m);
        max_i = std::max(max_i, i);
    }
    Dataset ds;
    ds.tokens.samples = max_m + 1;
    ds.tokens.tokens = max_i + 1;
    ds.tokens.dim = dim;
    ds.tokens.data = std::move(coords);
    ds.responses = std::move(ys);
    if (ds.responses.size() != static_cast<std::size_t>(ds.tokens.samples) * ds.tokens.tokens)
        throw std::runtime_error("dataset csv: incomplete grid of (m, i) rows");
    return ds;
}

namespace {
constexpr char kMagic[8] = {'I', 'P', 'K', 'D', 'S', 'E', 'T', '1'};
}

void write_dataset_binary(const Dataset& ds, std::ostream& os) {
    os.write(kMagic, sizeof(kMagic));
    const std::int64_t header[3] = {ds.tokens.samples, ds.tokens.tokens, ds.tokens.dim};
    os.write(reinterpret_cast<const char*>(header), sizeof(header));
    os.write(reinterpret_cast<const char*>(&ds.noise_sd), sizeof(double));
    os.write(reinterpret_cast<const char*>(&ds.seed), sizeof(std::uint64_t));
    os.write(reinterpret_cast<const char*>(ds.responses.data()),
             static_cast<std::streamsize>(ds.responses.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(ds.tokens.data.data()),
             static_cast<std::streamsize>(ds.tokens.data.size() * sizeof(double)));
}

Dataset read_dataset_binary(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw std::runtime_error("dataset binary: bad magic/version");
    std::int64_t header[3];
    is.read(reinterpret_cast<char*>(header), sizeof(header));
    Dataset ds;
    ds.tokens.samples = static_cast<int>(header[0]);
    ds.tokens.tokens = static_cast<int>(header[1]);
    ds.tokens.dim = static_cast<int>(header[2]);
    is.read(reinterpret_cast<char*>(&ds.noise_sd), sizeof(double));
    is.read(reinterpret_cast<char*>(&ds.seed), sizeof(std::uint64_t));
    ds.responses.resize(static_cast<std::size_t>(ds.tokens.samples) * ds.tokens.tokens);
    ds.tokens.data.resize(ds.responses.size() * ds.tokens.dim);
    is.read(reinterpret_cast<char*>(ds.responses.data()),
            static_cast<std::streamsize>(ds.responses.size() * sizeof(double)));
    is.read(reinterpret_cast<char*>(ds.tokens.data.data()),
            static_cast<std::streamsize>(ds.tokens.data.size() * sizeof(double)));
    if (!is) throw std::runtime_error("dataset binary: truncated stream");
    return ds;
}

}  // namespace ipk
