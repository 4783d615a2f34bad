#include "ipk/bspline.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace ipk {

KnotVector build_knots(int degree, int basis_size, double lo, double hi) {
    if (degree < 0) throw std::invalid_argument("build_knots: degree must be >= 0");
    if (basis_size < degree + 1)
        throw std::invalid_argument("build_knots: basis_size must be >= degree+1");
    if (!(lo < hi)) throw std::invalid_argument("build_knots: empty domain");

    KnotVector kv;
    kv.degree = degree;
    kv.knots.reserve(basis_size + degree + 1);
    const int spans = basis_size - degree;
    for (int i = 0; i <= degree; ++i) kv.knots.push_back(lo);
    for (int i = 1; i < spans; ++i)
        kv.knots.push_back(lo + (hi - lo) * static_cast<double>(i) / spans);
    for (int i = 0; i <= degree; ++i) kv.knots.push_back(hi);
    return kv;
}

namespace {

// Knot span containing u; u must already be clamped to [lo, hi].
int find_span(const KnotVector& kv, double u) {
    const int p = kv.degree;
    const int k = kv.basis_size();
    if (u >= kv.knots[k]) return k - 1;  // right boundary belongs to the last span
    // binary search over spans [p, k-1]
    int low = p, high = k;
    int mid = (low + high) / 2;
    while (u < kv.knots[mid] || u >= kv.knots[mid + 1]) {
        if (u < kv.knots[mid])
            high = mid;
        else
            low = mid;
        mid = (low + high) / 2;
    }
    return mid;
}

}  // namespace

int eval_basis_window(const KnotVector& kv, double u, double* out) {
    const int p = kv.degree;
    u = std::clamp(u, kv.lo(), kv.hi());
    const int span = find_span(kv, u);

    // Cox-de Boor recursion restricted to the nonzero window (NURBS book A2.2).
    out[0] = 1.0;
    std::vector<double> left(p + 1), right(p + 1);
    for (int j = 1; j <= p; ++j) {
        left[j] = u - kv.knots[span + 1 - j];
        right[j] = kv.knots[span + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        out[j] = saved;
    }
    return span - p;
}

std::vector<double> eval_basis(const KnotVector& kv, double u) {
    std::vector<double> dense(kv.basis_size(), 0.0);
    std::vector<double> window(kv.degree + 1);
    const int first = eval_basis_window(kv, u, window.data());
    for (int j = 0; j <= kv.degree; ++j) dense[first + j] = window[j];
    return dense;
}

double eval_spline(const SplineKernel& kernel, double u) {
    const int p = kernel.knots.degree;
    std::vector<double> window(p + 1);
    const int first = eval_basis_window(kernel.knots, u, window.data());
    double v = 0.0;
    for (int j = 0; j <= p; ++j) v += kernel.theta[first + j] * window[j];
    return v;
}

SplineKernel derivative_kernel(const SplineKernel& kernel) {
    const int p = kernel.knots.degree;
    if (p < 1)
        throw std::invalid_argument("derivative_kernel: degree-0 splines have no usable derivative");
    const auto& t = kernel.knots.knots;
    const int k = kernel.knots.basis_size();

    SplineKernel deriv;
    deriv.knots.degree = p - 1;
    deriv.knots.knots.assign(t.begin() + 1, t.end() - 1);
    deriv.theta.resize(k - 1);
    for (int i = 0; i + 1 < k; ++i) {
        const double span = t[i + p + 1] - t[i + 1];
        deriv.theta[i] = span > 0.0 ? p * (kernel.theta[i + 1] - kernel.theta[i]) / span : 0.0;
    }
    return deriv;
}

double eval_spline_deriv(const SplineKernel& kernel, double u) {
    return eval_spline(derivative_kernel(kernel), u);
}

}  // namespace ipk
