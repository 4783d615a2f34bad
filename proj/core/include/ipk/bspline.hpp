#pragma once

#include <vector>

namespace ipk {

// Open-uniform (clamped) knot vector on [lo, hi]: the first and last knot
// are repeated degree+1 times and the interior knots are equally spaced.
struct KnotVector {
    int degree = 0;
    std::vector<double> knots;

    int basis_size() const { return static_cast<int>(knots.size()) - degree - 1; }
    double lo() const { return knots.front(); }
    double hi() const { return knots.back(); }
    // number of polynomial cells
    int spans() const { return basis_size() - degree; }
};

// Builds a clamped uniform knot vector with `basis_size` basis functions.
// Throws std::invalid_argument if basis_size < degree+1 or the domain is empty.
KnotVector build_knots(int degree, int basis_size, double lo, double hi);

// Evaluates the degree+1 basis functions that are nonzero at u (Cox-de Boor
// local window). u is clamped to [lo, hi]. Returns the index of the first
// nonzero basis function; `out` must hold degree+1 doubles.
int eval_basis_window(const KnotVector& kv, double u, double* out);

// Dense basis vector B_1(u),...,B_K(u). Entries are >= 0, at most degree+1
// are nonzero, and they sum to 1.
std::vector<double> eval_basis(const KnotVector& kv, double u);

struct SplineKernel {
    KnotVector knots;
    std::vector<double> theta;
};

double eval_spline(const SplineKernel& kernel, double u);

// Spline of degree P-1 whose value is the exact derivative of `kernel`.
// Throws std::invalid_argument for degree-0 kernels.
SplineKernel derivative_kernel(const SplineKernel& kernel);

double eval_spline_deriv(const SplineKernel& kernel, double u);

}  // namespace ipk
