#pragma once

#include <functional>

#include "isoemb/types.hpp"

namespace isoemb::numerics {

// Thin singular value decomposition: m == u * s.asDiagonal() * v.transpose(),
// with u (rows x r) and v (cols x r) having orthonormal columns and s sorted
// in descending order, r = min(rows, cols). Throws NumericError on non-finite
// input.
struct SvdResult {
  Mat u;
  Vec s;
  Mat v;
};
SvdResult svd(const Mat& m);

// Eigendecomposition of a symmetric matrix: values ascending, vectors stored
// as columns (orthonormal). Throws NumericError if the input is not finite or
// not symmetric (beyond a small absolute/relative tolerance).
struct EigResult {
  Vec values;   // ascending
  Mat vectors;  // column i pairs with values[i]
};
EigResult sym_eig(const Mat& m);

// Gradient of the index-th smallest eigenvalue of a symmetric matrix with
// respect to the matrix entries: v v^T for unit eigenvector v. The gradient is
// only well defined for simple eigenvalues; `degenerate` is set when the gap
// to a neighbouring eigenvalue is below `gap_tol`, in which case callers
// should discard the gradient for this step.
struct EigenvalueGrad {
  Mat grad;
  bool degenerate = false;
};
EigenvalueGrad eigenvalue_grad(const Mat& m, int index, double gap_tol = 1e-8);
// Same computation given an existing decomposition (avoids re-solving).
EigenvalueGrad eigenvalue_grad(const EigResult& eig, int index, double gap_tol = 1e-8);

// Pearson correlation of two equally long lists. Throws NumericError on
// length mismatch, lists shorter than 2, or zero variance in either list.
double pearson(const Vec& a, const Vec& b);

// Pearson correlation together with its gradient with respect to `a`.
struct PearsonGrad {
  double r = 0.0;
  Vec da;
};
PearsonGrad pearson_grad(const Vec& a, const Vec& b);

// Central-difference gradient check: perturbs every entry of `at` by +-h,
// compares the finite-difference slope against `analytic`, and returns the
// maximum relative error |fd - analytic| / max(1, |fd|) over all entries.
double check_gradient(const std::function<double(const Mat&)>& f, const Mat& at,
                      const Mat& analytic, double h = 1e-5);

}  // namespace isoemb::numerics
