#include "isoemb/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <string>

namespace isoemb::numerics {

namespace {

void require_finite(const Mat& m, const char* who) {
  if (!m.allFinite()) {
    throw NumericError(std::string(who) + ": input contains non-finite values");
  }
}

}  // namespace

SvdResult svd(const Mat& m) {
  require_finite(m, "svd");
  Eigen::BDCSVD<Mat> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) {
    throw NumericError("svd: decomposition did not converge");
  }
  SvdResult out;
  out.u = dec.matrixU();
  out.s = dec.singularValues();
  out.v = dec.matrixV();
  return out;
}

EigResult sym_eig(const Mat& m) {
  require_finite(m, "sym_eig");
  if (m.rows() != m.cols()) {
    throw NumericError("sym_eig: matrix is not square");
  }
  const double asym =
      m.size() == 0 ? 0.0 : (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9) {
    throw NumericError("sym_eig: matrix is not symmetric");
  }
  // Work on the exactly symmetrized matrix so tiny representation noise does
  // not leak into the decomposition.
  Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> dec(sym);
  if (dec.info() != Eigen::Success) {
    throw NumericError("sym_eig: decomposition did not converge");
  }
  EigResult out;
  out.values = dec.eigenvalues();  // ascending by Eigen's contract
  out.vectors = dec.eigenvectors();
  return out;
}

EigenvalueGrad eigenvalue_grad(const EigResult& eig, int index, double gap_tol) {
  const int n = static_cast<int>(eig.values.size());
  if (index < 0 || index >= n) {
    throw NumericError("eigenvalue_grad: index out of range");
  }
  EigenvalueGrad out;
  const Vec v = eig.vectors.col(index);
  out.grad = v * v.transpose();
  double gap = std::numeric_limits<double>::infinity();
  if (index > 0) gap = std::min(gap, eig.values[index] - eig.values[index - 1]);
  if (index + 1 < n) gap = std::min(gap, eig.values[index + 1] - eig.values[index]);
  out.degenerate = (n > 1 && gap < gap_tol);
  return out;
}

EigenvalueGrad eigenvalue_grad(const Mat& m, int index, double gap_tol) {
  return eigenvalue_grad(sym_eig(m), index, gap_tol);
}

double pearson(const Vec& a, const Vec& b) {
  return pearson_grad(a, b).r;
}

PearsonGrad pearson_grad(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw NumericError("pearson: length mismatch (" + std::to_string(a.size()) +
                       " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) {
    throw NumericError("pearson: need at least 2 samples");
  }
  if (!a.allFinite() || !b.allFinite()) {
    throw NumericError("pearson: input contains non-finite values");
  }
  const Vec ac = a.array() - a.mean();
  const Vec bc = b.array() - b.mean();
  const double p = ac.norm();
  const double q = bc.norm();
  if (p == 0.0 || q == 0.0) {
    throw NumericError("pearson: constant input has zero variance");
  }
  PearsonGrad out;
  out.r = ac.dot(bc) / (p * q);
  // d r / d a = bc/(p q) - r * ac / p^2; both terms are mean-free, so the
  // centering projection is already absorbed.
  out.da = bc / (p * q) - (out.r / (p * p)) * ac;
  return out;
}

double check_gradient(const std::function<double(const Mat&)>& f, const Mat& at,
                      const Mat& analytic, double h) {
  if (analytic.rows() != at.rows() || analytic.cols() != at.cols()) {
    throw NumericError("check_gradient: analytic gradient shape mismatch");
  }
  Mat probe = at;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < at.rows(); ++r) {
    for (Eigen::Index c = 0; c < at.cols(); ++c) {
      const double orig = probe(r, c);
      probe(r, c) = orig + h;
      const double fp = f(probe);
      probe(r, c) = orig - h;
      const double fm = f(probe);
      probe(r, c) = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        throw NumericError("check_gradient: function not finite near probe point");
      }
      const double fd = (fp - fm) / (2.0 * h);
      const double err = std::abs(fd - analytic(r, c)) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace isoemb::numerics
