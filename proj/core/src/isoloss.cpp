#include "isoemb/isoloss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "isoemb/numerics.hpp"

namespace isoemb::isoloss {

namespace {

void require_same_shape(const Mat& x, const Mat& y, const char* who) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DataError(std::string(who) + ": shape mismatch (" +
                    std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                    " vs " + std::to_string(y.rows()) + "x" +
                    std::to_string(y.cols()) + ")");
  }
}

// Row-normalized copy plus the original row norms.
struct NormalizedRows {
  Mat unit;
  Vec norms;
};

NormalizedRows normalize_rows(const Mat& rows) {
  NormalizedRows out;
  out.norms = rows.rowwise().norm();
  out.unit = rows;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double n = out.norms[i];
    if (n > 0.0) out.unit.row(i) /= n;
  }
  return out;
}

// Backward step through row normalization: given dL/d(unit rows), produce
// dL/d(rows). For a unit row u = x/r: dL/dx = (g - (g.u) u) / r.
Mat normalize_rows_backward(const Mat& g_unit, const NormalizedRows& fwd) {
  Mat g(g_unit.rows(), g_unit.cols());
  for (Eigen::Index i = 0; i < g_unit.rows(); ++i) {
    const double r = fwd.norms[i];
    if (r == 0.0) {
      g.row(i).setZero();
      continue;
    }
    const double dot = g_unit.row(i).dot(fwd.unit.row(i));
    g.row(i) = (g_unit.row(i) - dot * fwd.unit.row(i)) / r;
  }
  return g;
}

// Scatters per-pair gradient coefficients into the symmetric pair matrix S
// (S[i][j] = S[j][i] = g_pair, zero diagonal) and returns dL/d(unit rows)
// = S * unit.
Mat pair_grad_to_rows(const Vec& pair_grad, const Mat& unit) {
  const Eigen::Index s = unit.rows();
  Mat pairm = Mat::Zero(s, s);
  Eigen::Index m = 0;
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = i + 1; j < s; ++j, ++m) {
      pairm(i, j) = pair_grad[m];
      pairm(j, i) = pair_grad[m];
    }
  }
  return pairm * unit;
}

}  // namespace

Mat solve_procrustes(const Mat& x, const Mat& y) {
  require_same_shape(x, y, "solve_procrustes");
  if (x.rows() < 1) throw DataError("solve_procrustes: empty seed set");
  if (!x.allFinite() || !y.allFinite()) {
    throw NumericError("solve_procrustes: non-finite input");
  }
  // argmin_W ||XW - Y||_F over orthogonal W maximizes Trace(W^T X^T Y);
  // with X^T Y = U S V^T the maximizer is W = U V^T.
  const auto dec = numerics::svd(x.transpose() * y);
  return dec.u * dec.v.transpose();
}

LossResult l2_loss(const Mat& x_seed, const Mat& y_seed) {
  require_same_shape(x_seed, y_seed, "l2_loss");
  const Eigen::Index s = x_seed.rows();
  if (s < 1) throw DataError("l2_loss: empty seed set");
  LossResult out;
  out.grad = Mat::Zero(s, x_seed.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < s; ++i) {
    const auto diff = x_seed.row(i) - y_seed.row(i);
    const double r = diff.norm();
    total += r;
    if (r > 0.0) {
      out.grad.row(i) = diff / (static_cast<double>(s) * r);
    }
    // r == 0: non-differentiable kink; subgradient 0.
  }
  out.value = total / static_cast<double>(s);
  return out;
}

ProcL2Result proc_l2_loss(const Mat& x_seed, const Mat& y_seed) {
  require_same_shape(x_seed, y_seed, "proc_l2_loss");
  const Eigen::Index s = x_seed.rows();
  ProcL2Result out;
  out.w = solve_procrustes(x_seed, y_seed);
  out.grad = Mat::Zero(s, x_seed.cols());
  const Mat residual = x_seed * out.w - y_seed;
  double total = 0.0;
  for (Eigen::Index i = 0; i < s; ++i) {
    const double r = residual.row(i).norm();
    total += r;
    if (r > 0.0) {
      out.grad.row(i) =
          residual.row(i) * out.w.transpose() / (static_cast<double>(s) * r);
    }
  }
  out.value = total / static_cast<double>(s);
  return out;
}

double proc_l2_value_at(const Mat& x_seed, const Mat& y_seed, const Mat& w) {
  require_same_shape(x_seed, y_seed, "proc_l2_value_at");
  const Mat residual = x_seed * w - y_seed;
  return residual.rowwise().norm().mean();
}

Vec pairwise_cosines(const Mat& rows) {
  const auto nr = normalize_rows(rows);
  const Eigen::Index s = rows.rows();
  Vec out(s * (s - 1) / 2);
  Eigen::Index m = 0;
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = i + 1; j < s; ++j, ++m) {
      out[m] = nr.unit.row(i).dot(nr.unit.row(j));
    }
  }
  return out;
}

Vec sorted_pairwise_cosines(const Mat& rows) {
  Vec cos = pairwise_cosines(rows);
  std::sort(cos.data(), cos.data() + cos.size(), std::greater<double>());
  return cos;
}

LossResult rsim_loss_against(const Mat& x_seed, const Vec& y_cosines) {
  if (x_seed.rows() < 3) {
    throw DataError("rsim loss needs at least 3 seed rows");
  }
  const auto nr = normalize_rows(x_seed);
  const Eigen::Index s = x_seed.rows();
  Vec cx(s * (s - 1) / 2);
  Eigen::Index m = 0;
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = i + 1; j < s; ++j, ++m) {
      cx[m] = nr.unit.row(i).dot(nr.unit.row(j));
    }
  }
  const auto pg = numerics::pearson_grad(cx, y_cosines);
  LossResult out;
  out.value = 1.0 - pg.r;
  const Vec pair_grad = -pg.da;  // dL/d(cosine list)
  out.grad = normalize_rows_backward(pair_grad_to_rows(pair_grad, nr.unit), nr);
  return out;
}

LossResult rsim_loss(const Mat& x_seed, const Mat& y_seed) {
  require_same_shape(x_seed, y_seed, "rsim_loss");
  return rsim_loss_against(x_seed, pairwise_cosines(y_seed));
}

LossResult rsim_u_loss_against(const Mat& x_top, const Vec& y_sorted) {
  if (x_top.rows() < 3) {
    throw DataError("rsim-u loss needs at least 3 rows");
  }
  const auto nr = normalize_rows(x_top);
  const Eigen::Index s = x_top.rows();
  const Eigen::Index p = s * (s - 1) / 2;
  Vec cx(p);
  Eigen::Index m = 0;
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = i + 1; j < s; ++j, ++m) {
      cx[m] = nr.unit.row(i).dot(nr.unit.row(j));
    }
  }
  // Sort descending; the permutation is frozen for the backward pass. Ties
  // resolve by original position (stable), keeping the pass deterministic.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return cx[a] > cx[b]; });
  Vec sorted_cx(p);
  for (Eigen::Index r = 0; r < p; ++r) sorted_cx[r] = cx[order[static_cast<std::size_t>(r)]];

  const auto pg = numerics::pearson_grad(sorted_cx, y_sorted);
  LossResult out;
  out.value = 1.0 - pg.r;
  Vec pair_grad = Vec::Zero(p);
  for (Eigen::Index r = 0; r < p; ++r) {
    pair_grad[order[static_cast<std::size_t>(r)]] = -pg.da[r];
  }
  out.grad = normalize_rows_backward(pair_grad_to_rows(pair_grad, nr.unit), nr);
  return out;
}

LossResult rsim_u_loss(const Mat& x_top, const Mat& y_top) {
  return rsim_u_loss_against(x_top, sorted_pairwise_cosines(y_top));
}

Vec weighted_laplacian_spectrum(const Mat& rows) {
  Mat a = rows * rows.transpose();
  a = 0.5 * (a + a.transpose());  // exact symmetry for the solver
  a.diagonal().setZero();
  Mat lap = -a;
  lap.diagonal() = a.rowwise().sum();
  return numerics::sym_eig(lap).values;
}

int spectral_mass_cutoff(const Vec& ascending_values) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < ascending_values.size(); ++i) {
    total += std::max(0.0, ascending_values[i]);
  }
  if (total <= 0.0) return 0;
  const double limit = 0.9 * total;
  double acc = 0.0;
  int l = 0;
  for (Eigen::Index i = 0; i < ascending_values.size(); ++i) {
    acc += std::max(0.0, ascending_values[i]);
    if (acc < limit) {
      l = static_cast<int>(i) + 1;
    } else {
      break;
    }
  }
  return l;
}

EvsULossResult evs_u_loss_against(const Mat& x_top, const Vec& y_spectrum) {
  const Eigen::Index s = x_top.rows();
  if (s < 2) throw DataError("evs-u loss needs at least 2 rows");

  Mat a = x_top * x_top.transpose();
  a = 0.5 * (a + a.transpose());
  a.diagonal().setZero();
  Mat lap = -a;
  lap.diagonal() = a.rowwise().sum();
  const auto eig = numerics::sym_eig(lap);

  const int lx = spectral_mass_cutoff(eig.values);
  const int ly = spectral_mass_cutoff(y_spectrum);
  const int l = std::min({lx, ly, static_cast<int>(eig.values.size()),
                          static_cast<int>(y_spectrum.size())});

  EvsULossResult out;
  // dL/d(Laplacian) accumulated over the compared eigenvalues.
  Mat g_lap = Mat::Zero(s, s);
  for (int i = 0; i < l; ++i) {
    const double diff = eig.values[i] - y_spectrum[i];
    out.value += diff * diff;
    if (diff == 0.0) continue;  // no gradient to contribute
    const auto eg = numerics::eigenvalue_grad(eig, i);
    if (eg.degenerate) {
      // v v^T is ill-defined inside a degenerate subspace; drop this term
      // for the step and account for it.
      ++out.degenerate_skips;
      continue;
    }
    g_lap.noalias() += (2.0 * diff) * eg.grad;
  }

  // Chain through L = D - A and A = X X^T (zero diagonal):
  // dL/dA[p,t] = G_L[p,p] - G_L[p,t] for p != t, and
  // dL/dX = (G_A + G_A^T) X, which with symmetric G_L collapses to
  // M[p,t] = G_L[p,p] + G_L[t,t] - 2 G_L[p,t] (zero diagonal), dL/dX = M X.
  Mat m(s, s);
  const Vec diag = g_lap.diagonal();
  for (Eigen::Index p = 0; p < s; ++p) {
    for (Eigen::Index t = 0; t < s; ++t) {
      m(p, t) = diag[p] + diag[t] - 2.0 * g_lap(p, t);
    }
  }
  m.diagonal().setZero();
  out.grad = m * x_top;
  return out;
}

EvsULossResult evs_u_loss(const Mat& x_top, const Mat& y_top) {
  if (x_top.cols() != y_top.cols()) {
    throw DataError("evs_u_loss: dimension mismatch");
  }
  return evs_u_loss_against(x_top, weighted_laplacian_spectrum(y_top));
}

}  // namespace isoemb::isoloss
