#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "isoemb/types.hpp"

namespace isoemb::isoloss {

// Ordered translation pairs (source id, target id). Order is preserved from
// the input lexicon: truncation to "the first N pairs" is meaningful.
struct SeedDictionary {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  // Surface forms for reporting; either empty or aligned with `pairs`.
  std::vector<std::pair<std::string, std::string>> surface;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

// Orthogonal W (d x d) minimizing ||X W - Y||_F over orthogonal matrices.
// Rank-deficient cross-covariance still yields a valid orthogonal W.
Mat solve_procrustes(const Mat& x, const Mat& y);

// Value plus gradient with respect to the first argument's rows.
struct LossResult {
  double value = 0.0;
  Mat grad;
};

// Mean Euclidean distance between matched rows. Coincident pairs contribute
// zero loss and zero gradient (subgradient choice at the kink).
LossResult l2_loss(const Mat& x_seed, const Mat& y_seed);

// Mean Euclidean distance after mapping X through the Procrustes solution for
// (X, Y). W is re-solved on every evaluation; the gradient treats W as a
// constant of the step (the loss is stationary in W at the optimum, so the
// first-order term through W vanishes).
struct ProcL2Result {
  double value = 0.0;
  Mat grad;
  Mat w;  // the Procrustes rotation used
};
ProcL2Result proc_l2_loss(const Mat& x_seed, const Mat& y_seed);
// The same objective evaluated at a fixed, externally supplied W (useful for
// finite-difference checks of the frozen-W gradient above).
double proc_l2_value_at(const Mat& x_seed, const Mat& y_seed, const Mat& w);

// Cosine similarities of all unique row pairs i<j, enumerated in canonical
// row-major order: (0,1), (0,2), ..., (1,2), ... The Pearson correlation over
// these lists equals the one over all ordered off-diagonal pairs (symmetric
// duplication leaves the correlation unchanged), so unique pairs are used
// throughout.
Vec pairwise_cosines(const Mat& rows);
// Same list sorted descending (used by the rank-free variants).
Vec sorted_pairwise_cosines(const Mat& rows);

// 1 - pearson(cosine list of X_seed, fixed cosine list of the other space).
LossResult rsim_loss_against(const Mat& x_seed, const Vec& y_cosines);
// 1 - pearson over matched-order pairwise cosine lists of the two seed sets.
LossResult rsim_loss(const Mat& x_seed, const Mat& y_seed);

// Unsupervised variant: each space's cosine list is sorted descending
// independently; the sort permutation is recomputed per evaluation and frozen
// for the backward pass.
LossResult rsim_u_loss_against(const Mat& x_top, const Vec& y_sorted);
LossResult rsim_u_loss(const Mat& x_top, const Mat& y_top);

// Ascending eigenvalues of the Laplacian L = D - A of the fully-connected
// weighted graph with A = X X^T (zero diagonal). Rows are expected to be
// unit-normalized upstream.
Vec weighted_laplacian_spectrum(const Mat& rows);

// Sum of squared differences between the truncated Laplacian spectra of the
// two weighted graphs. Truncation: l = min over spaces of the largest l such
// that the first l (ascending) eigenvalues sum to less than 90% of the total.
// Gradients of eigenvalues with a neighbour gap < 1e-8 are zeroed for the
// step and counted in `degenerate_skips`.
struct EvsULossResult {
  double value = 0.0;
  Mat grad;
  int degenerate_skips = 0;
};
EvsULossResult evs_u_loss_against(const Mat& x_top, const Vec& y_spectrum);
EvsULossResult evs_u_loss(const Mat& x_top, const Mat& y_top);

// Truncation index of the 90% spectral-mass rule shared by the EVS loss and
// the spectral metric: largest l with sum(values[0..l)) < 0.9 * sum(values).
int spectral_mass_cutoff(const Vec& ascending_values);

}  // namespace isoemb::isoloss
