#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isoemb/isoloss.hpp"
#include "isoemb/types.hpp"

namespace isoemb::mapping {

enum class Mode { supervised, semi_supervised, unsupervised };
const char* mode_name(Mode mode);
std::optional<Mode> mode_from_name(const std::string& name);

struct MappingConfig {
  Mode mode = Mode::supervised;
  int unsup_vocab_cutoff = 4000;  // induction/init vocabulary restriction
  double reweight_power = 0.5;    // singular-value exponent, per space
  bool whiten = true;
  bool reweight = true;
  bool dewhiten = true;
  int self_learn_max_iters = 500;
  double convergence_threshold = 1e-6;  // on mean dictionary cosine
  double dropout_keep = 0.1;  // induction keep probability, annealed x2 on plateau
  std::uint64_t rng_seed = 1;

  void validate() const;  // ConfigError on violations
};

// Unit-norm rows, mean-center, unit-norm again. All-zero rows (on input or
// after centering) are replaced by a deterministic epsilon direction and
// counted in *zero_rows_replaced when provided.
Mat preprocess(const Mat& x, int* zero_rows_replaced = nullptr);

// Whitening transform from the SVD of the input: w = (1/sqrt(c)) V S^-1 V^T
// with c = 1/(n-1), so the whitened rows z = x * w^T satisfy c z^T z = I.
// Singular values below 1e-10 * max are clamped to that floor and counted.
struct WhitenResult {
  Mat z;      // input rows whitened
  Mat w;      // the (symmetric) whitening transform
  Mat w_inv;  // exact inverse from the same decomposition
  int clamped = 0;
};
WhitenResult whiten(const Mat& x);

// Two-sided orthogonal map over dictionary-aligned rows: with
// M = X_dict^T Z_dict = U S V^T, the rotations w_x = U and w_z = V maximize
// Trace(W_z^T Z^T X W_x). `s` carries the singular values for reweighting.
struct OrthogonalMapResult {
  Mat w_x;
  Mat w_z;
  Vec s;
};
OrthogonalMapResult orthogonal_map(const Mat& x, const Mat& z,
                                   const isoloss::SeedDictionary& dict);

// Applies rotation, singular-value reweighting S^power, and (when a whitening
// result is supplied) the inverse whitening W_rot^T W_white^-1 W_rot. With
// power = 0 and no whitening this is exactly x * w_rot.
Mat reweight_dewhiten(const Mat& x, const Mat& w_rot, const Vec& s,
                      const WhitenResult* whitening, double power);

enum class Direction { forward, backward };

// Nearest-neighbor pairs by cosine between mapped spaces. Forward: for every
// source row, its best target (restricted to the first `restrict_to` rows
// when > 0); backward: for every target row, its best source. Ties break to
// the lower candidate id. Rows are renormalized internally.
isoloss::SeedDictionary induce_dictionary(const Mat& x_mapped,
                                          const Mat& z_mapped,
                                          Direction direction,
                                          int restrict_to = 0);

// Fully unsupervised seeding: similarity matrices over the first `cutoff`
// rows, each row's values sorted descending, then cross-space nearest-row
// matching under cosine. When a space has fewer than `cutoff` rows the cutoff
// is lowered (and *cutoff_lowered set).
isoloss::SeedDictionary unsupervised_init(const Mat& x, const Mat& z,
                                          int cutoff = 4000,
                                          bool* cutoff_lowered = nullptr);

struct MappingResult {
  // d x d transforms applied to the preprocessed spaces.
  Mat transform_x;
  Mat transform_z;
  isoloss::SeedDictionary induced_dictionary;
  std::vector<double> objective_trace;  // best objective after each iteration
  int iterations = 0;
};

// Self-learning over raw spaces (preprocessing applied internally).
// Supervised mode: one advanced solve over init_dict, no iteration.
// Semi-supervised/unsupervised: iterate plain orthogonal mapping and
// two-direction stochastic induction, keep the best-objective dictionary,
// then run the advanced pipeline (whiten/reweight/dewhiten per config) on it.
MappingResult self_learn(const Mat& x, const Mat& z,
                         const isoloss::SeedDictionary& init_dict,
                         const MappingConfig& config);

// Convenience: preprocess a raw space and apply a mapping transform.
Mat apply_transform(const Mat& raw, const Mat& transform);

}  // namespace isoemb::mapping
