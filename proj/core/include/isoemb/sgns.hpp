#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isoemb/corpus.hpp"
#include "isoemb/embedding.hpp"
#include "isoemb/isoloss.hpp"
#include "isoemb/types.hpp"

namespace isoemb::sgns {

// Which isomorphism loss accompanies the distributional objective.
enum class LossKind {
  none,
  l2,
  proc_l2,
  proc_l2_init,  // proc_l2 plus seed-row initialization from the reference
  rsim,
  rsim_init,     // rsim plus seed-row initialization
  rsim_u,
  evs_u,
};

// Supervised kinds need a seed dictionary; the *_u kinds compare the first-k
// frequency rows instead.
bool loss_is_supervised(LossKind kind);
// Kinds that start source seed rows from the reference translation vectors.
bool loss_wants_init(LossKind kind);
const char* loss_kind_name(LossKind kind);
std::optional<LossKind> loss_kind_from_name(const std::string& name);

struct TrainConfig {
  int dim = 300;
  int window = 5;
  int negatives = 10;
  std::uint64_t min_count = 10;
  int batch_size = 16384;
  double base_lr = 0.001;
  int epochs = 10;
  double warmup_fraction = 0.25;
  LossKind loss_kind = LossKind::none;
  double beta = 0.0;
  int unsup_k = 2000;
  std::uint64_t rng_seed = 1;

  // Flagged extras (defaults follow the word2vec release this mirrors).
  bool subsample = true;
  double subsample_t = 1e-3;
  bool dynamic_window = true;
  int iso_interval = 1;  // evaluate the isomorphism term every N batches

  // Throws ConfigError on violations (beta out of [0,1], beta/loss_kind
  // inconsistency, non-positive sizes).
  void validate() const;
};

// The frozen target space the isomorphism losses compare against: the target
// EmbeddingSpace's input vectors after unit-norm, mean-center, unit-norm.
struct ReferenceSpace {
  corpus::Vocabulary vocab;
  Mat vectors;  // preprocessed, rows unit within 1e-6

  static ReferenceSpace from_space(const EmbeddingSpace& space);
};

// Differentiable record of the normalize -> center -> normalize chain applied
// to the model copy the isomorphism losses see.
struct PreprocessTape {
  Mat unit1;      // row-normalized input
  Vec norms1;
  Mat result;     // re-normalized centered rows
  Vec norms2;

  static PreprocessTape forward(const Mat& x);
  // Pulls dL/d(result) back to dL/d(x). Dense: centering couples all rows.
  Mat backward(const Mat& g_result) const;
};

// Mean skip-gram negative-sampling loss over the batch:
// -log sigma(u_ctx . v_c) - sum_k log sigma(-u_neg_k . v_c), averaged.
// Gradients are dense matrices with nonzero entries only on touched rows.
struct SgnsBatchResult {
  double loss = 0.0;
  Mat d_input;
  Mat d_output;
};
SgnsBatchResult sgns_batch_loss(const corpus::PairBatch& batch,
                                const EmbeddingSpace& space);

struct LossBreakdown {
  double sg = 0.0;
  double iso = 0.0;
  double combined = 0.0;
};

// (1-beta) * L_SG + beta * L_ISO, with L_ISO computed on the preprocessed
// copy of the current input vectors (gradients flow through preprocessing).
struct CombinedLossResult {
  LossBreakdown breakdown;
  Mat d_input;
  Mat d_output;
  int degenerate_skips = 0;  // evs-u eigenvalue gradients dropped
};
CombinedLossResult combined_loss(const corpus::PairBatch& batch,
                                 const EmbeddingSpace& space,
                                 const ReferenceSpace* reference,
                                 const isoloss::SeedDictionary* seeds,
                                 const TrainConfig& config);

// Piecewise-linear schedule: 0 -> base_lr over the first
// floor(total * warmup_fraction) steps, then linear decay to 0 at `total`.
double lr_at(std::int64_t step, std::int64_t total, const TrainConfig& config);

// Fresh space: input vectors uniform in [-0.5/dim, 0.5/dim], output zero.
EmbeddingSpace init_space(const corpus::Vocabulary& vocab,
                          const TrainConfig& config);

// Overwrites source seed rows with the reference translation rows.
// Duplicate source ids keep their first occurrence.
struct InitWithReferenceResult {
  std::int64_t overwritten = 0;
  std::int64_t duplicates_ignored = 0;
};
InitWithReferenceResult init_with_reference(EmbeddingSpace& space,
                                            const ReferenceSpace& reference,
                                            const isoloss::SeedDictionary& seeds);

struct EpochTrace {
  double sg = 0.0;
  double iso = 0.0;
  double combined = 0.0;
};

struct TrainResult {
  EmbeddingSpace space;
  std::vector<EpochTrace> trace;
  std::int64_t total_steps = 0;
  std::int64_t degenerate_eig_steps = 0;
  std::uint64_t pairs_seen = 0;
};

// Full training run: Adam (0.9, 0.999, 1e-8) on combined_loss for
// config.epochs passes over the corpus. Deterministic for a fixed seed.
// `vocab` must be the vocabulary the seed ids refer to (build it with
// build_vocab(source, config.min_count) first).
TrainResult train(corpus::SentenceSource& source,
                  const corpus::Vocabulary& vocab,
                  const ReferenceSpace* reference,
                  const isoloss::SeedDictionary* seeds,
                  const TrainConfig& config);

// RNG stream tags used by the trainer (documented so that runs can be
// reproduced externally): initialization, per-epoch pair streams, per-epoch
// negative draws.
constexpr std::uint64_t kInitStreamTag = 0x01;
constexpr std::uint64_t kPairStreamTagBase = 0x100;
constexpr std::uint64_t kNegativeStreamTagBase = 0x20000;

}  // namespace isoemb::sgns
