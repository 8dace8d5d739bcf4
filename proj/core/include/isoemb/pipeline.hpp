#pragma once

// Experiment orchestration: resolved configuration handling and the
// train / map / eval / metrics / pipeline / vocab entry points the command
// line tool wires together. Every run writes its fully-resolved config next
// to its outputs so it can be reproduced exactly.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "isoemb/bli.hpp"
#include "isoemb/corpus.hpp"
#include "isoemb/mapping.hpp"
#include "isoemb/sgns.hpp"
#include "isoemb/types.hpp"

namespace isoemb::pipeline {

// Default mixing weight for each isomorphism loss, applied when no explicit
// beta was given.
double default_beta(sgns::LossKind kind);

struct ExperimentConfig {
  // Shared
  std::string out_dir = "out";
  std::uint64_t rng_seed = 1;

  // Input paths
  std::string corpus;         // train/vocab: corpus to embed
  std::string src_corpus;     // pipeline: source-language corpus
  std::string trg_corpus;     // pipeline: target-language corpus
  std::string reference_emb;  // train/pipeline: frozen reference space
  std::string src_emb;        // map/eval/metrics: source embeddings
  std::string trg_emb;        // map/eval/metrics: target embeddings
  std::string dict;           // train/map seed or eval gold dictionary
  std::string train_dict;     // pipeline: train-split dictionary
  std::string test_dict;      // pipeline: test-split dictionary

  // Training. `loss` is the textual loss kind; finalize_train_settings
  // resolves it into train.loss_kind and applies the default beta.
  sgns::TrainConfig train;
  std::string loss = "none";
  bool beta_set = false;

  // Mapping. mapping_mode "auto" resolves per loss kind (baseline ->
  // supervised, seed-supervised losses -> semi_supervised, unsupervised
  // losses -> unsupervised); standalone `map` resolves auto by whether a
  // seed dictionary was given.
  mapping::MappingConfig map;
  std::string mapping_mode = "auto";

  // Metric limits used by `metrics` and `pipeline`. Desk-scale defaults:
  // full-size spectra/persistence runs are configured explicitly.
  int relsim_limit = 1000;
  int eigsim_k = 2;
  int eigsim_limit = 1000;
  int gh_limit = 128;
  int gh_dim = 1;

  // Pipeline
  int reps = 5;
  std::string arms = "baseline=none,rsim_u";
};

// --- key=value configuration ------------------------------------------------

// Assigns one configuration key. Unknown keys and unparsable values throw
// ConfigError.
void set_key(ExperimentConfig& config, const std::string& key,
             const std::string& value);

// Reads `key = value` lines ('#' comment lines and blank lines skipped).
void load_config_file(ExperimentConfig& config, const std::string& path);

// Every key with its current value, in a fixed order. Stringification is
// round-trip exact for floating point values.
std::vector<std::pair<std::string, std::string>> to_key_values(
    const ExperimentConfig& config);

void write_resolved_config(const ExperimentConfig& config,
                           const std::string& path);

// Resolves `loss` into train.loss_kind and fills in the default beta when
// none was given explicitly. Call after all keys/flags are applied.
void finalize_train_settings(ExperimentConfig& config);

// Mapping mode used for an arm with the given training loss when
// mapping_mode is "auto".
mapping::Mode mode_for_loss(sgns::LossKind kind);

// --- subcommands -------------------------------------------------------------

struct TrainOutputs {
  std::string embedding_path;
  std::string trace_path;
  std::string config_path;
  sgns::TrainResult result;
};
TrainOutputs run_train(const ExperimentConfig& config);

struct MapOutputs {
  std::string src_mapped_path;
  std::string trg_mapped_path;
  std::string induced_dict_path;
  std::string report_path;
  std::string config_path;
  mapping::MappingResult result;
};
MapOutputs run_map(const ExperimentConfig& config);

struct EvalOutputs {
  std::string report_path;
  bli::EvalReport report;
};
EvalOutputs run_eval(const ExperimentConfig& config);

struct MetricsReport {
  double relsim = 0.0;
  double eigsim = 0.0;
  double gh = 0.0;
  int relsim_pairs = 0;
  int eigsim_points_x = 0, eigsim_points_y = 0;
  int gh_points_x = 0, gh_points_y = 0;
};
struct MetricsOutputs {
  std::string report_path;
  MetricsReport report;
};
MetricsOutputs run_metrics(const ExperimentConfig& config);

// One experimental arm: a training loss with its mixing weight.
struct ArmSpec {
  std::string name;
  sgns::LossKind loss = sgns::LossKind::none;
  double beta = 0.0;
};
// Parses "name=loss:beta,name=loss,..." (name and beta optional).
std::vector<ArmSpec> parse_arms(const std::string& arms);

struct RunMetrics {
  double p_at_1 = 0.0;
  double coverage = 0.0;
  double relsim = 0.0;
  double eigsim = 0.0;
  double gh = 0.0;
};
struct ArmSummary {
  ArmSpec spec;
  std::string mapping_mode;
  std::vector<RunMetrics> runs;
  RunMetrics mean;
  RunMetrics stddev;  // population standard deviation over runs
};
struct PipelineOutputs {
  std::string report_path;
  std::string config_path;
  std::vector<ArmSummary> arms;
};
// Trains (or loads) the reference/target space once, then for every
// repetition and arm: trains source embeddings, measures isomorphism against
// the reference, maps, and scores P@1. Per-run JSON files are written as
// they complete, so partial results survive a failed repetition.
PipelineOutputs run_pipeline(const ExperimentConfig& config);

struct VocabOutputs {
  std::string vocab_path;
  corpus::Vocabulary vocab;
};
VocabOutputs run_vocab(const ExperimentConfig& config);

}  // namespace isoemb::pipeline
