// Command line front end: train / map / eval / metrics / pipeline / vocab.
//
// Configuration comes from an optional `--config key=value file` plus
// per-key flags; flags win over the file. Every run writes its fully
// resolved configuration next to its outputs.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 numeric failure.

#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "isoemb/pipeline.hpp"
#include "isoemb/types.hpp"

namespace {

using isoemb::pipeline::ExperimentConfig;

// Flag assignments captured in command-line order, applied over the config
// file so that flags win.
struct Capture {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> assignments;
  std::vector<std::string> raw_sets;  // --set key=value
};

void add_key_option(CLI::App* cmd, Capture& cap, const std::string& flag,
                    const std::string& key, const std::string& desc) {
  cmd->add_option_function<std::string>(
      flag,
      [&cap, key](const std::string& v) { cap.assignments.emplace_back(key, v); },
      desc);
}

void add_common_options(CLI::App* cmd, Capture& cap) {
  cmd->add_option("--config", cap.config_file,
                  "key=value configuration file (flags override it)");
  cmd->add_option("--set", cap.raw_sets,
                  "extra key=value assignment (repeatable, wins over --config)")
      ->expected(-1);
  add_key_option(cmd, cap, "--out-dir", "out_dir", "output directory");
  add_key_option(cmd, cap, "--seed", "rng_seed", "random seed");
}

void add_train_options(CLI::App* cmd, Capture& cap) {
  add_key_option(cmd, cap, "--dim", "dim", "embedding dimensionality");
  add_key_option(cmd, cap, "--window", "window", "context window size");
  add_key_option(cmd, cap, "--negatives", "negatives", "negative samples per pair");
  add_key_option(cmd, cap, "--min-count", "min_count", "minimum word frequency");
  add_key_option(cmd, cap, "--epochs", "epochs", "training epochs");
  add_key_option(cmd, cap, "--batch-size", "batch_size", "pairs per optimizer step");
  add_key_option(cmd, cap, "--base-lr", "base_lr", "peak learning rate");
  add_key_option(cmd, cap, "--warmup-fraction", "warmup_fraction",
                 "fraction of steps spent ramping the learning rate");
  add_key_option(cmd, cap, "--loss", "loss",
                 "isomorphism loss: none|l2|proc_l2|proc_l2_init|rsim|rsim_init|rsim_u|evs_u");
  add_key_option(cmd, cap, "--beta", "beta",
                 "isomorphism loss weight (defaults per loss kind)");
  add_key_option(cmd, cap, "--unsup-k", "unsup_k",
                 "top-frequency rows compared by the unsupervised losses");
  add_key_option(cmd, cap, "--subsample", "subsample",
                 "frequent-word subsampling (true/false)");
  add_key_option(cmd, cap, "--subsample-t", "subsample_t", "subsampling threshold");
  add_key_option(cmd, cap, "--dynamic-window", "dynamic_window",
                 "sample the effective window per token (true/false)");
  add_key_option(cmd, cap, "--iso-interval", "iso_interval",
                 "evaluate the isomorphism loss every N batches");
}

void add_map_options(CLI::App* cmd, Capture& cap) {
  add_key_option(cmd, cap, "--mode", "mapping_mode",
                 "auto|supervised|semi_supervised|unsupervised");
  add_key_option(cmd, cap, "--cutoff", "cutoff",
                 "top-frequency cutoff for induction and unsupervised init");
  add_key_option(cmd, cap, "--reweight-power", "reweight_power",
                 "singular-value reweighting exponent");
  add_key_option(cmd, cap, "--whiten", "whiten", "whitening step (true/false)");
  add_key_option(cmd, cap, "--reweight", "reweight", "reweighting step (true/false)");
  add_key_option(cmd, cap, "--dewhiten", "dewhiten", "dewhitening step (true/false)");
  add_key_option(cmd, cap, "--max-iters", "max_iters", "self-learning iteration cap");
  add_key_option(cmd, cap, "--convergence-threshold", "convergence_threshold",
                 "minimum objective improvement counted as progress");
  add_key_option(cmd, cap, "--dropout-keep", "dropout_keep",
                 "initial keep probability for induced pairs");
}

void add_metric_options(CLI::App* cmd, Capture& cap) {
  add_key_option(cmd, cap, "--relsim-limit", "relsim_limit",
                 "seed pairs used for relational similarity");
  add_key_option(cmd, cap, "--eigsim-k", "eigsim_k", "k of the k-NN graphs");
  add_key_option(cmd, cap, "--eigsim-limit", "eigsim_limit",
                 "rows per space for the spectral comparison");
  add_key_option(cmd, cap, "--gh-limit", "gh_limit",
                 "rows per space for the persistence comparison");
  add_key_option(cmd, cap, "--gh-dim", "gh_dim", "homology dimension (0 or 1)");
}

ExperimentConfig make_config(const Capture& cap) {
  ExperimentConfig config;
  if (!cap.config_file.empty()) {
    isoemb::pipeline::load_config_file(config, cap.config_file);
  }
  for (const auto& [key, value] : cap.assignments) {
    isoemb::pipeline::set_key(config, key, value);
  }
  for (const auto& raw : cap.raw_sets) {
    const auto eq = raw.find('=');
    if (eq == std::string::npos) {
      throw isoemb::ConfigError("--set expects key=value, got: " + raw);
    }
    isoemb::pipeline::set_key(config, raw.substr(0, eq), raw.substr(eq + 1));
  }
  return config;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"word embedding training, mapping and isomorphism toolkit"};
  app.require_subcommand(1);

  Capture cap;
  std::function<void()> runner;

  auto* train = app.add_subcommand(
      "train", "train embeddings, optionally with an isomorphism loss");
  add_common_options(train, cap);
  add_key_option(train, cap, "--corpus", "corpus", "tokenizable text corpus");
  add_key_option(train, cap, "--reference-emb", "reference_emb",
                 "frozen reference embeddings (required when loss != none)");
  add_key_option(train, cap, "--dict", "dict",
                 "seed dictionary (required for seed-supervised losses)");
  add_train_options(train, cap);
  train->callback([&] {
    runner = [&] {
      const auto out = isoemb::pipeline::run_train(make_config(cap));
      const auto& trace = out.result.trace;
      if (!trace.empty()) {
        std::cout << "final losses: sg=" << fmt(trace.back().sg)
                  << " iso=" << fmt(trace.back().iso)
                  << " combined=" << fmt(trace.back().combined) << "\n";
      }
      std::cout << "embeddings: " << out.embedding_path << "\n"
                << "trace: " << out.trace_path << "\n"
                << "config: " << out.config_path << "\n";
    };
  });

  auto* map = app.add_subcommand(
      "map", "map two embedding spaces into a shared space");
  add_common_options(map, cap);
  add_key_option(map, cap, "--src-emb", "src_emb", "source embeddings");
  add_key_option(map, cap, "--trg-emb", "trg_emb", "target embeddings");
  add_key_option(map, cap, "--dict", "dict", "seed dictionary");
  add_key_option(map, cap, "--seed-dict", "dict", "seed dictionary (alias)");
  add_map_options(map, cap);
  map->callback([&] {
    runner = [&] {
      const auto out = isoemb::pipeline::run_map(make_config(cap));
      std::cout << "iterations: " << out.result.iterations << "\n";
      if (!out.result.objective_trace.empty()) {
        std::cout << "objective: " << fmt(out.result.objective_trace.back())
                  << "\n";
      }
      std::cout << "mapped source: " << out.src_mapped_path << "\n"
                << "mapped target: " << out.trg_mapped_path << "\n"
                << "report: " << out.report_path << "\n";
    };
  });

  auto* eval = app.add_subcommand(
      "eval", "precision@1 of mapped spaces against a gold dictionary");
  add_common_options(eval, cap);
  add_key_option(eval, cap, "--src-emb", "src_emb", "mapped source embeddings");
  add_key_option(eval, cap, "--trg-emb", "trg_emb", "mapped target embeddings");
  add_key_option(eval, cap, "--dict", "dict", "gold dictionary");
  eval->callback([&] {
    runner = [&] {
      const auto out = isoemb::pipeline::run_eval(make_config(cap));
      std::cout << "{\"p_at_1\": " << fmt(out.report.p_at_1)
                << ", \"coverage\": " << fmt(out.report.coverage)
                << ", \"n_evaluated\": " << out.report.n_evaluated
                << ", \"n_total\": " << out.report.n_total << "}\n";
    };
  });

  auto* metrics = app.add_subcommand(
      "metrics", "isomorphism metrics (relsim, eigsim, gh) of two spaces");
  add_common_options(metrics, cap);
  add_key_option(metrics, cap, "--src-emb", "src_emb", "source embeddings");
  add_key_option(metrics, cap, "--trg-emb", "trg_emb", "target embeddings");
  add_key_option(metrics, cap, "--dict", "dict",
                 "seed dictionary (for relational similarity)");
  add_metric_options(metrics, cap);
  metrics->callback([&] {
    runner = [&] {
      const auto out = isoemb::pipeline::run_metrics(make_config(cap));
      std::cout << "{\"relsim\": " << fmt(out.report.relsim)
                << ", \"eigsim\": " << fmt(out.report.eigsim)
                << ", \"gh\": " << fmt(out.report.gh) << "}\n"
                << "report: " << out.report_path << "\n";
    };
  });

  auto* pipeline = app.add_subcommand(
      "pipeline", "train + map + eval over repetitions and loss arms");
  add_common_options(pipeline, cap);
  add_key_option(pipeline, cap, "--src-corpus", "src_corpus", "source corpus");
  add_key_option(pipeline, cap, "--trg-corpus", "trg_corpus", "target corpus");
  add_key_option(pipeline, cap, "--reference-emb", "reference_emb",
                 "pre-trained target embeddings (skips reference training)");
  add_key_option(pipeline, cap, "--train-dict", "train_dict",
                 "train-split dictionary");
  add_key_option(pipeline, cap, "--test-dict", "test_dict",
                 "test-split dictionary");
  add_key_option(pipeline, cap, "--reps", "reps", "repetitions per arm");
  add_key_option(pipeline, cap, "--arms", "arms",
                 "comma list of name=loss:beta arms");
  add_train_options(pipeline, cap);
  add_map_options(pipeline, cap);
  add_metric_options(pipeline, cap);
  pipeline->callback([&] {
    runner = [&] {
      const auto out = isoemb::pipeline::run_pipeline(make_config(cap));
      for (const auto& arm : out.arms) {
        std::cout << arm.spec.name << ": p@1 " << fmt(arm.mean.p_at_1) << " ("
                  << fmt(arm.stddev.p_at_1) << ") relsim "
                  << fmt(arm.mean.relsim) << " (" << fmt(arm.stddev.relsim)
                  << ") eigsim " << fmt(arm.mean.eigsim) << " gh "
                  << fmt(arm.mean.gh) << "\n";
      }
      std::cout << "report: " << out.report_path << "\n";
    };
  });

  auto* vocab = app.add_subcommand(
      "vocab", "build and dump a frequency-sorted vocabulary");
  add_common_options(vocab, cap);
  add_key_option(vocab, cap, "--corpus", "corpus", "tokenizable text corpus");
  add_key_option(vocab, cap, "--min-count", "min_count", "minimum word frequency");
  vocab->callback([&] {
    runner = [&] {
      const auto out = isoemb::pipeline::run_vocab(make_config(cap));
      std::cout << "vocabulary: " << out.vocab.size() << " words, "
                << out.vocab.total_tokens << " retained tokens\n"
                << "written: " << out.vocab_path << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (runner) runner();
  } catch (const isoemb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const isoemb::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const isoemb::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
