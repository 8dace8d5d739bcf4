#include "isoemb/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "isoemb/embedding.hpp"
#include "isoemb/geometry.hpp"

namespace isoemb::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --- small utilities --------------------------------------------------------

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("invalid number for '" + key + "': " + value);
  }
  return out;
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  std::int64_t out = 0;
  const char* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("invalid integer for '" + key + "': " + value);
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const char* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("invalid unsigned integer for '" + key + "': " + value);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") {
    return true;
  }
  if (value == "false" || value == "0" || value == "no" || value == "off") {
    return false;
  }
  throw ConfigError("invalid boolean for '" + key + "': " + value);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  return out;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory: " + dir);
}

void write_json(const json& j, const std::string& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path);
}

mapping::Mode parse_mode_or_throw(const std::string& name) {
  const auto mode = mapping::mode_from_name(name);
  if (!mode) throw ConfigError("unknown mapping mode: " + name);
  return *mode;
}

}  // namespace

double default_beta(sgns::LossKind kind) {
  switch (kind) {
    case sgns::LossKind::none: return 0.0;
    case sgns::LossKind::l2: return 0.1;
    case sgns::LossKind::proc_l2: return 0.333;
    case sgns::LossKind::proc_l2_init: return 0.2;
    case sgns::LossKind::rsim: return 0.01;
    case sgns::LossKind::rsim_init: return 0.001;
    case sgns::LossKind::rsim_u: return 0.1;
    case sgns::LossKind::evs_u: return 0.333;
  }
  return 0.0;
}

void set_key(ExperimentConfig& c, const std::string& key,
             const std::string& value) {
  if (key == "out_dir") { c.out_dir = value; return; }
  if (key == "rng_seed") {
    c.rng_seed = parse_u64(key, value);
    c.train.rng_seed = c.rng_seed;
    c.map.rng_seed = c.rng_seed;
    return;
  }
  if (key == "corpus") { c.corpus = value; return; }
  if (key == "src_corpus") { c.src_corpus = value; return; }
  if (key == "trg_corpus") { c.trg_corpus = value; return; }
  if (key == "reference_emb") { c.reference_emb = value; return; }
  if (key == "src_emb") { c.src_emb = value; return; }
  if (key == "trg_emb") { c.trg_emb = value; return; }
  if (key == "dict") { c.dict = value; return; }
  if (key == "train_dict") { c.train_dict = value; return; }
  if (key == "test_dict") { c.test_dict = value; return; }

  if (key == "dim") { c.train.dim = static_cast<int>(parse_int(key, value)); return; }
  if (key == "window") { c.train.window = static_cast<int>(parse_int(key, value)); return; }
  if (key == "negatives") { c.train.negatives = static_cast<int>(parse_int(key, value)); return; }
  if (key == "min_count") { c.train.min_count = parse_u64(key, value); return; }
  if (key == "epochs") { c.train.epochs = static_cast<int>(parse_int(key, value)); return; }
  if (key == "batch_size") { c.train.batch_size = static_cast<int>(parse_int(key, value)); return; }
  if (key == "base_lr") { c.train.base_lr = parse_double(key, value); return; }
  if (key == "warmup_fraction") { c.train.warmup_fraction = parse_double(key, value); return; }
  if (key == "loss") { c.loss = value; return; }
  if (key == "beta") {
    c.train.beta = parse_double(key, value);
    c.beta_set = true;
    return;
  }
  if (key == "unsup_k") { c.train.unsup_k = static_cast<int>(parse_int(key, value)); return; }
  if (key == "subsample") { c.train.subsample = parse_bool(key, value); return; }
  if (key == "subsample_t") { c.train.subsample_t = parse_double(key, value); return; }
  if (key == "dynamic_window") { c.train.dynamic_window = parse_bool(key, value); return; }
  if (key == "iso_interval") { c.train.iso_interval = static_cast<int>(parse_int(key, value)); return; }

  if (key == "mapping_mode") { c.mapping_mode = value; return; }
  if (key == "cutoff") { c.map.unsup_vocab_cutoff = static_cast<int>(parse_int(key, value)); return; }
  if (key == "reweight_power") { c.map.reweight_power = parse_double(key, value); return; }
  if (key == "whiten") { c.map.whiten = parse_bool(key, value); return; }
  if (key == "reweight") { c.map.reweight = parse_bool(key, value); return; }
  if (key == "dewhiten") { c.map.dewhiten = parse_bool(key, value); return; }
  if (key == "max_iters") { c.map.self_learn_max_iters = static_cast<int>(parse_int(key, value)); return; }
  if (key == "convergence_threshold") { c.map.convergence_threshold = parse_double(key, value); return; }
  if (key == "dropout_keep") { c.map.dropout_keep = parse_double(key, value); return; }

  if (key == "relsim_limit") { c.relsim_limit = static_cast<int>(parse_int(key, value)); return; }
  if (key == "eigsim_k") { c.eigsim_k = static_cast<int>(parse_int(key, value)); return; }
  if (key == "eigsim_limit") { c.eigsim_limit = static_cast<int>(parse_int(key, value)); return; }
  if (key == "gh_limit") { c.gh_limit = static_cast<int>(parse_int(key, value)); return; }
  if (key == "gh_dim") { c.gh_dim = static_cast<int>(parse_int(key, value)); return; }

  if (key == "reps") { c.reps = static_cast<int>(parse_int(key, value)); return; }
  if (key == "arms") { c.arms = value; return; }

  throw ConfigError("unknown config key: " + key);
}

void load_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not 'key = value': " + stripped);
    }
    set_key(config, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

std::vector<std::pair<std::string, std::string>> to_key_values(
    const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::string>> kv;
  const auto add = [&](const char* k, std::string v) {
    kv.emplace_back(k, std::move(v));
  };
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  add("out_dir", c.out_dir);
  add("rng_seed", std::to_string(c.rng_seed));
  add("corpus", c.corpus);
  add("src_corpus", c.src_corpus);
  add("trg_corpus", c.trg_corpus);
  add("reference_emb", c.reference_emb);
  add("src_emb", c.src_emb);
  add("trg_emb", c.trg_emb);
  add("dict", c.dict);
  add("train_dict", c.train_dict);
  add("test_dict", c.test_dict);
  add("dim", std::to_string(c.train.dim));
  add("window", std::to_string(c.train.window));
  add("negatives", std::to_string(c.train.negatives));
  add("min_count", std::to_string(c.train.min_count));
  add("epochs", std::to_string(c.train.epochs));
  add("batch_size", std::to_string(c.train.batch_size));
  add("base_lr", fmt_double(c.train.base_lr));
  add("warmup_fraction", fmt_double(c.train.warmup_fraction));
  add("loss", c.loss);
  add("beta", fmt_double(c.train.beta));
  add("unsup_k", std::to_string(c.train.unsup_k));
  add("subsample", b(c.train.subsample));
  add("subsample_t", fmt_double(c.train.subsample_t));
  add("dynamic_window", b(c.train.dynamic_window));
  add("iso_interval", std::to_string(c.train.iso_interval));
  add("mapping_mode", c.mapping_mode);
  add("cutoff", std::to_string(c.map.unsup_vocab_cutoff));
  add("reweight_power", fmt_double(c.map.reweight_power));
  add("whiten", b(c.map.whiten));
  add("reweight", b(c.map.reweight));
  add("dewhiten", b(c.map.dewhiten));
  add("max_iters", std::to_string(c.map.self_learn_max_iters));
  add("convergence_threshold", fmt_double(c.map.convergence_threshold));
  add("dropout_keep", fmt_double(c.map.dropout_keep));
  add("relsim_limit", std::to_string(c.relsim_limit));
  add("eigsim_k", std::to_string(c.eigsim_k));
  add("eigsim_limit", std::to_string(c.eigsim_limit));
  add("gh_limit", std::to_string(c.gh_limit));
  add("gh_dim", std::to_string(c.gh_dim));
  add("reps", std::to_string(c.reps));
  add("arms", c.arms);
  return kv;
}

void write_resolved_config(const ExperimentConfig& config,
                           const std::string& path) {
  auto out = open_out(path);
  for (const auto& [k, v] : to_key_values(config)) {
    out << k << " = " << v << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

void finalize_train_settings(ExperimentConfig& config) {
  const auto kind = sgns::loss_kind_from_name(config.loss);
  if (!kind) throw ConfigError("unknown loss kind: " + config.loss);
  config.train.loss_kind = *kind;
  config.loss = sgns::loss_kind_name(*kind);
  if (*kind == sgns::LossKind::none && config.beta_set && config.train.beta != 0.0)
    throw ConfigError("beta has no effect when loss=none; remove the beta setting");
  if (!config.beta_set) config.train.beta = default_beta(*kind);
}

mapping::Mode mode_for_loss(sgns::LossKind kind) {
  switch (kind) {
    case sgns::LossKind::none:
      return mapping::Mode::supervised;
    case sgns::LossKind::rsim_u:
    case sgns::LossKind::evs_u:
      return mapping::Mode::unsupervised;
    default:
      return mapping::Mode::semi_supervised;
  }
}

std::vector<ArmSpec> parse_arms(const std::string& arms) {
  std::vector<ArmSpec> out;
  std::stringstream ss(arms);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string token = trim(item);
    if (token.empty()) continue;
    ArmSpec arm;
    std::string rest = token;
    const auto eq = token.find('=');
    if (eq != std::string::npos) {
      arm.name = trim(token.substr(0, eq));
      rest = trim(token.substr(eq + 1));
    }
    std::string loss_part = rest;
    std::optional<double> beta;
    const auto colon = rest.find(':');
    if (colon != std::string::npos) {
      loss_part = trim(rest.substr(0, colon));
      beta = parse_double("arms", trim(rest.substr(colon + 1)));
    }
    const auto kind = sgns::loss_kind_from_name(loss_part);
    if (!kind) throw ConfigError("unknown loss kind in arms: " + loss_part);
    arm.loss = *kind;
    if (*kind == sgns::LossKind::none && beta && *beta != 0.0)
      throw ConfigError("beta has no effect when loss=none in arm: " + token);
    arm.beta = beta ? *beta : default_beta(*kind);
    if (arm.name.empty()) {
      arm.name = sgns::loss_kind_name(*kind);
      if (beta) arm.name += "_b" + fmt_double(*beta);
    }
    out.push_back(std::move(arm));
  }
  if (out.empty()) throw ConfigError("no arms specified");
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      if (out[i].name == out[j].name) {
        throw ConfigError("duplicate arm name: " + out[i].name);
      }
    }
  }
  return out;
}

// --- subcommands -------------------------------------------------------------

VocabOutputs run_vocab(const ExperimentConfig& config) {
  if (config.corpus.empty()) throw ConfigError("vocab requires a corpus path");
  ensure_out_dir(config.out_dir);
  write_resolved_config(config, config.out_dir + "/vocab.resolved.cfg");
  corpus::TextFileSource source(config.corpus);
  VocabOutputs out;
  out.vocab = corpus::build_vocab(source, config.train.min_count);
  out.vocab_path = config.out_dir + "/vocab.tsv";
  auto file = open_out(out.vocab_path);
  corpus::write_vocab(out.vocab, file);
  if (!file) throw DataError("failed writing " + out.vocab_path);
  return out;
}

TrainOutputs run_train(const ExperimentConfig& base) {
  ExperimentConfig config = base;
  finalize_train_settings(config);
  if (config.corpus.empty()) throw ConfigError("train requires a corpus path");
  const bool needs_ref = config.train.loss_kind != sgns::LossKind::none;
  const bool needs_seeds = sgns::loss_is_supervised(config.train.loss_kind);
  if (needs_ref && config.reference_emb.empty()) {
    throw ConfigError("loss '" + config.loss + "' requires reference embeddings");
  }
  if (needs_seeds && config.dict.empty()) {
    throw ConfigError("loss '" + config.loss + "' requires a seed dictionary");
  }
  config.train.validate();

  ensure_out_dir(config.out_dir);
  write_resolved_config(config, config.out_dir + "/train.resolved.cfg");

  corpus::TextFileSource source(config.corpus);
  const auto vocab = corpus::build_vocab(source, config.train.min_count);

  std::optional<sgns::ReferenceSpace> reference;
  isoloss::SeedDictionary seeds;
  if (needs_ref) {
    const auto ref_emb = read_word2vec_text(config.reference_emb);
    reference = sgns::ReferenceSpace::from_space(ref_emb);
    if (needs_seeds) {
      const auto gold = bli::load_lexicon(config.dict, bli::Split::train);
      seeds = bli::seed_subset(gold, vocab, reference->vocab).dict;
    }
  }

  TrainOutputs out;
  out.result = sgns::train(source, vocab,
                           reference ? &*reference : nullptr,
                           seeds.empty() ? nullptr : &seeds, config.train);

  out.embedding_path = config.out_dir + "/embeddings.vec";
  write_word2vec_text(out.result.space, out.embedding_path);

  out.trace_path = config.out_dir + "/trace.csv";
  {
    auto trace = open_out(out.trace_path);
    trace << "epoch,sg_loss,iso_loss,combined_loss\n";
    for (std::size_t e = 0; e < out.result.trace.size(); ++e) {
      const auto& t = out.result.trace[e];
      trace << (e + 1) << ',' << fmt_double(t.sg) << ',' << fmt_double(t.iso)
            << ',' << fmt_double(t.combined) << '\n';
    }
    if (!trace) throw DataError("failed writing " + out.trace_path);
  }
  out.config_path = config.out_dir + "/train.resolved.cfg";
  return out;
}

MapOutputs run_map(const ExperimentConfig& base) {
  ExperimentConfig config = base;
  if (config.src_emb.empty() || config.trg_emb.empty()) {
    throw ConfigError("map requires source and target embedding paths");
  }
  mapping::Mode mode;
  if (config.mapping_mode == "auto") {
    mode = config.dict.empty() ? mapping::Mode::unsupervised
                               : mapping::Mode::supervised;
    config.mapping_mode = mapping::mode_name(mode);
  } else {
    mode = parse_mode_or_throw(config.mapping_mode);
  }
  if (mode != mapping::Mode::unsupervised && config.dict.empty()) {
    throw ConfigError("mapping mode '" + config.mapping_mode +
                      "' requires a seed dictionary");
  }
  config.map.mode = mode;
  config.map.rng_seed = config.rng_seed;
  config.map.validate();

  ensure_out_dir(config.out_dir);
  write_resolved_config(config, config.out_dir + "/map.resolved.cfg");

  const auto x = read_word2vec_text(config.src_emb);
  const auto z = read_word2vec_text(config.trg_emb);

  isoloss::SeedDictionary init;
  bool cutoff_lowered = false;
  if (mode == mapping::Mode::unsupervised) {
    init = mapping::unsupervised_init(mapping::preprocess(x.input_vectors),
                                      mapping::preprocess(z.input_vectors),
                                      config.map.unsup_vocab_cutoff,
                                      &cutoff_lowered);
  } else {
    const auto gold = bli::load_lexicon(config.dict, bli::Split::train);
    init = bli::seed_subset(gold, x.vocab, z.vocab).dict;
  }

  MapOutputs out;
  out.result =
      mapping::self_learn(x.input_vectors, z.input_vectors, init, config.map);

  EmbeddingSpace mapped_x;
  mapped_x.vocab = x.vocab;
  mapped_x.input_vectors =
      mapping::apply_transform(x.input_vectors, out.result.transform_x);
  EmbeddingSpace mapped_z;
  mapped_z.vocab = z.vocab;
  mapped_z.input_vectors =
      mapping::apply_transform(z.input_vectors, out.result.transform_z);

  out.src_mapped_path = config.out_dir + "/src.mapped.vec";
  out.trg_mapped_path = config.out_dir + "/trg.mapped.vec";
  write_word2vec_text(mapped_x, out.src_mapped_path);
  write_word2vec_text(mapped_z, out.trg_mapped_path);

  out.induced_dict_path = config.out_dir + "/induced.dict";
  {
    auto dict_out = open_out(out.induced_dict_path);
    for (const auto& [src_id, trg_id] : out.result.induced_dictionary.pairs) {
      dict_out << x.vocab.words.at(static_cast<std::size_t>(src_id)) << '\t'
               << z.vocab.words.at(static_cast<std::size_t>(trg_id)) << '\n';
    }
  }

  json report;
  report["mode"] = config.mapping_mode;
  report["iterations"] = out.result.iterations;
  report["init_pairs"] = init.size();
  report["induced_pairs"] = out.result.induced_dictionary.size();
  report["cutoff_lowered"] = cutoff_lowered;
  report["objective_trace"] = out.result.objective_trace;
  if (!out.result.objective_trace.empty()) {
    report["objective"] = out.result.objective_trace.back();
  }
  out.report_path = config.out_dir + "/map.report.json";
  write_json(report, out.report_path);
  out.config_path = config.out_dir + "/map.resolved.cfg";
  return out;
}

EvalOutputs run_eval(const ExperimentConfig& config) {
  if (config.src_emb.empty() || config.trg_emb.empty()) {
    throw ConfigError("eval requires source and target embedding paths");
  }
  if (config.dict.empty()) throw ConfigError("eval requires a gold dictionary");
  ensure_out_dir(config.out_dir);
  write_resolved_config(config, config.out_dir + "/eval.resolved.cfg");

  const auto x = read_word2vec_text(config.src_emb);
  const auto z = read_word2vec_text(config.trg_emb);
  const auto gold = bli::load_lexicon(config.dict, bli::Split::test);

  EvalOutputs out;
  out.report = bli::evaluate_p1(x, z, gold);

  json j;
  j["p_at_1"] = out.report.p_at_1;
  j["coverage"] = out.report.coverage;
  j["n_evaluated"] = out.report.n_evaluated;
  j["n_total"] = out.report.n_total;
  out.report_path = config.out_dir + "/eval.json";
  write_json(j, out.report_path);
  return out;
}

MetricsOutputs run_metrics(const ExperimentConfig& config) {
  if (config.src_emb.empty() || config.trg_emb.empty()) {
    throw ConfigError("metrics requires source and target embedding paths");
  }
  if (config.dict.empty()) {
    throw ConfigError(
        "metrics requires a seed dictionary for relational similarity");
  }
  ensure_out_dir(config.out_dir);
  write_resolved_config(config, config.out_dir + "/metrics.resolved.cfg");

  const auto x = read_word2vec_text(config.src_emb);
  const auto z = read_word2vec_text(config.trg_emb);
  const auto gold = bli::load_lexicon(config.dict);
  const auto seeds = bli::seed_subset(gold, x.vocab, z.vocab).dict;

  const Mat xp = mapping::preprocess(x.input_vectors);
  const Mat zp = mapping::preprocess(z.input_vectors);

  MetricsOutputs out;
  out.report.relsim_pairs = static_cast<int>(
      config.relsim_limit > 0
          ? std::min<std::size_t>(seeds.size(), config.relsim_limit)
          : seeds.size());
  out.report.relsim =
      geometry::relational_similarity(xp, zp, seeds, config.relsim_limit);
  out.report.eigsim_points_x = static_cast<int>(
      std::min<Eigen::Index>(config.eigsim_limit, xp.rows()));
  out.report.eigsim_points_y = static_cast<int>(
      std::min<Eigen::Index>(config.eigsim_limit, zp.rows()));
  out.report.eigsim = geometry::eigenvector_similarity(
      xp, zp, config.eigsim_k, config.eigsim_limit);
  geometry::GhOptions gh;
  gh.limit = config.gh_limit;
  gh.homology_dim = config.gh_dim;
  gh.preprocess = false;  // inputs already preprocessed above
  out.report.gh_points_x =
      static_cast<int>(std::min<Eigen::Index>(gh.limit, xp.rows()));
  out.report.gh_points_y =
      static_cast<int>(std::min<Eigen::Index>(gh.limit, zp.rows()));
  out.report.gh = geometry::gromov_hausdorff(xp, zp, gh);

  json j;
  j["relsim"] = out.report.relsim;
  j["eigsim"] = out.report.eigsim;
  j["gh"] = out.report.gh;
  j["parameters"] = {{"relsim_limit", config.relsim_limit},
                     {"eigsim_k", config.eigsim_k},
                     {"eigsim_limit", config.eigsim_limit},
                     {"gh_limit", config.gh_limit},
                     {"gh_dim", config.gh_dim}};
  j["points"] = {{"relsim_pairs", out.report.relsim_pairs},
                 {"eigsim_x", out.report.eigsim_points_x},
                 {"eigsim_y", out.report.eigsim_points_y},
                 {"gh_x", out.report.gh_points_x},
                 {"gh_y", out.report.gh_points_y}};
  out.report_path = config.out_dir + "/metrics.json";
  write_json(j, out.report_path);
  return out;
}

namespace {

RunMetrics mean_of(const std::vector<RunMetrics>& runs) {
  RunMetrics m;
  for (const auto& r : runs) {
    m.p_at_1 += r.p_at_1;
    m.coverage += r.coverage;
    m.relsim += r.relsim;
    m.eigsim += r.eigsim;
    m.gh += r.gh;
  }
  const double n = static_cast<double>(runs.size());
  m.p_at_1 /= n;
  m.coverage /= n;
  m.relsim /= n;
  m.eigsim /= n;
  m.gh /= n;
  return m;
}

RunMetrics stddev_of(const std::vector<RunMetrics>& runs,
                     const RunMetrics& mean) {
  RunMetrics s;
  for (const auto& r : runs) {
    const auto sq = [](double d) { return d * d; };
    s.p_at_1 += sq(r.p_at_1 - mean.p_at_1);
    s.coverage += sq(r.coverage - mean.coverage);
    s.relsim += sq(r.relsim - mean.relsim);
    s.eigsim += sq(r.eigsim - mean.eigsim);
    s.gh += sq(r.gh - mean.gh);
  }
  const double n = static_cast<double>(runs.size());
  s.p_at_1 = std::sqrt(s.p_at_1 / n);
  s.coverage = std::sqrt(s.coverage / n);
  s.relsim = std::sqrt(s.relsim / n);
  s.eigsim = std::sqrt(s.eigsim / n);
  s.gh = std::sqrt(s.gh / n);
  return s;
}

json stat_json(const std::vector<RunMetrics>& runs, const RunMetrics& mean,
               const RunMetrics& stddev, double RunMetrics::* field) {
  json values = json::array();
  for (const auto& r : runs) values.push_back(r.*field);
  return {{"mean", mean.*field}, {"std", stddev.*field}, {"runs", values}};
}

}  // namespace

PipelineOutputs run_pipeline(const ExperimentConfig& base) {
  ExperimentConfig config = base;
  finalize_train_settings(config);
  if (config.src_corpus.empty() || config.trg_corpus.empty()) {
    throw ConfigError("pipeline requires src_corpus and trg_corpus");
  }
  if (config.train_dict.empty() || config.test_dict.empty()) {
    throw ConfigError("pipeline requires train_dict and test_dict");
  }
  if (config.reps < 1) throw ConfigError("reps must be >= 1");
  const auto arms = parse_arms(config.arms);
  const bool mode_auto = config.mapping_mode == "auto";
  if (!mode_auto) parse_mode_or_throw(config.mapping_mode);  // fail fast
  config.map.validate();

  ensure_out_dir(config.out_dir);
  write_resolved_config(config, config.out_dir + "/pipeline.resolved.cfg");

  // Target/reference space: trained once with the base seed (or loaded), so
  // every arm and repetition compares against the same frozen space.
  EmbeddingSpace target;
  if (!config.reference_emb.empty()) {
    target = read_word2vec_text(config.reference_emb);
  } else {
    corpus::TextFileSource trg_source(config.trg_corpus);
    const auto trg_vocab =
        corpus::build_vocab(trg_source, config.train.min_count);
    sgns::TrainConfig ref_cfg = config.train;
    ref_cfg.loss_kind = sgns::LossKind::none;
    ref_cfg.beta = 0.0;
    ref_cfg.rng_seed = config.rng_seed;
    target = sgns::train(trg_source, trg_vocab, nullptr, nullptr, ref_cfg).space;
    write_word2vec_text(target, config.out_dir + "/reference.vec");
  }
  const auto reference = sgns::ReferenceSpace::from_space(target);

  corpus::TextFileSource src_source(config.src_corpus);
  const auto src_vocab = corpus::build_vocab(src_source, config.train.min_count);

  const auto gold_train = bli::load_lexicon(config.train_dict, bli::Split::train);
  const auto gold_test = bli::load_lexicon(config.test_dict, bli::Split::test);
  const auto seeds = bli::seed_subset(gold_train, src_vocab, reference.vocab).dict;

  PipelineOutputs out;
  out.config_path = config.out_dir + "/pipeline.resolved.cfg";
  out.arms.resize(arms.size());
  for (std::size_t a = 0; a < arms.size(); ++a) {
    out.arms[a].spec = arms[a];
    const auto mode = mode_auto ? mode_for_loss(arms[a].loss)
                                : parse_mode_or_throw(config.mapping_mode);
    out.arms[a].mapping_mode = mapping::mode_name(mode);
    ensure_out_dir(config.out_dir + "/" + arms[a].name);
  }

  for (int rep = 0; rep < config.reps; ++rep) {
    const std::uint64_t rep_seed = config.rng_seed + 1 + static_cast<std::uint64_t>(rep);
    for (std::size_t a = 0; a < arms.size(); ++a) {
      const auto& arm = arms[a];

      sgns::TrainConfig tc = config.train;
      tc.loss_kind = arm.loss;
      tc.beta = arm.beta;
      tc.rng_seed = rep_seed;
      const bool supervised_loss = sgns::loss_is_supervised(arm.loss);
      const auto trained =
          sgns::train(src_source, src_vocab,
                      arm.loss == sgns::LossKind::none ? nullptr : &reference,
                      supervised_loss ? &seeds : nullptr, tc);

      // Isomorphism metrics of the trained space against the reference.
      const Mat xp = mapping::preprocess(trained.space.input_vectors);
      RunMetrics metrics;
      metrics.relsim = geometry::relational_similarity(
          xp, reference.vectors, seeds, config.relsim_limit);
      metrics.eigsim = geometry::eigenvector_similarity(
          xp, reference.vectors, config.eigsim_k, config.eigsim_limit);
      geometry::GhOptions gh;
      gh.limit = config.gh_limit;
      gh.homology_dim = config.gh_dim;
      gh.preprocess = false;
      metrics.gh = geometry::gromov_hausdorff(xp, reference.vectors, gh);

      // Map into the shared space and score BLI.
      mapping::MappingConfig mc = config.map;
      mc.mode = mode_auto ? mode_for_loss(arm.loss)
                          : parse_mode_or_throw(config.mapping_mode);
      mc.rng_seed = rep_seed;
      isoloss::SeedDictionary init;
      if (mc.mode == mapping::Mode::unsupervised) {
        init = mapping::unsupervised_init(xp, reference.vectors,
                                          mc.unsup_vocab_cutoff);
      } else {
        init = seeds;
      }
      const auto mapped = mapping::self_learn(trained.space.input_vectors,
                                              target.input_vectors, init, mc);

      EmbeddingSpace mapped_x;
      mapped_x.vocab = src_vocab;
      mapped_x.input_vectors = mapping::apply_transform(
          trained.space.input_vectors, mapped.transform_x);
      EmbeddingSpace mapped_z;
      mapped_z.vocab = target.vocab;
      mapped_z.input_vectors =
          mapping::apply_transform(target.input_vectors, mapped.transform_z);
      const auto eval = bli::evaluate_p1(mapped_x, mapped_z, gold_test);
      metrics.p_at_1 = eval.p_at_1;
      metrics.coverage = eval.coverage;

      json rep_json;
      rep_json["arm"] = arm.name;
      rep_json["loss"] = sgns::loss_kind_name(arm.loss);
      rep_json["beta"] = arm.beta;
      rep_json["rep"] = rep;
      rep_json["seed"] = rep_seed;
      rep_json["mapping_mode"] = mapping::mode_name(mc.mode);
      rep_json["p_at_1"] = metrics.p_at_1;
      rep_json["coverage"] = metrics.coverage;
      rep_json["n_evaluated"] = eval.n_evaluated;
      rep_json["n_total"] = eval.n_total;
      rep_json["relsim"] = metrics.relsim;
      rep_json["eigsim"] = metrics.eigsim;
      rep_json["gh"] = metrics.gh;
      rep_json["map_iterations"] = mapped.iterations;
      rep_json["train_steps"] = trained.total_steps;
      if (!trained.trace.empty()) {
        rep_json["final_losses"] = {{"sg", trained.trace.back().sg},
                                    {"iso", trained.trace.back().iso},
                                    {"combined", trained.trace.back().combined}};
      }
      write_json(rep_json, config.out_dir + "/" + arm.name + "/rep" +
                               std::to_string(rep) + ".json");

      out.arms[a].runs.push_back(metrics);
    }
  }

  json report;
  report["reps"] = config.reps;
  json arms_json = json::array();
  for (auto& summary : out.arms) {
    summary.mean = mean_of(summary.runs);
    summary.stddev = stddev_of(summary.runs, summary.mean);
    json aj;
    aj["name"] = summary.spec.name;
    aj["loss"] = sgns::loss_kind_name(summary.spec.loss);
    aj["beta"] = summary.spec.beta;
    aj["mapping_mode"] = summary.mapping_mode;
    aj["p_at_1"] = stat_json(summary.runs, summary.mean, summary.stddev,
                             &RunMetrics::p_at_1);
    aj["coverage"] = stat_json(summary.runs, summary.mean, summary.stddev,
                               &RunMetrics::coverage);
    aj["relsim"] = stat_json(summary.runs, summary.mean, summary.stddev,
                             &RunMetrics::relsim);
    aj["eigsim"] = stat_json(summary.runs, summary.mean, summary.stddev,
                             &RunMetrics::eigsim);
    aj["gh"] =
        stat_json(summary.runs, summary.mean, summary.stddev, &RunMetrics::gh);
    arms_json.push_back(std::move(aj));
  }
  report["arms"] = std::move(arms_json);

  // Mean differences of every arm against the first (the comparison arm).
  if (out.arms.size() > 1) {
    json deltas = json::array();
    const auto& baseline = out.arms.front();
    for (std::size_t a = 1; a < out.arms.size(); ++a) {
      const auto& s = out.arms[a];
      deltas.push_back({{"arm", s.spec.name},
                        {"vs", baseline.spec.name},
                        {"p_at_1", s.mean.p_at_1 - baseline.mean.p_at_1},
                        {"relsim", s.mean.relsim - baseline.mean.relsim},
                        {"eigsim", s.mean.eigsim - baseline.mean.eigsim},
                        {"gh", s.mean.gh - baseline.mean.gh}});
    }
    report["deltas"] = std::move(deltas);
  }

  out.report_path = config.out_dir + "/report.json";
  write_json(report, out.report_path);
  return out;
}

}  // namespace isoemb::pipeline
