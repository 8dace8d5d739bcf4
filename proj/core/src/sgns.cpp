#include "isoemb/sgns.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "isoemb/mapping.hpp"

namespace isoemb::sgns {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + e^x), stable in both tails; -log sigma(s) == softplus(-s).
double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

void check_batch(const corpus::PairBatch& batch, std::int32_t n) {
  if (batch.centers.size() != batch.contexts.size()) {
    throw DataError("batch: centers/contexts length mismatch");
  }
  if (batch.negatives.size() != batch.centers.size() * static_cast<std::size_t>(
                                    std::max(batch.k, 0))) {
    throw DataError("batch: negatives length inconsistent with k");
  }
  auto in_range = [n](std::int32_t id) { return id >= 0 && id < n; };
  for (std::int32_t id : batch.centers) {
    if (!in_range(id)) throw DataError("batch: center id out of range");
  }
  for (std::int32_t id : batch.contexts) {
    if (!in_range(id)) throw DataError("batch: context id out of range");
  }
  for (std::int32_t id : batch.negatives) {
    if (!in_range(id)) throw DataError("batch: negative id out of range");
  }
}

// Shared by the public op and the trainer: accumulates mean-loss gradients
// into din/dout (which must be zeroed by the caller) and returns the loss.
double accumulate_sgns(const corpus::PairBatch& batch, const Mat& in,
                       const Mat& out, Mat& din, Mat& dout) {
  const std::size_t bs = batch.size();
  const double inv = 1.0 / static_cast<double>(bs);
  const int k = batch.k;
  double loss = 0.0;
  for (std::size_t p = 0; p < bs; ++p) {
    const std::int32_t c = batch.centers[p];
    const std::int32_t ctx = batch.contexts[p];
    const auto v = in.row(c);
    {
      const double s = v.dot(out.row(ctx));
      loss += softplus(-s);
      const double g = (sigmoid(s) - 1.0) * inv;
      din.row(c) += g * out.row(ctx);
      dout.row(ctx) += g * v;
    }
    for (int i = 0; i < k; ++i) {
      const std::int32_t neg = batch.negatives[p * static_cast<std::size_t>(k) +
                                               static_cast<std::size_t>(i)];
      const double s = v.dot(out.row(neg));
      loss += softplus(s);
      const double g = sigmoid(s) * inv;
      din.row(c) += g * out.row(neg);
      dout.row(neg) += g * v;
    }
  }
  return loss * inv;
}

// Backward through one row normalization: u = x / r.
void rownorm_backward_inplace(Mat& g, const Mat& unit, const Vec& norms) {
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const double r = norms[i];
    if (r == 0.0) {
      g.row(i).setZero();
      continue;
    }
    const double dot = g.row(i).dot(unit.row(i));
    g.row(i) = (g.row(i) - dot * unit.row(i)) / r;
  }
}

// Reference-side and row-selection state for the isomorphism term, built
// once per training run (the reference is frozen).
struct IsoContext {
  LossKind kind = LossKind::none;
  std::vector<std::int32_t> rows;  // model rows entering the loss, in order
  Mat y_seed;    // l2 / proc_l2 variants
  Vec y_cos;     // rsim variants
  Vec y_sorted;  // rsim_u
  Vec y_spec;    // evs_u

  static IsoContext build(const ReferenceSpace& reference,
                          const isoloss::SeedDictionary* seeds,
                          std::int32_t model_rows, const TrainConfig& config) {
    IsoContext ctx;
    ctx.kind = config.loss_kind;
    const auto ref_rows = static_cast<std::int32_t>(reference.vectors.rows());
    if (loss_is_supervised(config.loss_kind)) {
      if (seeds == nullptr || seeds->empty()) {
        throw ConfigError("supervised isomorphism loss requires a seed dictionary");
      }
      ctx.rows.reserve(seeds->size());
      ctx.y_seed.resize(static_cast<Eigen::Index>(seeds->size()),
                        reference.vectors.cols());
      Eigen::Index m = 0;
      for (const auto& [src, tgt] : seeds->pairs) {
        if (src < 0 || src >= model_rows) {
          throw DataError("seed source id out of range: " + std::to_string(src));
        }
        if (tgt < 0 || tgt >= ref_rows) {
          throw DataError("seed target id out of range: " + std::to_string(tgt));
        }
        ctx.rows.push_back(src);
        ctx.y_seed.row(m++) = reference.vectors.row(tgt);
      }
      switch (config.loss_kind) {
        case LossKind::rsim:
        case LossKind::rsim_init:
          if (seeds->size() < 3) {
            throw DataError("rsim loss needs at least 3 seed pairs");
          }
          ctx.y_cos = isoloss::pairwise_cosines(ctx.y_seed);
          break;
        default:
          break;
      }
    } else {
      const std::int32_t k_eff = std::min(
          {static_cast<std::int32_t>(config.unsup_k), model_rows, ref_rows});
      const std::int32_t need = config.loss_kind == LossKind::rsim_u ? 3 : 2;
      if (k_eff < need) {
        throw DataError("not enough rows for the unsupervised isomorphism loss");
      }
      ctx.rows.resize(static_cast<std::size_t>(k_eff));
      for (std::int32_t i = 0; i < k_eff; ++i) ctx.rows[static_cast<std::size_t>(i)] = i;
      const Mat y_top = reference.vectors.topRows(k_eff);
      if (config.loss_kind == LossKind::rsim_u) {
        ctx.y_sorted = isoloss::sorted_pairwise_cosines(y_top);
      } else {
        ctx.y_spec = isoloss::weighted_laplacian_spectrum(y_top);
      }
    }
    return ctx;
  }

  struct Eval {
    double value = 0.0;
    Mat g_input;
    int degenerate_skips = 0;
  };

  Eval eval(const Mat& input_vectors) const {
    const auto tape = PreprocessTape::forward(input_vectors);
    Mat selected(static_cast<Eigen::Index>(rows.size()), input_vectors.cols());
    for (std::size_t m = 0; m < rows.size(); ++m) {
      selected.row(static_cast<Eigen::Index>(m)) = tape.result.row(rows[m]);
    }

    Eval out;
    Mat g_sel;
    switch (kind) {
      case LossKind::l2: {
        auto r = isoloss::l2_loss(selected, y_seed);
        out.value = r.value;
        g_sel = std::move(r.grad);
        break;
      }
      case LossKind::proc_l2:
      case LossKind::proc_l2_init: {
        auto r = isoloss::proc_l2_loss(selected, y_seed);
        out.value = r.value;
        g_sel = std::move(r.grad);
        break;
      }
      case LossKind::rsim:
      case LossKind::rsim_init: {
        auto r = isoloss::rsim_loss_against(selected, y_cos);
        out.value = r.value;
        g_sel = std::move(r.grad);
        break;
      }
      case LossKind::rsim_u: {
        auto r = isoloss::rsim_u_loss_against(selected, y_sorted);
        out.value = r.value;
        g_sel = std::move(r.grad);
        break;
      }
      case LossKind::evs_u: {
        auto r = isoloss::evs_u_loss_against(selected, y_spec);
        out.value = r.value;
        out.degenerate_skips = r.degenerate_skips;
        g_sel = std::move(r.grad);
        break;
      }
      case LossKind::none:
        throw ConfigError("iso context built without a loss kind");
    }

    // Scatter-accumulate (sources may repeat across seed pairs), then pull
    // back through the preprocessing chain.
    Mat g_result = Mat::Zero(input_vectors.rows(), input_vectors.cols());
    for (std::size_t m = 0; m < rows.size(); ++m) {
      g_result.row(rows[m]) += g_sel.row(static_cast<Eigen::Index>(m));
    }
    out.g_input = tape.backward(g_result);
    return out;
  }
};

void adam_update(Mat& w, Mat& m, Mat& v, const Mat& g, double lr,
                 std::int64_t t) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  m = kBeta1 * m + (1.0 - kBeta1) * g;
  v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
  w.array() -=
      lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
}

}  // namespace

bool loss_is_supervised(LossKind kind) {
  switch (kind) {
    case LossKind::l2:
    case LossKind::proc_l2:
    case LossKind::proc_l2_init:
    case LossKind::rsim:
    case LossKind::rsim_init:
      return true;
    default:
      return false;
  }
}

bool loss_wants_init(LossKind kind) {
  return kind == LossKind::proc_l2_init || kind == LossKind::rsim_init;
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::none: return "none";
    case LossKind::l2: return "l2";
    case LossKind::proc_l2: return "proc_l2";
    case LossKind::proc_l2_init: return "proc_l2_init";
    case LossKind::rsim: return "rsim";
    case LossKind::rsim_init: return "rsim_init";
    case LossKind::rsim_u: return "rsim_u";
    case LossKind::evs_u: return "evs_u";
  }
  return "none";
}

std::optional<LossKind> loss_kind_from_name(const std::string& name) {
  std::string s;
  s.reserve(name.size());
  for (char c : name) {
    s.push_back(c == '-' ? '_' : static_cast<char>(std::tolower(
                                     static_cast<unsigned char>(c))));
  }
  if (s == "none") return LossKind::none;
  if (s == "l2") return LossKind::l2;
  if (s == "proc_l2" || s == "procl2") return LossKind::proc_l2;
  if (s == "proc_l2_init" || s == "procl2_init" || s == "procl2init") {
    return LossKind::proc_l2_init;
  }
  if (s == "rsim") return LossKind::rsim;
  if (s == "rsim_init" || s == "rsiminit") return LossKind::rsim_init;
  if (s == "rsim_u" || s == "rsimu") return LossKind::rsim_u;
  if (s == "evs_u" || s == "evsu") return LossKind::evs_u;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (window < 1) throw ConfigError("window must be >= 1");
  if (negatives < 1) throw ConfigError("negatives must be >= 1");
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (base_lr <= 0.0) throw ConfigError("lr must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0) {
    throw ConfigError("warmup_fraction must be in [0, 1]");
  }
  if (beta < 0.0 || beta > 1.0) throw ConfigError("beta must be in [0, 1]");
  if (loss_kind == LossKind::none && beta != 0.0) {
    throw ConfigError("beta > 0 requires an isomorphism loss");
  }
  if (loss_kind != LossKind::none && beta <= 0.0) {
    throw ConfigError("an isomorphism loss requires beta > 0");
  }
  if (unsup_k < 2) throw ConfigError("unsup_k must be >= 2");
  if (subsample_t <= 0.0) throw ConfigError("subsample_t must be > 0");
  if (iso_interval < 1) throw ConfigError("iso_interval must be >= 1");
}

ReferenceSpace ReferenceSpace::from_space(const EmbeddingSpace& space) {
  ReferenceSpace ref;
  ref.vocab = space.vocab;
  ref.vectors = mapping::preprocess(space.input_vectors);
  return ref;
}

PreprocessTape PreprocessTape::forward(const Mat& x) {
  PreprocessTape tape;
  tape.norms1 = x.rowwise().norm();
  tape.unit1 = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (tape.norms1[i] > 0.0) tape.unit1.row(i) /= tape.norms1[i];
  }
  const Eigen::RowVectorXd mean = tape.unit1.colwise().mean();
  Mat centered = tape.unit1.rowwise() - mean;
  tape.norms2 = centered.rowwise().norm();
  tape.result = std::move(centered);
  for (Eigen::Index i = 0; i < tape.result.rows(); ++i) {
    if (tape.norms2[i] > 0.0) tape.result.row(i) /= tape.norms2[i];
  }
  return tape;
}

Mat PreprocessTape::backward(const Mat& g_result) const {
  Mat g = g_result;
  rownorm_backward_inplace(g, result, norms2);
  // Centering: every row received -mean, so subtract the column means of the
  // incoming gradient from every row.
  const Eigen::RowVectorXd gmean = g.colwise().mean();
  g.rowwise() -= gmean;
  rownorm_backward_inplace(g, unit1, norms1);
  return g;
}

SgnsBatchResult sgns_batch_loss(const corpus::PairBatch& batch,
                                const EmbeddingSpace& space) {
  if (batch.size() == 0) throw DataError("sgns_batch_loss: empty batch");
  check_batch(batch, space.size());
  SgnsBatchResult out;
  out.d_input = Mat::Zero(space.input_vectors.rows(), space.input_vectors.cols());
  out.d_output =
      Mat::Zero(space.output_vectors.rows(), space.output_vectors.cols());
  out.loss = accumulate_sgns(batch, space.input_vectors, space.output_vectors,
                             out.d_input, out.d_output);
  return out;
}

CombinedLossResult combined_loss(const corpus::PairBatch& batch,
                                 const EmbeddingSpace& space,
                                 const ReferenceSpace* reference,
                                 const isoloss::SeedDictionary* seeds,
                                 const TrainConfig& config) {
  config.validate();
  auto sg = sgns_batch_loss(batch, space);
  CombinedLossResult out;
  out.breakdown.sg = sg.loss;
  if (config.loss_kind == LossKind::none) {
    out.breakdown.combined = sg.loss;
    out.d_input = std::move(sg.d_input);
    out.d_output = std::move(sg.d_output);
    return out;
  }
  if (reference == nullptr) {
    throw ConfigError("isomorphism loss requires a reference space");
  }
  const auto ctx = IsoContext::build(*reference, seeds, space.size(), config);
  auto iso = ctx.eval(space.input_vectors);
  out.breakdown.iso = iso.value;
  out.breakdown.combined =
      (1.0 - config.beta) * sg.loss + config.beta * iso.value;
  out.degenerate_skips = iso.degenerate_skips;
  out.d_input = (1.0 - config.beta) * sg.d_input + config.beta * iso.g_input;
  out.d_output = (1.0 - config.beta) * sg.d_output;
  return out;
}

double lr_at(std::int64_t step, std::int64_t total, const TrainConfig& config) {
  if (total <= 0) throw ConfigError("lr schedule needs total_steps > 0");
  if (step < 0 || step > total) {
    throw ConfigError("lr schedule step out of range");
  }
  const auto warmup = static_cast<std::int64_t>(
      static_cast<double>(total) * config.warmup_fraction);
  if (step < warmup) {
    return config.base_lr * static_cast<double>(step) /
           static_cast<double>(warmup);
  }
  if (step >= total) return 0.0;
  if (total == warmup) return 0.0;
  return config.base_lr * static_cast<double>(total - step) /
         static_cast<double>(total - warmup);
}

EmbeddingSpace init_space(const corpus::Vocabulary& vocab,
                          const TrainConfig& config) {
  EmbeddingSpace space;
  space.vocab = vocab;
  const auto n = vocab.size();
  space.input_vectors.resize(n, config.dim);
  space.output_vectors = Mat::Zero(n, config.dim);
  SplitMix64 rng(mix_seed(config.rng_seed, kInitStreamTag));
  const double scale = 1.0 / static_cast<double>(config.dim);
  for (std::int32_t i = 0; i < n; ++i) {
    for (int j = 0; j < config.dim; ++j) {
      space.input_vectors(i, j) = (rng.next_double() - 0.5) * scale;
    }
  }
  return space;
}

InitWithReferenceResult init_with_reference(EmbeddingSpace& space,
                                            const ReferenceSpace& reference,
                                            const isoloss::SeedDictionary& seeds) {
  if (reference.vectors.cols() != space.input_vectors.cols()) {
    throw DataError("reference dimensionality does not match the space");
  }
  InitWithReferenceResult out;
  std::vector<bool> seen(static_cast<std::size_t>(space.size()), false);
  for (const auto& [src, tgt] : seeds.pairs) {
    if (src < 0 || src >= space.size()) {
      throw DataError("seed source id out of range: " + std::to_string(src));
    }
    if (tgt < 0 || tgt >= reference.vectors.rows()) {
      throw DataError("seed target id out of range: " + std::to_string(tgt));
    }
    if (seen[static_cast<std::size_t>(src)]) {
      ++out.duplicates_ignored;
      continue;
    }
    seen[static_cast<std::size_t>(src)] = true;
    space.input_vectors.row(src) = reference.vectors.row(tgt);
    ++out.overwritten;
  }
  return out;
}

TrainResult train(corpus::SentenceSource& source,
                  const corpus::Vocabulary& vocab,
                  const ReferenceSpace* reference,
                  const isoloss::SeedDictionary* seeds,
                  const TrainConfig& config) {
  config.validate();
  if (config.loss_kind != LossKind::none && reference == nullptr) {
    throw ConfigError("isomorphism loss requires a reference space");
  }

  TrainResult result;
  result.space = init_space(vocab, config);

  std::optional<IsoContext> iso_ctx;
  if (config.loss_kind != LossKind::none) {
    iso_ctx = IsoContext::build(*reference, seeds, vocab.size(), config);
    if (loss_wants_init(config.loss_kind)) {
      init_with_reference(result.space, *reference, *seeds);
    }
  }

  const auto stream_options = [&](int epoch) {
    corpus::PairStreamOptions opt;
    opt.window = config.window;
    opt.dynamic_window = config.dynamic_window;
    opt.subsample = config.subsample;
    opt.subsample_t = config.subsample_t;
    opt.seed = mix_seed(config.rng_seed,
                        kPairStreamTagBase + static_cast<std::uint64_t>(epoch));
    return opt;
  };

  // Pre-count pairs per epoch so the schedule's total step count is known
  // before the first update. The count pass replays the exact per-epoch rng
  // streams the training pass will use.
  std::int64_t total_steps = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    source.reset();
    corpus::PairStream stream(source, vocab, stream_options(epoch));
    std::int64_t pairs = 0;
    std::int32_t c, x;
    while (stream.next(c, x)) ++pairs;
    total_steps += (pairs + config.batch_size - 1) / config.batch_size;
  }
  if (total_steps == 0) {
    throw DataError("no training pairs: corpus too small for the window/vocab");
  }
  result.total_steps = total_steps;

  const corpus::NegativeSampler sampler(vocab);
  const Eigen::Index n = result.space.input_vectors.rows();
  const Eigen::Index d = result.space.input_vectors.cols();
  Mat d_in(n, d), d_out(n, d), g_in(n, d);
  Mat m_in = Mat::Zero(n, d), v_in = Mat::Zero(n, d);
  Mat m_out = Mat::Zero(n, d), v_out = Mat::Zero(n, d);

  corpus::PairBatch batch;
  batch.k = config.negatives;
  batch.centers.reserve(static_cast<std::size_t>(config.batch_size));
  batch.contexts.reserve(static_cast<std::size_t>(config.batch_size));
  batch.negatives.reserve(static_cast<std::size_t>(config.batch_size) *
                          static_cast<std::size_t>(config.negatives));

  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    source.reset();
    corpus::PairStream stream(source, vocab, stream_options(epoch));
    SplitMix64 neg_rng(mix_seed(
        config.rng_seed, kNegativeStreamTagBase + static_cast<std::uint64_t>(epoch)));

    double sg_weighted = 0.0, iso_weighted = 0.0;
    std::uint64_t sg_pairs = 0, iso_pairs = 0;
    bool more = true;
    while (more) {
      batch.centers.clear();
      batch.contexts.clear();
      batch.negatives.clear();
      std::int32_t c, x;
      while (batch.centers.size() <
             static_cast<std::size_t>(config.batch_size)) {
        if (!stream.next(c, x)) {
          more = false;
          break;
        }
        batch.centers.push_back(c);
        batch.contexts.push_back(x);
        const std::size_t base = batch.negatives.size();
        batch.negatives.resize(base + static_cast<std::size_t>(config.negatives));
        sampler.sample(x, config.negatives, neg_rng, batch.negatives.data() + base);
      }
      if (batch.centers.empty()) break;

      d_in.setZero();
      d_out.setZero();
      const double sg_loss = accumulate_sgns(
          batch, result.space.input_vectors, result.space.output_vectors,
          d_in, d_out);
      const auto bs = static_cast<double>(batch.size());
      sg_weighted += sg_loss * bs;
      sg_pairs += batch.size();

      const double lr = lr_at(step, total_steps, config);
      if (iso_ctx.has_value() &&
          (step % config.iso_interval == 0)) {
        auto iso = iso_ctx->eval(result.space.input_vectors);
        iso_weighted += iso.value * bs;
        iso_pairs += batch.size();
        result.degenerate_eig_steps += iso.degenerate_skips;
        g_in = (1.0 - config.beta) * d_in + config.beta * iso.g_input;
        d_out *= (1.0 - config.beta);
        adam_update(result.space.input_vectors, m_in, v_in, g_in, lr, step + 1);
        adam_update(result.space.output_vectors, m_out, v_out, d_out, lr, step + 1);
      } else if (iso_ctx.has_value()) {
        g_in = (1.0 - config.beta) * d_in;
        d_out *= (1.0 - config.beta);
        adam_update(result.space.input_vectors, m_in, v_in, g_in, lr, step + 1);
        adam_update(result.space.output_vectors, m_out, v_out, d_out, lr, step + 1);
      } else {
        adam_update(result.space.input_vectors, m_in, v_in, d_in, lr, step + 1);
        adam_update(result.space.output_vectors, m_out, v_out, d_out, lr, step + 1);
      }
      ++step;
      result.pairs_seen += batch.size();
    }

    EpochTrace trace;
    trace.sg = sg_pairs > 0 ? sg_weighted / static_cast<double>(sg_pairs) : 0.0;
    trace.iso =
        iso_pairs > 0 ? iso_weighted / static_cast<double>(iso_pairs) : 0.0;
    trace.combined = iso_ctx.has_value()
                         ? (1.0 - config.beta) * trace.sg + config.beta * trace.iso
                         : trace.sg;
    result.trace.push_back(trace);
  }
  return result;
}

}  // namespace isoemb::sgns
