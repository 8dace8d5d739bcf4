#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "isoemb/corpus.hpp"
#include "isoemb/geometry.hpp"
#include "isoemb/mapping.hpp"
#include "isoemb/sgns.hpp"
#include "test_support.hpp"

using namespace isoemb;
namespace ts = test_support;

namespace {

corpus::Vocabulary flat_vocab(int n, std::uint64_t count_each = 5) {
  corpus::Vocabulary vocab;
  for (int i = 0; i < n; ++i) {
    const std::string w = "v" + std::to_string(i);
    vocab.words.push_back(w);
    vocab.counts.push_back(count_each);
    vocab.word_to_id[w] = i;
    vocab.total_tokens += count_each;
  }
  return vocab;
}

EmbeddingSpace random_space(ts::Rng& rng, const corpus::Vocabulary& vocab, int d,
                            double scale = 0.5) {
  EmbeddingSpace space;
  space.vocab = vocab;
  space.input_vectors = ts::random_matrix(rng, vocab.size(), d, scale);
  space.output_vectors = ts::random_matrix(rng, vocab.size(), d, scale);
  return space;
}

// A tiny deterministic topic-structured corpus: sentences draw words from one
// of a few clusters, giving the trainer real co-occurrence signal.
std::vector<std::vector<std::string>> clustered_sentences(int n_sentences,
                                                          int n_words,
                                                          int n_clusters,
                                                          std::uint64_t seed) {
  ts::Rng rng(seed);
  std::vector<std::vector<std::string>> sentences;
  for (int s = 0; s < n_sentences; ++s) {
    const int cluster = rng.below(n_clusters);
    const int lo = cluster * n_words / n_clusters;
    const int hi = (cluster + 1) * n_words / n_clusters;
    std::vector<std::string> sentence;
    const int len = 6 + rng.below(6);
    for (int t = 0; t < len; ++t) {
      sentence.push_back("v" + std::to_string(lo + rng.below(hi - lo)));
    }
    sentences.push_back(std::move(sentence));
  }
  return sentences;
}

}  // namespace

TEST_CASE("batch loss on all-zero vectors is (k+1) log 2") {
  const auto vocab = flat_vocab(5);
  EmbeddingSpace space;
  space.vocab = vocab;
  space.input_vectors = Mat::Zero(5, 4);
  space.output_vectors = Mat::Zero(5, 4);
  corpus::PairBatch batch;
  batch.centers = {0};
  batch.contexts = {1};
  batch.negatives = {2, 3, 4};
  batch.k = 3;
  const auto res = sgns::sgns_batch_loss(batch, space);
  CHECK(res.loss == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("batch loss approaches k log 2 for a saturated positive pair") {
  const auto vocab = flat_vocab(4);
  EmbeddingSpace space;
  space.vocab = vocab;
  space.input_vectors = Mat::Zero(4, 3);
  space.output_vectors = Mat::Zero(4, 3);
  // Strongly aligned center/context; negatives stay orthogonal (zero dot).
  space.input_vectors(0, 0) = 40.0;
  space.output_vectors(1, 0) = 1.0;
  corpus::PairBatch batch;
  batch.centers = {0};
  batch.contexts = {1};
  batch.negatives = {2, 3};
  batch.k = 2;
  const auto res = sgns::sgns_batch_loss(batch, space);
  CHECK(res.loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("batch loss gradients pass the finite-difference check") {
  ts::Rng rng(21);
  const auto vocab = flat_vocab(10);
  auto space = random_space(rng, vocab, 4);
  corpus::PairBatch batch;
  batch.centers = {0, 3, 7, 2};
  batch.contexts = {1, 4, 8, 9};
  batch.negatives = {5, 6, 2, 0, 1, 9, 3, 4};
  batch.k = 2;

  const auto res = sgns::sgns_batch_loss(batch, space);
  CHECK(res.loss >= 0.0);

  const auto loss_of_input = [&](const Mat& m) {
    EmbeddingSpace s = space;
    s.input_vectors = m;
    return sgns::sgns_batch_loss(batch, s).loss;
  };
  CHECK(ts::fd_max_rel_err(loss_of_input, space.input_vectors, res.d_input) < 1e-4);

  const auto loss_of_output = [&](const Mat& m) {
    EmbeddingSpace s = space;
    s.output_vectors = m;
    return sgns::sgns_batch_loss(batch, s).loss;
  };
  CHECK(ts::fd_max_rel_err(loss_of_output, space.output_vectors, res.d_output) < 1e-4);
}

TEST_CASE("combined loss reduces to its parts at beta 0 and 1") {
  ts::Rng rng(22);
  const auto vocab = flat_vocab(12);
  auto space = random_space(rng, vocab, 5);
  auto reference_space = random_space(rng, vocab, 5);
  const auto reference = sgns::ReferenceSpace::from_space(reference_space);

  isoloss::SeedDictionary seeds;
  for (int i = 0; i < 8; ++i) seeds.pairs.emplace_back(i, i);

  corpus::PairBatch batch;
  batch.centers = {0, 5, 11};
  batch.contexts = {1, 6, 10};
  batch.negatives = {2, 3, 7, 8, 4, 9};
  batch.k = 2;

  sgns::TrainConfig config;
  config.loss_kind = sgns::LossKind::none;
  config.beta = 0.0;
  const auto at_zero = sgns::combined_loss(batch, space, &reference, &seeds, config);
  const auto sg_only = sgns::sgns_batch_loss(batch, space);
  CHECK(at_zero.breakdown.combined == doctest::Approx(sg_only.loss).epsilon(1e-12));
  CHECK((at_zero.d_input - sg_only.d_input).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((at_zero.d_output - sg_only.d_output).cwiseAbs().maxCoeff() < 1e-12);

  config.loss_kind = sgns::LossKind::rsim;
  config.beta = 1.0;
  const auto at_one = sgns::combined_loss(batch, space, &reference, &seeds, config);
  CHECK(at_one.breakdown.combined == doctest::Approx(at_one.breakdown.iso).epsilon(1e-12));
  CHECK(at_one.d_output.cwiseAbs().maxCoeff() == 0.0);

  config.beta = 0.333;
  const auto mixed = sgns::combined_loss(batch, space, &reference, &seeds, config);
  const double expected =
      0.667 * mixed.breakdown.sg + 0.333 * mixed.breakdown.iso;
  CHECK(mixed.breakdown.combined == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("combined loss gradients flow through preprocessing") {
  ts::Rng rng(23);
  const auto vocab = flat_vocab(10);
  auto space = random_space(rng, vocab, 4);
  auto reference_space = random_space(rng, vocab, 4);
  const auto reference = sgns::ReferenceSpace::from_space(reference_space);
  isoloss::SeedDictionary seeds;
  for (int i = 0; i < 6; ++i) seeds.pairs.emplace_back(i, i);

  corpus::PairBatch batch;
  batch.centers = {0, 2};
  batch.contexts = {1, 3};
  batch.negatives = {4, 5, 6, 7};
  batch.k = 2;

  // proc_l2 is excluded: its step gradient freezes the solved alignment, so
  // differencing the full evaluation (which re-solves it) measures a
  // different function. Its gradient is checked at the frozen alignment in
  // the loss-level tests; the preprocessing chain rule is shared.
  for (const auto kind : {sgns::LossKind::l2, sgns::LossKind::rsim,
                          sgns::LossKind::rsim_u}) {
    sgns::TrainConfig config;
    config.loss_kind = kind;
    config.beta = 0.4;
    config.unsup_k = 8;
    const auto res = sgns::combined_loss(batch, space, &reference, &seeds, config);
    const auto value = [&](const Mat& m) {
      EmbeddingSpace s = space;
      s.input_vectors = m;
      return sgns::combined_loss(batch, s, &reference, &seeds, config)
          .breakdown.combined;
    };
    CHECK(ts::fd_max_rel_err(value, space.input_vectors, res.d_input) < 1e-4);
  }
}

TEST_CASE("learning rate schedule warms up then decays linearly") {
  sgns::TrainConfig config;
  config.base_lr = 0.002;
  config.warmup_fraction = 0.25;
  const std::int64_t total = 1000;
  CHECK(sgns::lr_at(0, total, config) == 0.0);
  CHECK(sgns::lr_at(250, total, config) ==
        doctest::Approx(config.base_lr).epsilon(1e-12));  // warmup peak
  CHECK(sgns::lr_at(total, total, config) == 0.0);
  // Midpoint of the decay segment (250 -> 1000) is 625.
  CHECK(sgns::lr_at(625, total, config) ==
        doctest::Approx(config.base_lr / 2.0).epsilon(1e-12));
}

TEST_CASE("initialization bounds and determinism") {
  const auto vocab = flat_vocab(30);
  sgns::TrainConfig config;
  config.dim = 8;
  config.rng_seed = 5;
  const auto space = sgns::init_space(vocab, config);
  CHECK(space.input_vectors.cwiseAbs().maxCoeff() <= 0.5 / 8.0);
  CHECK(space.input_vectors.cwiseAbs().maxCoeff() > 0.0);
  CHECK(space.output_vectors.cwiseAbs().maxCoeff() == 0.0);
  const auto again = sgns::init_space(vocab, config);
  CHECK((space.input_vectors - again.input_vectors).cwiseAbs().maxCoeff() == 0.0);
  config.rng_seed = 6;
  const auto other = sgns::init_space(vocab, config);
  CHECK((space.input_vectors - other.input_vectors).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("seed initialization overwrites exactly the dictionary rows") {
  ts::Rng rng(24);
  const auto vocab = flat_vocab(20);
  auto space = random_space(rng, vocab, 6);
  auto reference_space = random_space(rng, vocab, 6);
  const auto reference = sgns::ReferenceSpace::from_space(reference_space);

  isoloss::SeedDictionary empty;
  const Mat before = space.input_vectors;
  const auto none = sgns::init_with_reference(space, reference, empty);
  CHECK(none.overwritten == 0);
  CHECK((space.input_vectors - before).cwiseAbs().maxCoeff() == 0.0);

  isoloss::SeedDictionary one;
  one.pairs.emplace_back(3, 7);
  const auto single = sgns::init_with_reference(space, reference, one);
  CHECK(single.overwritten == 1);
  for (int j = 0; j < 6; ++j) {
    CHECK(space.input_vectors(3, j) == reference.vectors(7, j));  // bit exact
  }
  for (int i = 0; i < 20; ++i) {
    if (i == 3) continue;
    for (int j = 0; j < 6; ++j) CHECK(space.input_vectors(i, j) == before(i, j));
  }

  // Duplicate sources keep the first target; count equals unique sources.
  auto space2 = random_space(rng, vocab, 6);
  isoloss::SeedDictionary dup;
  dup.pairs = {{1, 2}, {4, 5}, {1, 9}, {6, 0}, {4, 5}};
  const auto multi = sgns::init_with_reference(space2, reference, dup);
  CHECK(multi.overwritten == 3);
  CHECK(multi.duplicates_ignored == 2);
  for (int j = 0; j < 6; ++j) {
    CHECK(space2.input_vectors(1, j) == reference.vectors(2, j));  // first kept
  }
}

TEST_CASE("config validation rejects inconsistent settings") {
  sgns::TrainConfig config;
  config.loss_kind = sgns::LossKind::rsim;
  config.beta = 0.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.beta = 1.5;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.beta = 0.1;
  config.dim = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config.dim = 8;
  CHECK_NOTHROW(config.validate());
}

TEST_CASE("training lowers the distributional loss below its starting value") {
  const auto sentences = clustered_sentences(500, 24, 4, 77);
  corpus::VectorSource vocab_src(sentences);
  const auto vocab = corpus::build_vocab(vocab_src, 1);

  sgns::TrainConfig config;
  config.dim = 12;
  config.window = 2;
  config.negatives = 5;
  config.min_count = 1;
  config.batch_size = 512;
  config.epochs = 3;
  config.base_lr = 0.003;
  config.rng_seed = 3;

  corpus::VectorSource train_src(sentences);
  const auto result = sgns::train(train_src, vocab, nullptr, nullptr, config);
  REQUIRE(result.trace.size() == 3);
  // With zero-initialized output vectors every pair starts at (k+1) log 2.
  const double initial = (config.negatives + 1) * std::log(2.0);
  CHECK(result.trace.back().sg < initial);
  CHECK(result.trace.back().sg < result.trace.front().sg);
  CHECK(result.space.input_vectors.allFinite());
  CHECK(result.total_steps > 0);

  // Determinism: the same seed reproduces the space bit for bit.
  corpus::VectorSource again_src(sentences);
  const auto again = sgns::train(again_src, vocab, nullptr, nullptr, config);
  CHECK((result.space.input_vectors - again.space.input_vectors)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("rsim training raises relational similarity over the baseline") {
  // Two views of the same clustered corpus; the reference is a separately
  // trained target space. Averaged over three seeds, the rsim-trained space
  // must correlate better with the reference's cosine structure.
  const auto sentences = clustered_sentences(500, 24, 4, 91);
  corpus::VectorSource vocab_src(sentences);
  const auto vocab = corpus::build_vocab(vocab_src, 1);

  sgns::TrainConfig ref_config;
  ref_config.dim = 12;
  ref_config.window = 2;
  ref_config.negatives = 5;
  ref_config.min_count = 1;
  ref_config.batch_size = 512;
  ref_config.epochs = 3;
  ref_config.base_lr = 0.003;
  ref_config.rng_seed = 1000;
  corpus::VectorSource ref_src(sentences);
  const auto ref_result = sgns::train(ref_src, vocab, nullptr, nullptr, ref_config);
  const auto reference = sgns::ReferenceSpace::from_space(ref_result.space);

  isoloss::SeedDictionary seeds;
  for (int i = 0; i < vocab.size(); ++i) seeds.pairs.emplace_back(i, i);

  double baseline_sum = 0.0, rsim_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    sgns::TrainConfig config = ref_config;
    config.rng_seed = seed;

    config.loss_kind = sgns::LossKind::none;
    config.beta = 0.0;
    corpus::VectorSource base_src(sentences);
    const auto base = sgns::train(base_src, vocab, nullptr, nullptr, config);
    baseline_sum += geometry::relational_similarity(
        mapping::preprocess(base.space.input_vectors), reference.vectors, seeds);

    config.loss_kind = sgns::LossKind::rsim;
    config.beta = 0.01;
    corpus::VectorSource rsim_src(sentences);
    const auto rsim = sgns::train(rsim_src, vocab, &reference, &seeds, config);
    rsim_sum += geometry::relational_similarity(
        mapping::preprocess(rsim.space.input_vectors), reference.vectors, seeds);
  }
  CHECK(rsim_sum / 3.0 > baseline_sum / 3.0);
}

TEST_CASE("a beta 1 run completes with finite values") {
  const auto sentences = clustered_sentences(120, 16, 2, 5);
  corpus::VectorSource vocab_src(sentences);
  const auto vocab = corpus::build_vocab(vocab_src, 1);

  ts::Rng rng(30);
  corpus::Vocabulary ref_vocab = vocab;
  EmbeddingSpace ref_space;
  ref_space.vocab = ref_vocab;
  ref_space.input_vectors = ts::random_matrix(rng, vocab.size(), 8);
  const auto reference = sgns::ReferenceSpace::from_space(ref_space);

  sgns::TrainConfig config;
  config.dim = 8;
  config.window = 2;
  config.negatives = 3;
  config.min_count = 1;
  config.batch_size = 256;
  config.epochs = 2;
  config.loss_kind = sgns::LossKind::rsim_u;
  config.beta = 1.0;
  config.unsup_k = 16;
  config.rng_seed = 9;

  corpus::VectorSource src(sentences);
  const auto result = sgns::train(src, vocab, &reference, nullptr, config);
  CHECK(result.space.input_vectors.allFinite());
  for (const auto& epoch : result.trace) {
    CHECK(std::isfinite(epoch.combined));
  }
}
