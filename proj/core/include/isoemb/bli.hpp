#pragma once

// Bilingual lexicon induction evaluation: gold-dictionary I/O, coverage
// accounting, precision@1 scoring of mapped spaces, and seed-dictionary
// extraction for training and mapping.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "isoemb/corpus.hpp"
#include "isoemb/embedding.hpp"
#include "isoemb/isoloss.hpp"
#include "isoemb/types.hpp"

namespace isoemb::bli {

enum class Split { unspecified, train, dev, test };
const char* split_name(Split split);

// A gold translation dictionary. Multi-translation entries are merged under
// one source word; `pairs` keeps the unique (source, target) pairs in input
// order so "the first N pairs" is meaningful for seed truncation.
struct GoldLexicon {
  Split split = Split::unspecified;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::unordered_map<std::string, std::vector<std::string>> entries;
  std::vector<std::string> source_order;  // source words, first-seen order
  std::uint64_t malformed_lines = 0;

  std::size_t pair_count() const { return pairs.size(); }
  std::size_t source_count() const { return source_order.size(); }
};

// Parses `source<whitespace>target` lines, lowercased with the corpus
// normalizer's folding. Malformed lines (wrong field count or invalid UTF-8)
// are skipped and counted. A file with zero valid lines is an error.
GoldLexicon load_lexicon(const std::string& path,
                         Split split = Split::unspecified);

// In-memory construction with the same merging/dedup semantics as the loader
// (inputs are folded too).
GoldLexicon make_lexicon(
    const std::vector<std::pair<std::string, std::string>>& raw_pairs,
    Split split = Split::unspecified);

// Slices a full lexicon by source-word rank: keeps entries whose source word
// occupies positions [first_rank, last_rank] (1-based, inclusive) in
// first-seen order. Used to carve dev sets out of "full" dictionaries.
GoldLexicon slice_by_source_rank(const GoldLexicon& full, int first_rank,
                                 int last_rank, Split split = Split::dev);

struct EvalReport {
  double p_at_1 = 0.0;
  double coverage = 0.0;  // evaluated / total gold source words
  int n_evaluated = 0;
  int n_total = 0;
};

// Per-query outcome, reported optionally so rank-frequency effects are
// inspectable. `gold_rank` is the competition rank of the best-ranked gold
// target (1 = nearest neighbor); 0 when no gold target is in the target
// vocabulary.
struct QueryOutcome {
  std::string source;
  std::string retrieved;
  bool correct = false;
  int gold_rank = 0;
};

// P@1 of nearest-neighbor retrieval from mapped source space to mapped
// target space. A gold source word is evaluated iff it is in the source
// vocabulary; a query is correct iff the retrieved target word is one of its
// gold translations. Ties break to the lower row id. Zero evaluable entries
// is an error.
EvalReport evaluate_p1(const EmbeddingSpace& x,
                       const EmbeddingSpace& z,
                       const GoldLexicon& gold,
                       std::vector<QueryOutcome>* per_query = nullptr);

struct SeedSubsetResult {
  isoloss::SeedDictionary dict;
  double retention = 0.0;  // in-vocabulary pairs / all gold pairs
  std::size_t in_vocab = 0;
};

// Gold pairs with both sides in-vocabulary, order preserved, truncated to
// `limit` retained pairs when limit > 0. Requires a train-split (or
// untagged) lexicon; an empty result is an error.
SeedSubsetResult seed_subset(const GoldLexicon& gold,
                             const corpus::Vocabulary& vocab_x,
                             const corpus::Vocabulary& vocab_z, int limit = 0);

}  // namespace isoemb::bli
