#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "isoemb/types.hpp"

namespace isoemb::corpus {

// Counters produced while normalizing raw text.
struct NormalizeStats {
  std::uint64_t invalid_utf8_lines = 0;
};

// Lowercases, strips control/format characters, detaches punctuation into
// standalone tokens, and splits on whitespace. Lines containing invalid UTF-8
// are skipped entirely (empty result) and counted in `stats` when provided.
//
// Case folding covers ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic;
// characters from other scripts pass through unchanged. Input is expected to
// be in NFC form already (no composition normalization is performed).
std::vector<std::string> normalize_line(std::string_view line,
                                        NormalizeStats* stats = nullptr);

// Lowercases a UTF-8 string with the same folding normalize_line applies,
// without any tokenization. Returns false on invalid UTF-8 (out untouched).
bool fold_case(std::string_view in, std::string& out);

// A rewindable stream of tokenized sentences.
class SentenceSource {
 public:
  virtual ~SentenceSource() = default;
  virtual void reset() = 0;
  // Fills `sentence` with the next non-empty sentence; false at end of stream.
  virtual bool next(std::vector<std::string>& sentence) = 0;
};

// Reads a one-sentence-per-line UTF-8 text file through normalize_line.
class TextFileSource : public SentenceSource {
 public:
  explicit TextFileSource(const std::string& path);
  void reset() override;
  bool next(std::vector<std::string>& sentence) override;
  const NormalizeStats& stats() const { return stats_; }

 private:
  std::string path_;
  std::ifstream in_;
  NormalizeStats stats_;
};

// Serves pre-tokenized sentences from memory (tests, synthetic corpora).
class VectorSource : public SentenceSource {
 public:
  explicit VectorSource(std::vector<std::vector<std::string>> sentences)
      : sentences_(std::move(sentences)) {}
  void reset() override { next_ = 0; }
  bool next(std::vector<std::string>& sentence) override;

 private:
  std::vector<std::vector<std::string>> sentences_;
  std::size_t next_ = 0;
};

struct Vocabulary {
  // Descending count; ties broken lexicographically. Ids equal positions.
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  std::unordered_map<std::string, std::int32_t> word_to_id;
  std::uint64_t total_tokens = 0;  // sum of retained counts

  std::int32_t size() const { return static_cast<std::int32_t>(words.size()); }
  // -1 when absent.
  std::int32_t id_of(std::string_view word) const;
  bool contains(std::string_view word) const { return id_of(word) >= 0; }
};

// Counts every token in the stream and keeps words with count >= min_count.
// Throws DataError when nothing survives the threshold.
Vocabulary build_vocab(SentenceSource& source, std::uint64_t min_count);

// Writes `word<TAB>count` per line in id order.
void write_vocab(const Vocabulary& vocab, std::ostream& out);

// Options controlling pair generation. Draw protocol (relevant for
// reproducing streams externally): two splitmix64 streams are derived from
// `seed` — tag 0x77 for effective-window draws, tag 0x5b for subsampling
// draws. Per sentence: out-of-vocabulary tokens are dropped first; if
// subsampling is enabled, one uniform draw is consumed per surviving token in
// order (token kept when draw < keep probability); then for each kept token,
// in order, one window draw b = 1 + (next() % window) is consumed when
// dynamic_window is set, else b = window.
struct PairStreamOptions {
  int window = 5;
  bool dynamic_window = true;  // word2vec effective-window convention
  bool subsample = false;
  double subsample_t = 1e-3;
  std::uint64_t seed = 1;
};
constexpr std::uint64_t kWindowStreamTag = 0x77;
constexpr std::uint64_t kSubsampleStreamTag = 0x5b;

// Keep probability for a word occurring `count` times out of `total` retained
// tokens: min(1, sqrt(t/f) + t/f) with f = count/total.
double subsample_keep_prob(std::uint64_t count, std::uint64_t total, double t);

// Streams (center, context) id pairs for one pass over the source.
class PairStream {
 public:
  PairStream(SentenceSource& source, const Vocabulary& vocab,
             const PairStreamOptions& options);
  // False at end of the pass.
  bool next(std::int32_t& center, std::int32_t& context);
  std::uint64_t dropped_tokens() const { return dropped_; }     // OOV
  std::uint64_t subsampled_tokens() const { return subsampled_; }

 private:
  bool advance_sentence();

  SentenceSource& source_;
  const Vocabulary& vocab_;
  PairStreamOptions options_;
  SplitMix64 window_rng_;
  SplitMix64 subsample_rng_;
  std::vector<std::int32_t> sentence_;
  std::size_t pos_ = 0;   // current center index in sentence_
  std::size_t lo_ = 0, hi_ = 0, off_ = 0;  // context window state
  bool in_window_ = false;
  std::uint64_t dropped_ = 0;
  std::uint64_t subsampled_ = 0;
  std::vector<std::string> scratch_;
};

// One training batch: parallel center/context id lists plus k negative ids
// per pair (flattened row-major, negatives.size() == centers.size() * k).
struct PairBatch {
  std::vector<std::int32_t> centers;
  std::vector<std::int32_t> contexts;
  std::vector<std::int32_t> negatives;
  int k = 0;

  std::size_t size() const { return centers.size(); }
};

// Draws negatives from the unigram^power distribution (power 0.75) with
// re-draws whenever the sample equals the context id.
class NegativeSampler {
 public:
  explicit NegativeSampler(const Vocabulary& vocab, double power = 0.75);
  // Writes k ids into out[0..k). Throws DataError for single-word
  // vocabularies (the context id cannot be avoided).
  void sample(std::int32_t context, int k, SplitMix64& rng,
              std::int32_t* out) const;

 private:
  std::vector<double> cumulative_;  // cumulative weights, size n
};

}  // namespace isoemb::corpus
