#include "isoemb/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace isoemb::corpus {

namespace {

// --- UTF-8 decoding -------------------------------------------------------

// Decodes one codepoint starting at `i`; returns false on malformed input
// (overlong forms, surrogates, out-of-range, truncation).
bool decode_utf8(std::string_view s, std::size_t& i, char32_t& cp) {
  const auto byte = [&](std::size_t k) -> unsigned {
    return static_cast<unsigned char>(s[k]);
  };
  const unsigned b0 = byte(i);
  if (b0 < 0x80) {
    cp = b0;
    i += 1;
    return true;
  }
  int len;
  char32_t value;
  if ((b0 & 0xe0) == 0xc0) {
    len = 2;
    value = b0 & 0x1f;
  } else if ((b0 & 0xf0) == 0xe0) {
    len = 3;
    value = b0 & 0x0f;
  } else if ((b0 & 0xf8) == 0xf0) {
    len = 4;
    value = b0 & 0x07;
  } else {
    return false;
  }
  if (i + len > s.size()) return false;
  for (int k = 1; k < len; ++k) {
    const unsigned b = byte(i + k);
    if ((b & 0xc0) != 0x80) return false;
    value = (value << 6) | (b & 0x3f);
  }
  static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
  if (value < kMin[len]) return false;                    // overlong
  if (value >= 0xd800 && value <= 0xdfff) return false;   // surrogate
  if (value > 0x10ffff) return false;
  cp = value;
  i += len;
  return true;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

// --- character classes ----------------------------------------------------

bool is_whitespace(char32_t c) {
  switch (c) {
    case 0x09: case 0x0a: case 0x0b: case 0x0c: case 0x0d: case 0x20:
    case 0x85: case 0xa0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202f: case 0x205f: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200a;
  }
}

// Control (Cc) and format (Cf) characters vanish entirely.
bool is_control_or_format(char32_t c) {
  if (c < 0x09) return true;
  if (c >= 0x0e && c < 0x20) return true;
  if (c == 0x7f || (c >= 0x80 && c <= 0x9f && c != 0x85)) return true;
  if (c == 0xad) return true;                       // soft hyphen
  if (c >= 0x200b && c <= 0x200f) return true;      // zero-width, direction marks
  if (c >= 0x202a && c <= 0x202e) return true;      // bidi embedding
  if (c >= 0x2060 && c <= 0x2064) return true;      // word joiner etc.
  if (c == 0xfeff) return true;                     // BOM / ZWNBSP
  return false;
}

// Punctuation and symbol characters detached into standalone tokens. Covers
// ASCII punctuation and the common Unicode punctuation blocks; letters,
// digits and everything else stay inside tokens.
bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) ||
           (c >= 0x5b && c <= 0x60) || (c >= 0x7b && c <= 0x7e);
  }
  if (c >= 0xa1 && c <= 0xbf && c != 0xaa && c != 0xb5 && c != 0xba) return true;
  if (c == 0xd7 || c == 0xf7) return true;
  if (c >= 0x2010 && c <= 0x2027) return true;      // dashes, quotes, daggers
  if (c >= 0x2030 && c <= 0x205e) return true;      // permille, primes, etc.
  if (c >= 0x20a0 && c <= 0x20bf) return true;      // currency signs
  if (c >= 0x2190 && c <= 0x2bff) return true;      // arrows, math, misc symbols
  if (c >= 0x3001 && c <= 0x303f) return true;      // CJK punctuation
  if (c >= 0xfe50 && c <= 0xfe6f) return true;      // small form variants
  if (c >= 0xff01 && c <= 0xff0f) return true;      // fullwidth punctuation
  if (c >= 0xff1a && c <= 0xff20) return true;
  if (c >= 0xff3b && c <= 0xff40) return true;
  if (c >= 0xff5b && c <= 0xff65) return true;
  return false;
}

// Simple case folding: ASCII, Latin-1, Latin Extended-A, Greek, Cyrillic.
char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 0x20;
  if (c >= 0xc0 && c <= 0xde && c != 0xd7) return c + 0x20;  // Latin-1
  if (c == 0x130) return 'i';  // dotted capital I (pairing breaks here)
  if (c >= 0x100 && c <= 0x137) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x14a && c <= 0x177) return (c % 2 == 0) ? c + 1 : c;
  if (c == 0x178) return 0xff;  // capital Y with diaeresis
  if (c >= 0x179 && c <= 0x17e) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x391 && c <= 0x3a9 && c != 0x3a2) return c + 0x20;  // Greek
  if (c >= 0x410 && c <= 0x42f) return c + 0x20;                // Cyrillic
  if (c >= 0x400 && c <= 0x40f) return c + 0x50;                // Ё etc.
  return c;
}

}  // namespace

std::vector<std::string> normalize_line(std::string_view line,
                                        NormalizeStats* stats) {
  // First pass: validate and decode. A single malformed sequence discards
  // the whole line.
  std::vector<char32_t> cps;
  cps.reserve(line.size());
  {
    std::size_t i = 0;
    char32_t cp;
    while (i < line.size()) {
      if (!decode_utf8(line, i, cp)) {
        if (stats) ++stats->invalid_utf8_lines;
        return {};
      }
      cps.push_back(cp);
    }
  }

  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&]() {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (char32_t c : cps) {
    if (is_control_or_format(c)) continue;
    if (is_whitespace(c)) {
      flush();
      continue;
    }
    if (is_punct(c)) {
      flush();
      std::string p;
      append_utf8(p, c);
      tokens.push_back(std::move(p));
      continue;
    }
    append_utf8(current, to_lower(c));
  }
  flush();
  return tokens;
}

bool fold_case(std::string_view in, std::string& out) {
  std::string folded;
  folded.reserve(in.size());
  std::size_t i = 0;
  char32_t cp;
  while (i < in.size()) {
    if (!decode_utf8(in, i, cp)) return false;
    append_utf8(folded, to_lower(cp));
  }
  out = std::move(folded);
  return true;
}

TextFileSource::TextFileSource(const std::string& path) : path_(path) {
  in_.open(path_, std::ios::binary);
  if (!in_) throw DataError("cannot open corpus file: " + path_);
}

void TextFileSource::reset() {
  in_.clear();
  in_.seekg(0);
  stats_ = NormalizeStats{};
}

bool TextFileSource::next(std::vector<std::string>& sentence) {
  std::string line;
  while (std::getline(in_, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    sentence = normalize_line(line, &stats_);
    if (!sentence.empty()) return true;
  }
  return false;
}

bool VectorSource::next(std::vector<std::string>& sentence) {
  while (next_ < sentences_.size()) {
    sentence = sentences_[next_++];
    if (!sentence.empty()) return true;
  }
  return false;
}

std::int32_t Vocabulary::id_of(std::string_view word) const {
  auto it = word_to_id.find(std::string(word));
  return it == word_to_id.end() ? -1 : it->second;
}

Vocabulary build_vocab(SentenceSource& source, std::uint64_t min_count) {
  std::unordered_map<std::string, std::uint64_t> freq;
  std::vector<std::string> sentence;
  while (source.next(sentence)) {
    for (const auto& tok : sentence) ++freq[tok];
  }

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  kept.reserve(freq.size());
  for (auto& [word, count] : freq) {
    if (count >= min_count) kept.emplace_back(word, count);
  }
  if (kept.empty()) {
    throw DataError("empty vocabulary: no word reaches min_count=" +
                    std::to_string(min_count));
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.words.reserve(kept.size());
  vocab.counts.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    vocab.words.push_back(kept[i].first);
    vocab.counts.push_back(kept[i].second);
    vocab.word_to_id.emplace(kept[i].first, static_cast<std::int32_t>(i));
    vocab.total_tokens += kept[i].second;
  }
  return vocab;
}

void write_vocab(const Vocabulary& vocab, std::ostream& out) {
  for (std::int32_t i = 0; i < vocab.size(); ++i) {
    out << vocab.words[i] << '\t' << vocab.counts[i] << '\n';
  }
}

double subsample_keep_prob(std::uint64_t count, std::uint64_t total, double t) {
  const double f = static_cast<double>(count) / static_cast<double>(total);
  return std::min(1.0, std::sqrt(t / f) + t / f);
}

PairStream::PairStream(SentenceSource& source, const Vocabulary& vocab,
                       const PairStreamOptions& options)
    : source_(source),
      vocab_(vocab),
      options_(options),
      window_rng_(mix_seed(options.seed, kWindowStreamTag)),
      subsample_rng_(mix_seed(options.seed, kSubsampleStreamTag)) {
  if (options.window < 1) throw ConfigError("window must be >= 1");
}

bool PairStream::advance_sentence() {
  while (source_.next(scratch_)) {
    sentence_.clear();
    for (const auto& tok : scratch_) {
      const std::int32_t id = vocab_.id_of(tok);
      if (id < 0) {
        ++dropped_;
        continue;
      }
      if (options_.subsample) {
        const double keep = subsample_keep_prob(
            vocab_.counts[static_cast<std::size_t>(id)], vocab_.total_tokens,
            options_.subsample_t);
        if (subsample_rng_.next_double() >= keep) {
          ++subsampled_;
          continue;
        }
      }
      sentence_.push_back(id);
    }
    if (!sentence_.empty()) {
      pos_ = 0;
      in_window_ = false;
      return true;
    }
  }
  return false;
}

bool PairStream::next(std::int32_t& center, std::int32_t& context) {
  for (;;) {
    if (!in_window_) {
      if (pos_ >= sentence_.size()) {
        if (!advance_sentence()) return false;
      }
      // Effective window for this center token.
      const std::size_t b =
          options_.dynamic_window
              ? 1 + static_cast<std::size_t>(window_rng_.next_below(
                        static_cast<std::uint64_t>(options_.window)))
              : static_cast<std::size_t>(options_.window);
      lo_ = (pos_ >= b) ? pos_ - b : 0;
      hi_ = std::min(sentence_.size() - 1, pos_ + b);
      off_ = lo_;
      in_window_ = true;
    }
    while (off_ <= hi_) {
      const std::size_t j = off_++;
      if (j == pos_) continue;
      center = sentence_[pos_];
      context = sentence_[j];
      return true;
    }
    in_window_ = false;
    ++pos_;
  }
}

NegativeSampler::NegativeSampler(const Vocabulary& vocab, double power) {
  cumulative_.reserve(vocab.counts.size());
  double running = 0.0;
  for (std::uint64_t c : vocab.counts) {
    running += std::pow(static_cast<double>(c), power);
    cumulative_.push_back(running);
  }
  if (cumulative_.empty()) throw DataError("negative sampler: empty vocabulary");
}

void NegativeSampler::sample(std::int32_t context, int k, SplitMix64& rng,
                             std::int32_t* out) const {
  if (cumulative_.size() < 2) {
    throw DataError(
        "negative sampling impossible: vocabulary has a single word");
  }
  const double total = cumulative_.back();
  for (int i = 0; i < k; ++i) {
    std::int32_t id;
    int guard = 0;
    do {
      const double u = rng.next_double() * total;
      id = static_cast<std::int32_t>(
          std::upper_bound(cumulative_.begin(), cumulative_.end(), u) -
          cumulative_.begin());
      if (id >= static_cast<std::int32_t>(cumulative_.size())) {
        id = static_cast<std::int32_t>(cumulative_.size()) - 1;
      }
      if (++guard > 1000000) {
        throw NumericError("negative sampling failed to avoid context id");
      }
    } while (id == context);
    out[i] = id;
  }
}

}  // namespace isoemb::corpus
