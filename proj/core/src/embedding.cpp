#include "isoemb/embedding.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <system_error>

namespace isoemb {

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

// Parses one double starting at s[pos], advancing pos past it and any
// trailing spaces. Returns false when nothing parsable is there.
bool parse_double(const std::string& s, std::size_t& pos, double& out) {
  while (pos < s.size() && s[pos] == ' ') ++pos;
  if (pos >= s.size()) return false;
  const auto res = std::from_chars(s.data() + pos, s.data() + s.size(), out);
  if (res.ec != std::errc()) return false;
  pos = static_cast<std::size_t>(res.ptr - s.data());
  return true;
}

}  // namespace

void write_word2vec_text(const EmbeddingSpace& space, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open embedding file for writing: " + path);
  const auto n = space.vocab.size();
  const auto d = space.input_vectors.cols();
  std::string line;
  line.reserve(64 + static_cast<std::size_t>(d) * 24);
  line += std::to_string(n);
  line += ' ';
  line += std::to_string(d);
  line += '\n';
  out << line;
  for (std::int32_t i = 0; i < n; ++i) {
    line.clear();
    line += space.vocab.words[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) {
      line += ' ';
      append_double(line, space.input_vectors(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw DataError("failed writing embedding file: " + path);
}

EmbeddingSpace read_word2vec_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("embedding file is empty: " + path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  long long n = 0, d = 0;
  {
    std::size_t pos = 0;
    while (pos < line.size() && line[pos] == ' ') ++pos;
    auto r1 = std::from_chars(line.data() + pos, line.data() + line.size(), n);
    if (r1.ec != std::errc()) throw DataError("bad embedding header: " + line);
    pos = static_cast<std::size_t>(r1.ptr - line.data());
    while (pos < line.size() && line[pos] == ' ') ++pos;
    auto r2 = std::from_chars(line.data() + pos, line.data() + line.size(), d);
    if (r2.ec != std::errc()) throw DataError("bad embedding header: " + line);
  }
  if (n <= 0 || d <= 0) {
    throw DataError("embedding header must declare positive n and d");
  }

  EmbeddingSpace space;
  space.vocab.words.reserve(static_cast<std::size_t>(n));
  space.vocab.counts.assign(static_cast<std::size_t>(n), 0);
  space.input_vectors.resize(n, d);

  for (long long i = 0; i < n; ++i) {
    if (!std::getline(in, line)) {
      throw DataError("embedding file truncated at row " + std::to_string(i));
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t sp = line.find(' ');
    if (sp == std::string::npos || sp == 0) {
      throw DataError("malformed embedding row " + std::to_string(i));
    }
    std::string word = line.substr(0, sp);
    std::size_t pos = sp;
    for (long long j = 0; j < d; ++j) {
      double v;
      if (!parse_double(line, pos, v)) {
        throw DataError("bad number in embedding row for '" + word + "'");
      }
      space.input_vectors(i, j) = v;
    }
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos != line.size()) {
      throw DataError("embedding row for '" + word + "' has extra columns");
    }
    const auto [it, inserted] = space.vocab.word_to_id.emplace(
        word, static_cast<std::int32_t>(space.vocab.words.size()));
    if (!inserted) {
      throw DataError("duplicate word in embedding file: " + word);
    }
    space.vocab.words.push_back(std::move(word));
  }
  if (!space.input_vectors.allFinite()) {
    throw NumericError("embedding file contains non-finite values: " + path);
  }
  return space;
}

}  // namespace isoemb
