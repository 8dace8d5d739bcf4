#pragma once

#include <string>

#include "isoemb/corpus.hpp"
#include "isoemb/types.hpp"

namespace isoemb {

// A trained (or loaded) embedding space. `input_vectors` are the word vectors
// exported downstream; `output_vectors` are the context vectors used
// internally by the trainer and may be empty for loaded spaces.
struct EmbeddingSpace {
  corpus::Vocabulary vocab;
  Mat input_vectors;   // n x d
  Mat output_vectors;  // n x d, or 0 x 0 when not present

  std::int32_t size() const { return vocab.size(); }
  int dim() const { return static_cast<int>(input_vectors.cols()); }
};

// Writes the input vectors in word2vec text format: a `n d` header line, then
// one `word v1 ... vd` line per word, space-separated, shortest
// round-trippable decimal, locale-independent.
void write_word2vec_text(const EmbeddingSpace& space, const std::string& path);

// Reads word2vec text format. The resulting vocabulary preserves file order
// (conventionally frequency order) with all counts zero; output_vectors is
// empty. Throws DataError on malformed headers, rows of the wrong width,
// unparsable numbers, or duplicate words.
EmbeddingSpace read_word2vec_text(const std::string& path);

}  // namespace isoemb
