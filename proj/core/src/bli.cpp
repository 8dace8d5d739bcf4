#include "isoemb/bli.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <unordered_set>

namespace isoemb::bli {

namespace {

void add_pair(GoldLexicon& lex, const std::string& src, const std::string& trg,
              std::unordered_set<std::string>& seen_pairs) {
  if (!seen_pairs.insert(src + '\t' + trg).second) return;
  lex.pairs.emplace_back(src, trg);
  auto it = lex.entries.find(src);
  if (it == lex.entries.end()) {
    lex.entries.emplace(src, std::vector<std::string>{trg});
    lex.source_order.push_back(src);
  } else {
    it->second.push_back(trg);
  }
}

// Splits a dictionary line into exactly two whitespace-separated fields.
bool split_fields(const std::string& line, std::string& src, std::string& trg) {
  const char* ws = " \t";
  const auto a0 = line.find_first_not_of(ws);
  if (a0 == std::string::npos) return false;
  const auto a1 = line.find_first_of(ws, a0);
  if (a1 == std::string::npos) return false;
  const auto b0 = line.find_first_not_of(ws, a1);
  if (b0 == std::string::npos) return false;
  const auto b1 = line.find_first_of(ws, b0);
  if (b1 != std::string::npos &&
      line.find_first_not_of(ws, b1) != std::string::npos) {
    return false;  // a third field
  }
  src = line.substr(a0, a1 - a0);
  trg = line.substr(b0, (b1 == std::string::npos ? line.size() : b1) - b0);
  return true;
}

}  // namespace

const char* split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
    case Split::unspecified: return "unspecified";
  }
  return "unspecified";
}

GoldLexicon load_lexicon(const std::string& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dictionary file: " + path);

  GoldLexicon lex;
  lex.split = split;
  std::unordered_set<std::string> seen;
  std::string line, src, trg, src_folded, trg_folded;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!split_fields(line, src, trg) || !corpus::fold_case(src, src_folded) ||
        !corpus::fold_case(trg, trg_folded)) {
      ++lex.malformed_lines;
      continue;
    }
    add_pair(lex, src_folded, trg_folded, seen);
  }
  if (lex.pairs.empty()) {
    throw DataError("dictionary has no valid entries: " + path);
  }
  return lex;
}

GoldLexicon make_lexicon(
    const std::vector<std::pair<std::string, std::string>>& raw_pairs,
    Split split) {
  GoldLexicon lex;
  lex.split = split;
  std::unordered_set<std::string> seen;
  std::string src, trg;
  for (const auto& [s, t] : raw_pairs) {
    if (!corpus::fold_case(s, src) || !corpus::fold_case(t, trg)) {
      ++lex.malformed_lines;
      continue;
    }
    add_pair(lex, src, trg, seen);
  }
  if (lex.pairs.empty()) throw DataError("dictionary has no valid entries");
  return lex;
}

GoldLexicon slice_by_source_rank(const GoldLexicon& full, int first_rank,
                                 int last_rank, Split split) {
  if (first_rank < 1 || last_rank < first_rank) {
    throw ConfigError("invalid source rank range");
  }
  std::unordered_set<std::string> wanted;
  const auto hi = std::min<std::size_t>(last_rank, full.source_order.size());
  for (std::size_t r = static_cast<std::size_t>(first_rank); r <= hi; ++r) {
    wanted.insert(full.source_order[r - 1]);
  }
  GoldLexicon out;
  out.split = split;
  std::unordered_set<std::string> seen;
  for (const auto& [src, trg] : full.pairs) {
    if (wanted.count(src)) add_pair(out, src, trg, seen);
  }
  if (out.pairs.empty()) {
    throw DataError("source rank slice selected no entries");
  }
  return out;
}

EvalReport evaluate_p1(const EmbeddingSpace& x,
                       const EmbeddingSpace& z,
                       const GoldLexicon& gold,
                       std::vector<QueryOutcome>* per_query) {
  if (gold.source_order.empty()) throw DataError("empty gold lexicon");
  if (x.dim() != z.dim()) {
    throw DataError("evaluation spaces have mismatched dimensions");
  }

  // Collect evaluable queries: gold source words present in the source vocab.
  std::vector<std::int32_t> query_ids;
  std::vector<const std::vector<std::string>*> query_gold;
  std::vector<const std::string*> query_word;
  for (const auto& src : gold.source_order) {
    const std::int32_t id = x.vocab.id_of(src);
    if (id < 0) continue;
    query_ids.push_back(id);
    query_gold.push_back(&gold.entries.at(src));
    query_word.push_back(&src);
  }

  EvalReport report;
  report.n_total = static_cast<int>(gold.source_order.size());
  report.n_evaluated = static_cast<int>(query_ids.size());
  report.coverage =
      static_cast<double>(report.n_evaluated) / report.n_total;
  if (query_ids.empty()) {
    throw DataError("no gold source word is in the source vocabulary");
  }

  Mat z_unit = z.input_vectors;
  for (Eigen::Index i = 0; i < z_unit.rows(); ++i) {
    const double n = z_unit.row(i).norm();
    if (n > 0.0) z_unit.row(i) /= n;
  }

  if (per_query) per_query->clear();
  int correct_total = 0;
  const Eigen::Index n_z = z_unit.rows();
  Vec sims(n_z);
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    Vec query = x.input_vectors.row(query_ids[q]).transpose();
    const double norm = query.norm();
    if (norm > 0.0) query /= norm;
    sims.noalias() = z_unit * query;

    Eigen::Index best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n_z; ++j) {
      if (sims[j] > best_sim) {
        best_sim = sims[j];
        best = j;
      }
    }
    const std::string& retrieved = z.vocab.words[static_cast<std::size_t>(best)];
    const auto& targets = *query_gold[q];
    const bool correct =
        std::find(targets.begin(), targets.end(), retrieved) != targets.end();
    correct_total += correct ? 1 : 0;

    if (per_query) {
      QueryOutcome outcome;
      outcome.source = *query_word[q];
      outcome.retrieved = retrieved;
      outcome.correct = correct;
      // Competition rank of the best-ranked gold target.
      double best_gold = -std::numeric_limits<double>::infinity();
      bool any_gold = false;
      for (const auto& t : targets) {
        const std::int32_t tid = z.vocab.id_of(t);
        if (tid >= 0) {
          any_gold = true;
          best_gold = std::max(best_gold, sims[tid]);
        }
      }
      if (any_gold) {
        int rank = 1;
        for (Eigen::Index j = 0; j < n_z; ++j) {
          if (sims[j] > best_gold) ++rank;
        }
        outcome.gold_rank = rank;
      }
      per_query->push_back(std::move(outcome));
    }
  }
  report.p_at_1 = static_cast<double>(correct_total) / report.n_evaluated;
  return report;
}

SeedSubsetResult seed_subset(const GoldLexicon& gold,
                             const corpus::Vocabulary& vocab_x,
                             const corpus::Vocabulary& vocab_z, int limit) {
  if (gold.split == Split::test || gold.split == Split::dev) {
    throw ConfigError("seed dictionaries must come from the train split");
  }
  if (gold.pairs.empty()) throw DataError("empty gold lexicon");

  SeedSubsetResult out;
  for (const auto& [src, trg] : gold.pairs) {
    const std::int32_t sid = vocab_x.id_of(src);
    const std::int32_t tid = vocab_z.id_of(trg);
    if (sid < 0 || tid < 0) continue;
    ++out.in_vocab;
    if (limit > 0 && out.dict.size() >= static_cast<std::size_t>(limit)) {
      continue;  // keep counting retention past the truncation point
    }
    out.dict.pairs.emplace_back(sid, tid);
    out.dict.surface.emplace_back(src, trg);
  }
  out.retention =
      static_cast<double>(out.in_vocab) / static_cast<double>(gold.pair_count());
  if (out.dict.empty()) {
    throw DataError("no gold pair is covered by both vocabularies");
  }
  return out;
}

}  // namespace isoemb::bli
