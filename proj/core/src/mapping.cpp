#include "isoemb/mapping.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "isoemb/numerics.hpp"

namespace isoemb::mapping {

namespace {

constexpr std::uint64_t kInductionDropoutTag = 0x3a;

void unit_rows_inplace(Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n > 0.0) m.row(i) /= n;
  }
}

// Argmax-cosine target for every query row, candidates restricted to
// `candidates.topRows(limit)`. Ties break to the lower candidate index.
// Inputs must be row-normalized. Returns one target id per query row.
std::vector<std::int32_t> argmax_rows(const Mat& queries, const Mat& candidates,
                                      Vec* best_sims = nullptr) {
  const Eigen::Index q = queries.rows();
  const Eigen::Index c = candidates.rows();
  std::vector<std::int32_t> best(static_cast<std::size_t>(q), 0);
  if (best_sims) best_sims->resize(q);
  constexpr Eigen::Index kBlock = 512;
  Mat sims;
  for (Eigen::Index start = 0; start < q; start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, q - start);
    sims.noalias() = queries.middleRows(start, rows) * candidates.transpose();
    for (Eigen::Index i = 0; i < rows; ++i) {
      Eigen::Index arg = 0;
      double bestv = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < c; ++j) {
        const double v = sims(i, j);
        if (v > bestv) {
          bestv = v;
          arg = j;
        }
      }
      best[static_cast<std::size_t>(start + i)] = static_cast<std::int32_t>(arg);
      if (best_sims) (*best_sims)[start + i] = bestv;
    }
  }
  return best;
}

void gather_rows(const Mat& m, const std::vector<std::pair<std::int32_t, std::int32_t>>& pairs,
                 bool first_side, Mat& out) {
  out.resize(static_cast<Eigen::Index>(pairs.size()), m.cols());
  const auto n = static_cast<std::int32_t>(m.rows());
  Eigen::Index r = 0;
  for (const auto& pr : pairs) {
    const std::int32_t id = first_side ? pr.first : pr.second;
    if (id < 0 || id >= n) {
      throw DataError("dictionary id out of range: " + std::to_string(id));
    }
    out.row(r++) = m.row(id);
  }
}

// One run of the whiten -> rotate -> reweight -> dewhiten pipeline over the
// given dictionary, returning the composed per-space transforms.
struct AdvancedSolve {
  Mat transform_x;
  Mat transform_z;
  Vec s;
};

AdvancedSolve advanced_solve(const Mat& x_p, const Mat& z_p,
                             const isoloss::SeedDictionary& dict,
                             const MappingConfig& config) {
  Mat x_in = x_p, z_in = z_p;
  WhitenResult wx, wz;
  if (config.whiten) {
    Mat xd, zd;
    gather_rows(x_p, dict.pairs, true, xd);
    gather_rows(z_p, dict.pairs, false, zd);
    wx = whiten(xd);
    wz = whiten(zd);
    x_in = x_p * wx.w.transpose();
    z_in = z_p * wz.w.transpose();
  }
  const auto om = orthogonal_map(x_in, z_in, dict);

  AdvancedSolve out;
  out.s = om.s;
  const double power = config.reweight ? config.reweight_power : 0.0;
  Mat tx = om.w_x;
  Mat tz = om.w_z;
  if (power != 0.0) {
    const Vec sp = om.s.array().pow(power);
    tx = tx * sp.asDiagonal();
    tz = tz * sp.asDiagonal();
  }
  if (config.whiten && config.dewhiten) {
    tx = tx * (om.w_x.transpose() * wx.w_inv * om.w_x);
    tz = tz * (om.w_z.transpose() * wz.w_inv * om.w_z);
  }
  if (config.whiten) {
    out.transform_x = wx.w.transpose() * tx;
    out.transform_z = wz.w.transpose() * tz;
  } else {
    out.transform_x = std::move(tx);
    out.transform_z = std::move(tz);
  }
  return out;
}

}  // namespace

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::supervised: return "supervised";
    case Mode::semi_supervised: return "semi_supervised";
    case Mode::unsupervised: return "unsupervised";
  }
  return "supervised";
}

std::optional<Mode> mode_from_name(const std::string& name) {
  std::string s;
  for (char c : name) {
    s.push_back(c == '-' ? '_' : static_cast<char>(std::tolower(
                                     static_cast<unsigned char>(c))));
  }
  if (s == "supervised") return Mode::supervised;
  if (s == "semi_supervised" || s == "semi") return Mode::semi_supervised;
  if (s == "unsupervised") return Mode::unsupervised;
  return std::nullopt;
}

void MappingConfig::validate() const {
  if (unsup_vocab_cutoff < 1) throw ConfigError("cutoff must be >= 1");
  if (reweight_power < 0.0 || reweight_power > 1.0) {
    throw ConfigError("reweight power must be in [0, 1]");
  }
  if (self_learn_max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (convergence_threshold < 0.0) {
    throw ConfigError("convergence threshold must be >= 0");
  }
  if (dropout_keep <= 0.0 || dropout_keep > 1.0) {
    throw ConfigError("dropout keep probability must be in (0, 1]");
  }
}

Mat preprocess(const Mat& x, int* zero_rows_replaced) {
  const Eigen::Index d = x.cols();
  if (d == 0 || x.rows() == 0) throw DataError("preprocess: empty matrix");
  int replaced = 0;
  const double eps_entry = 1.0 / std::sqrt(static_cast<double>(d));
  auto fix_zero_rows = [&](Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double n = m.row(i).norm();
      if (n > 0.0) {
        m.row(i) /= n;
      } else {
        m.row(i).setConstant(eps_entry);
        ++replaced;
      }
    }
  };
  Mat out = x;
  fix_zero_rows(out);
  const Eigen::RowVectorXd mean = out.colwise().mean();
  out.rowwise() -= mean;
  fix_zero_rows(out);
  if (zero_rows_replaced) *zero_rows_replaced = replaced;
  return out;
}

WhitenResult whiten(const Mat& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw DataError("whitening needs at least 2 rows");
  if (d < 1) throw DataError("whitening needs at least 1 column");

  // Full eigenbasis of X^T X covers rank-deficient inputs (the thin SVD of X
  // would drop the null directions the floor clamp has to handle).
  const auto eig = numerics::sym_eig(x.transpose() * x);
  Vec s(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    s[i] = std::sqrt(std::max(0.0, eig.values[i]));
  }
  const double smax = s.maxCoeff();
  if (smax <= 0.0) throw NumericError("cannot whiten an all-zero matrix");
  const double floor = 1e-10 * smax;
  WhitenResult out;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (s[i] < floor) {
      s[i] = floor;
      ++out.clamped;
    }
  }
  const double c = 1.0 / static_cast<double>(n - 1);
  const double root_c = std::sqrt(c);
  const Mat& q = eig.vectors;
  out.w = (1.0 / root_c) * q * s.cwiseInverse().asDiagonal() * q.transpose();
  out.w_inv = root_c * q * s.asDiagonal() * q.transpose();
  out.z = x * out.w.transpose();
  return out;
}

OrthogonalMapResult orthogonal_map(const Mat& x, const Mat& z,
                                   const isoloss::SeedDictionary& dict) {
  if (dict.empty()) throw DataError("orthogonal map: empty dictionary");
  if (x.cols() != z.cols()) {
    throw DataError("orthogonal map: dimension mismatch");
  }
  Mat xd, zd;
  gather_rows(x, dict.pairs, true, xd);
  gather_rows(z, dict.pairs, false, zd);
  const auto dec = numerics::svd(xd.transpose() * zd);
  OrthogonalMapResult out;
  out.w_x = dec.u;
  out.w_z = dec.v;
  out.s = dec.s;
  return out;
}

Mat reweight_dewhiten(const Mat& x, const Mat& w_rot, const Vec& s,
                      const WhitenResult* whitening, double power) {
  Mat out = x * w_rot;
  if (power != 0.0) {
    if (s.size() != w_rot.cols()) {
      throw DataError("reweighting: singular value count mismatch");
    }
    out = out * s.array().pow(power).matrix().asDiagonal();
  }
  if (whitening != nullptr) {
    out = out * (w_rot.transpose() * whitening->w_inv * w_rot);
  }
  return out;
}

isoloss::SeedDictionary induce_dictionary(const Mat& x_mapped,
                                          const Mat& z_mapped,
                                          Direction direction, int restrict_to) {
  if (x_mapped.cols() != z_mapped.cols()) {
    throw DataError("dictionary induction: dimension mismatch");
  }
  const auto limit = [&](Eigen::Index n) {
    return restrict_to > 0 ? std::min<Eigen::Index>(restrict_to, n) : n;
  };
  Mat xs = x_mapped.topRows(limit(x_mapped.rows()));
  Mat zs = z_mapped.topRows(limit(z_mapped.rows()));
  unit_rows_inplace(xs);
  unit_rows_inplace(zs);

  isoloss::SeedDictionary dict;
  if (direction == Direction::forward) {
    const auto best = argmax_rows(xs, zs);
    dict.pairs.reserve(best.size());
    for (std::size_t i = 0; i < best.size(); ++i) {
      dict.pairs.emplace_back(static_cast<std::int32_t>(i), best[i]);
    }
  } else {
    const auto best = argmax_rows(zs, xs);
    dict.pairs.reserve(best.size());
    for (std::size_t j = 0; j < best.size(); ++j) {
      dict.pairs.emplace_back(best[j], static_cast<std::int32_t>(j));
    }
  }
  return dict;
}

isoloss::SeedDictionary unsupervised_init(const Mat& x, const Mat& z,
                                          int cutoff, bool* cutoff_lowered) {
  if (x.cols() != z.cols()) {
    throw DataError("unsupervised init: dimension mismatch");
  }
  const auto k = static_cast<Eigen::Index>(
      std::min<Eigen::Index>({cutoff, x.rows(), z.rows()}));
  if (cutoff_lowered) *cutoff_lowered = (k < cutoff);
  if (k < 2) throw DataError("unsupervised init needs at least 2 rows");

  // Intra-space similarity rows, each sorted descending: a vocabulary-order
  // free signature of every word's similarity distribution.
  const auto signature = [&](const Mat& space) {
    Mat rows = space.topRows(k);
    unit_rows_inplace(rows);
    Mat sims = rows * rows.transpose();
    for (Eigen::Index i = 0; i < k; ++i) {
      double* begin = sims.data() + i * k;
      std::sort(begin, begin + k, std::greater<double>());
    }
    unit_rows_inplace(sims);
    return sims;
  };
  const Mat sx = signature(x);
  const Mat sz = signature(z);

  const auto best = argmax_rows(sx, sz);
  isoloss::SeedDictionary dict;
  dict.pairs.reserve(best.size());
  for (std::size_t i = 0; i < best.size(); ++i) {
    dict.pairs.emplace_back(static_cast<std::int32_t>(i), best[i]);
  }
  return dict;
}

Mat apply_transform(const Mat& raw, const Mat& transform) {
  return preprocess(raw) * transform;
}

MappingResult self_learn(const Mat& x, const Mat& z,
                         const isoloss::SeedDictionary& init_dict,
                         const MappingConfig& config) {
  config.validate();
  if (init_dict.empty()) {
    throw DataError("self-learning needs a non-empty initial dictionary");
  }
  const Mat x_p = preprocess(x);
  const Mat z_p = preprocess(z);

  MappingResult result;

  if (config.mode == Mode::supervised) {
    const auto solved = advanced_solve(x_p, z_p, init_dict, config);
    result.transform_x = solved.transform_x;
    result.transform_z = solved.transform_z;
    // Objective: mean dictionary cosine in the mapped space.
    Mat xm = x_p * result.transform_x;
    Mat zm = z_p * result.transform_z;
    unit_rows_inplace(xm);
    unit_rows_inplace(zm);
    double obj = 0.0;
    for (const auto& [si, ti] : init_dict.pairs) {
      obj += xm.row(si).dot(zm.row(ti));
    }
    obj /= static_cast<double>(init_dict.size());
    if (!std::isfinite(obj)) {
      throw NumericError("mapping objective is not finite");
    }
    result.objective_trace.push_back(obj);
    result.iterations = 1;
    result.induced_dictionary =
        induce_dictionary(xm, zm, Direction::forward, 0);
    return result;
  }

  // Iterative modes: plain orthogonal refinement with stochastic induction,
  // keeping the dictionary that achieved the best objective.
  const int cutoff = static_cast<int>(std::min<Eigen::Index>(
      {config.unsup_vocab_cutoff, x_p.rows(), z_p.rows()}));
  SplitMix64 rng(mix_seed(config.rng_seed, kInductionDropoutTag));
  isoloss::SeedDictionary current = init_dict;
  isoloss::SeedDictionary best_dict = init_dict;
  double best_obj = -std::numeric_limits<double>::infinity();
  double keep = config.dropout_keep;
  int it = 0;
  while (it < config.self_learn_max_iters) {
    ++it;
    const auto om = orthogonal_map(x_p, z_p, current);
    Mat xm = x_p.topRows(cutoff) * om.w_x;
    Mat zm = z_p.topRows(cutoff) * om.w_z;
    unit_rows_inplace(xm);
    unit_rows_inplace(zm);

    Vec fwd_sims, bwd_sims;
    const auto fwd = argmax_rows(xm, zm, &fwd_sims);
    const auto bwd = argmax_rows(zm, xm, &bwd_sims);
    const double objective = 0.5 * (fwd_sims.mean() + bwd_sims.mean());
    if (!std::isfinite(objective)) {
      throw NumericError("self-learning objective is not finite");
    }

    const bool improved = objective - best_obj > config.convergence_threshold;
    if (objective > best_obj) {
      best_obj = objective;
      best_dict = current;
    }
    result.objective_trace.push_back(best_obj);

    if (!improved) {
      if (keep < 1.0) {
        keep = std::min(1.0, keep * 2.0);  // anneal on plateau
      } else {
        break;  // converged at full induction
      }
    }

    // Next hypothesis: both induction directions, each pair kept with
    // probability `keep`.
    isoloss::SeedDictionary next;
    next.pairs.reserve(fwd.size() + bwd.size());
    for (std::size_t i = 0; i < fwd.size(); ++i) {
      if (rng.next_double() < keep) {
        next.pairs.emplace_back(static_cast<std::int32_t>(i), fwd[i]);
      }
    }
    for (std::size_t j = 0; j < bwd.size(); ++j) {
      if (rng.next_double() < keep) {
        next.pairs.emplace_back(bwd[j], static_cast<std::int32_t>(j));
      }
    }
    if (next.pairs.empty()) {
      for (std::size_t i = 0; i < fwd.size(); ++i) {
        next.pairs.emplace_back(static_cast<std::int32_t>(i), fwd[i]);
      }
      for (std::size_t j = 0; j < bwd.size(); ++j) {
        next.pairs.emplace_back(bwd[j], static_cast<std::int32_t>(j));
      }
    }
    current = std::move(next);
  }
  result.iterations = it;

  const auto solved = advanced_solve(x_p, z_p, best_dict, config);
  result.transform_x = solved.transform_x;
  result.transform_z = solved.transform_z;
  Mat xm = x_p * result.transform_x;
  Mat zm = z_p * result.transform_z;
  result.induced_dictionary =
      induce_dictionary(xm, zm, Direction::forward, 0);
  return result;
}

}  // namespace isoemb::mapping
