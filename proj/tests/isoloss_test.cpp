#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "isoemb/isoloss.hpp"
#include "isoemb/numerics.hpp"
#include "test_support.hpp"

using isoemb::Mat;
using isoemb::Vec;
namespace iso = isoemb::isoloss;
namespace num = isoemb::numerics;
namespace ts = test_support;

TEST_CASE("procrustes acts as identity when Y = X") {
  ts::Rng rng(1);
  const Mat x = ts::random_matrix(rng, 12, 5);
  const Mat w = iso::solve_procrustes(x, x);
  CHECK((x * w - x).norm() <= 1e-8);
}

TEST_CASE("procrustes recovers a planted rotation") {
  ts::Rng rng(2);
  const Mat x = ts::random_matrix(rng, 15, 6);
  const Mat r = ts::random_orthogonal(rng, 6);
  const Mat y = x * r;
  const Mat w = iso::solve_procrustes(x, y);
  CHECK((x * w - y).norm() <= 1e-8);
}

TEST_CASE("procrustes beats 100 random orthogonal probes") {
  ts::Rng rng(3);
  const Mat x = ts::random_matrix(rng, 20, 6);
  const Mat y = ts::random_matrix(rng, 20, 6);
  const Mat w = iso::solve_procrustes(x, y);
  const double optimal = (x * w - y).norm();
  for (int probe = 0; probe < 100; ++probe) {
    const Mat q = ts::random_orthogonal(rng, 6);
    CHECK(optimal <= (x * q - y).norm() + 1e-12);
  }
}

TEST_CASE("l2 loss has the hand-computed value and a checked gradient") {
  ts::Rng rng(4);
  const Mat same = ts::random_matrix(rng, 6, 4);
  CHECK(iso::l2_loss(same, same).value == 0.0);

  Mat x(1, 2), y(1, 2);
  x << 3.0, 4.0;
  y << 0.0, 0.0;
  CHECK(iso::l2_loss(x, y).value == doctest::Approx(5.0).epsilon(1e-12));

  const Mat xs = ts::random_matrix(rng, 8, 5);
  const Mat ys = ts::random_matrix(rng, 8, 5);
  const auto res = iso::l2_loss(xs, ys);
  const auto value = [&](const Mat& m) { return iso::l2_loss(m, ys).value; };
  CHECK(ts::fd_max_rel_err(value, xs, res.grad) < 1e-4);
}

TEST_CASE("proc-l2 absorbs rotations and never loses to the identity map") {
  ts::Rng rng(5);
  const Mat x = ts::random_matrix(rng, 10, 6);
  const Mat r = ts::random_orthogonal(rng, 6);
  CHECK(iso::proc_l2_loss(x, Mat(x * r)).value <= 1e-8);
  CHECK(iso::proc_l2_loss(x, x).value <= 1e-8);

  int wins = 0;
  double worst_excess = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Mat xs = ts::random_matrix(rng, 10, 6);
    const Mat ys = ts::random_matrix(rng, 10, 6);
    const double proc = iso::proc_l2_loss(xs, ys).value;
    const double plain = iso::l2_loss(xs, ys).value;
    if (proc <= plain) ++wins;
    worst_excess = std::max(worst_excess, proc - plain);
  }
  CHECK(wins >= 95);
  CHECK(worst_excess <= 1e-8);
}

TEST_CASE("proc-l2 gradient matches finite differences at the solved alignment") {
  // The step gradient holds the solved alignment fixed, so differences are
  // taken of the frozen-alignment value. (Differencing through a re-solve
  // differentiates a different objective: the alignment minimizes the squared
  // residual, not the mean distance, so the cross term does not cancel.)
  ts::Rng rng(6);
  const Mat xs = ts::random_matrix(rng, 8, 5);
  const Mat ys = ts::random_matrix(rng, 8, 5);
  const auto res = iso::proc_l2_loss(xs, ys);
  const auto frozen = [&](const Mat& m) {
    return iso::proc_l2_value_at(m, ys, res.w);
  };
  CHECK(ts::fd_max_rel_err(frozen, xs, res.grad) < 1e-4);
  // The frozen-W value at the solved W reproduces the loss value.
  CHECK(iso::proc_l2_value_at(xs, ys, res.w) == doctest::Approx(res.value).epsilon(1e-12));
}

TEST_CASE("pairwise cosines are enumerated in canonical order") {
  Mat rows(3, 2);
  rows << 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
  const Vec c = iso::pairwise_cosines(rows);
  REQUIRE(c.size() == 3);
  CHECK(c[0] == doctest::Approx(0.0).epsilon(1e-12));                  // (0,1)
  CHECK(c[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12)); // (0,2)
  CHECK(c[2] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12)); // (1,2)
}

TEST_CASE("rsim loss is rotation and scale invariant with a checked gradient") {
  ts::Rng rng(7);
  const Mat x = ts::random_matrix(rng, 10, 5);
  const Mat r = ts::random_orthogonal(rng, 5);
  CHECK(iso::rsim_loss(x, Mat(x * r)).value <= 1e-10);
  CHECK(iso::rsim_loss(x, Mat(3.0 * x)).value <= 1e-10);

  const Mat ys = ts::random_matrix(rng, 10, 5);
  const auto res = iso::rsim_loss(x, ys);
  CHECK(res.value >= 0.0);
  CHECK(res.value <= 2.0);
  const auto value = [&](const Mat& m) { return iso::rsim_loss(m, ys).value; };
  CHECK(ts::fd_max_rel_err(value, x, res.grad) < 1e-4);
}

TEST_CASE("rsim-u loss ignores row permutations and matches a brute-force oracle") {
  ts::Rng rng(8);
  const Mat x = ts::random_matrix(rng, 12, 4);
  Mat permuted = x;
  // Fixed permutation (reverse rows).
  for (int i = 0; i < 12; ++i) permuted.row(i) = x.row(11 - i);
  CHECK(iso::rsim_u_loss(x, permuted).value <= 1e-10);

  const Mat r = ts::random_orthogonal(rng, 4);
  CHECK(iso::rsim_u_loss(x, Mat(x * r)).value <= 1e-10);

  // Independent implementation: sorted descending cosine lists, pearson.
  const Mat y = ts::random_matrix(rng, 12, 4);
  const auto sorted_list = [](const Mat& m) {
    std::vector<double> out;
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = i + 1; j < m.rows(); ++j) {
        out.push_back(m.row(i).dot(m.row(j)) / (m.row(i).norm() * m.row(j).norm()));
      }
    }
    std::sort(out.begin(), out.end(), std::greater<double>());
    return out;
  };
  const double expected = 1.0 - ts::pearson_oracle(sorted_list(x), sorted_list(y));
  CHECK(iso::rsim_u_loss(x, y).value == doctest::Approx(expected).epsilon(1e-10));

  const auto res = iso::rsim_u_loss(x, y);
  const auto value = [&](const Mat& m) { return iso::rsim_u_loss(m, y).value; };
  CHECK(ts::fd_max_rel_err(value, x, res.grad) < 1e-4);
}

TEST_CASE("spectral mass cutoff keeps the ascending prefix below 90 percent") {
  Vec p3(3), k3(3);
  p3 << 0.0, 1.0, 3.0;  // path-graph Laplacian spectrum
  k3 << 0.0, 3.0, 3.0;  // triangle Laplacian spectrum
  CHECK(iso::spectral_mass_cutoff(p3) == 2);
  CHECK(iso::spectral_mass_cutoff(k3) == 2);
}

TEST_CASE("evs-u loss vanishes on identical or rotated spaces") {
  ts::Rng rng(9);
  const Mat x = ts::random_matrix(rng, 8, 4);
  CHECK(iso::evs_u_loss(x, x).value <= 1e-12);
  const Mat r = ts::random_orthogonal(rng, 4);
  CHECK(iso::evs_u_loss(x, Mat(x * r)).value <= 1e-10);
}

TEST_CASE("evs-u gradient matches finite differences away from degeneracies") {
  ts::Rng rng(10);
  int checked = 0;
  for (int attempt = 0; attempt < 30 && checked < 3; ++attempt) {
    const Mat x = ts::random_matrix(rng, 8, 4);
    const Mat y = ts::random_matrix(rng, 8, 4);
    // Keep only instances with comfortably simple spectra and a truncation
    // index that is stable in the finite-difference neighbourhood.
    const auto spec_x = iso::weighted_laplacian_spectrum(Mat(x));
    const auto spec_y = iso::weighted_laplacian_spectrum(Mat(y));
    const auto min_gap = [](const Vec& v) {
      double g = std::numeric_limits<double>::infinity();
      for (int i = 1; i < v.size(); ++i) g = std::min(g, v[i] - v[i - 1]);
      return g;
    };
    const auto mass_margin = [](const Vec& v) {
      const int l = iso::spectral_mass_cutoff(v);
      const double total = v.sum();
      double prefix = 0.0;
      for (int i = 0; i < l; ++i) prefix += v[i];
      // Distance of the prefix mass from the 0.9 boundary, both sides.
      const double at = prefix / total;
      const double next = (prefix + v[l]) / total;
      return std::min(0.9 - at, next - 0.9);
    };
    if (!(min_gap(spec_x) >= 1e-3) || !(min_gap(spec_y) >= 1e-3)) continue;
    if (!(mass_margin(spec_x) >= 1e-3) || !(mass_margin(spec_y) >= 1e-3)) continue;

    const auto res = iso::evs_u_loss(x, y);
    if (res.degenerate_skips != 0) continue;
    const auto value = [&](const Mat& m) { return iso::evs_u_loss(m, y).value; };
    CHECK(ts::fd_max_rel_err(value, x, res.grad) < 1e-3);
    ++checked;
  }
  CHECK(checked == 3);
}

TEST_CASE("evs-u counts degenerate eigenvalue skips") {
  // Identical rows produce a maximally symmetric graph with repeated
  // eigenvalues; the gradient for those indices must be dropped and counted.
  Mat x = Mat::Zero(4, 3);
  x.col(0).setOnes();
  ts::Rng rng(11);
  const Mat y = ts::random_matrix(rng, 4, 3);
  const auto res = iso::evs_u_loss(x, y);
  CHECK(res.degenerate_skips > 0);
}

TEST_CASE("weighted laplacian spectrum of a hand-built space") {
  // Two orthogonal unit rows: A has zero diagonal and zero off-diagonals,
  // L = 0, spectrum (0, 0).
  Mat x(2, 2);
  x << 1.0, 0.0, 0.0, 1.0;
  const Vec spec = iso::weighted_laplacian_spectrum(x);
  REQUIRE(spec.size() == 2);
  CHECK(std::abs(spec[0]) < 1e-12);
  CHECK(std::abs(spec[1]) < 1e-12);

  // Two identical unit rows: A off-diagonal 1, L = [[1,-1],[-1,1]],
  // spectrum (0, 2).
  Mat y(2, 2);
  y << 1.0, 0.0, 1.0, 0.0;
  const Vec spec2 = iso::weighted_laplacian_spectrum(y);
  CHECK(std::abs(spec2[0]) < 1e-12);
  CHECK(std::abs(spec2[1] - 2.0) < 1e-12);
}
