#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "isoemb/geometry.hpp"
#include "isoemb/isoloss.hpp"
#include "test_support.hpp"

using namespace isoemb;
namespace ts = test_support;

namespace {

std::vector<std::pair<double, double>> finite_points(
    const geometry::PersistenceDiagram& d) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : d.points) {
    if (std::isfinite(p.death)) out.emplace_back(p.birth, p.death);
  }
  return out;
}

geometry::PersistenceDiagram diagram_of(
    int dim, const std::vector<std::pair<double, double>>& pts) {
  geometry::PersistenceDiagram d;
  d.dim = dim;
  for (const auto& [b, e] : pts) d.points.push_back({b, e});
  return d;
}

isoloss::SeedDictionary identity_seeds(int n) {
  isoloss::SeedDictionary dict;
  for (int i = 0; i < n; ++i) dict.pairs.emplace_back(i, i);
  return dict;
}

}  // namespace

TEST_CASE("relational similarity is exactly one on identical seed rows") {
  ts::Rng rng(1);
  const Mat x = ts::random_matrix(rng, 12, 5);
  const auto seeds = identity_seeds(12);
  CHECK(geometry::relational_similarity(x, x, seeds) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("relational similarity is invariant to rotation and scaling") {
  ts::Rng rng(2);
  const Mat x = ts::random_matrix(rng, 10, 6);
  const Mat r = ts::random_orthogonal(rng, 6);
  const Mat y = 2.5 * x * r;
  const auto seeds = identity_seeds(10);
  CHECK(geometry::relational_similarity(x, y, seeds) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("relational similarity matches a double-loop oracle") {
  ts::Rng rng(3);
  const Mat x = ts::random_matrix(rng, 20, 6);
  const Mat y = ts::random_matrix(rng, 20, 6);
  const auto seeds = identity_seeds(20);
  const double got = geometry::relational_similarity(x, y, seeds);

  std::vector<double> cx, cy;
  for (int i = 0; i < 20; ++i) {
    for (int j = i + 1; j < 20; ++j) {
      cx.push_back(x.row(i).dot(x.row(j)) / (x.row(i).norm() * x.row(j).norm()));
      cy.push_back(y.row(i).dot(y.row(j)) / (y.row(i).norm() * y.row(j).norm()));
    }
  }
  CHECK(std::abs(got - ts::pearson_oracle(cx, cy)) < 1e-12);
}

TEST_CASE("relational similarity truncates to the first limit seeds") {
  ts::Rng rng(4);
  const Mat x = ts::random_matrix(rng, 30, 5);
  const Mat y = ts::random_matrix(rng, 30, 5);
  const auto seeds = identity_seeds(30);
  auto first_ten = identity_seeds(10);
  CHECK(geometry::relational_similarity(x, y, seeds, 10) ==
        doctest::Approx(geometry::relational_similarity(x, y, first_ten))
            .epsilon(1e-14));
  CHECK(geometry::relational_similarity(x, y, seeds, 1000) ==
        doctest::Approx(geometry::relational_similarity(x, y, seeds))
            .epsilon(1e-14));
}

TEST_CASE("knn graph connects the middle of three collinear points to both ends") {
  // Points on the line y = 1: angular (cosine) distance orders them the same
  // way the line does, so the middle point is everyone's nearest neighbour.
  Mat x(3, 2);
  x << -1.0, 1.0, 0.0, 1.0, 1.0, 1.0;
  const auto g = geometry::knn_graph(x, 1);
  CHECK(g.at(0, 1));
  CHECK(g.at(1, 2));
  CHECK_FALSE(g.at(0, 2));
  CHECK(g.degree(1) == 2);
}

TEST_CASE("knn graph with k = n - 1 is complete") {
  ts::Rng rng(5);
  const Mat x = ts::random_matrix(rng, 8, 4);
  const auto g = geometry::knn_graph(x, 7);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      if (i != j) CHECK(g.at(i, j));
    }
  }
}

TEST_CASE("knn graph adjacency equals the exhaustive oracle") {
  ts::Rng rng(6);
  const Mat x = ts::random_matrix(rng, 30, 5);
  const auto g = geometry::knn_graph(x, 2);
  const auto oracle = ts::knn_adjacency_oracle(x, 2);
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 30; ++j) {
      CHECK(g.at(i, j) == oracle[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
  }
}

TEST_CASE("knn graph rejects bad arguments") {
  ts::Rng rng(7);
  const Mat x = ts::random_matrix(rng, 4, 3);
  CHECK_THROWS_AS(geometry::knn_graph(x, 0), ConfigError);
  CHECK_THROWS_AS(geometry::knn_graph(x, 4), DataError);
}

TEST_CASE("eigenvector similarity of P3 versus K3 equals the hand value") {
  // P3 from three collinear points with k = 1 (see the adjacency test); K3
  // from any three points with k = 2 (complete graph). Spectra: P3 (0,1,3),
  // K3 (0,3,3); the 90%-mass rule truncates both at l = 2, giving
  // (0-0)^2 + (1-3)^2 = 4.
  Mat line(3, 2);
  line << -1.0, 1.0, 0.0, 1.0, 1.0, 1.0;
  const auto p3 = geometry::knn_graph(line, 1);
  ts::Rng rng(8);
  const Mat any = ts::random_matrix(rng, 3, 2);
  const auto k3 = geometry::knn_graph(any, 2);

  // Confirm the spectra behind the hand computation via the library path the
  // metric uses, against the independent characteristic-polynomial oracle.
  const auto spec_p3 = ts::charpoly_symmetric_eigenvalues(geometry::laplacian(p3));
  CHECK(std::abs(spec_p3[0] - 0.0) < 1e-9);
  CHECK(std::abs(spec_p3[1] - 1.0) < 1e-9);
  CHECK(std::abs(spec_p3[2] - 3.0) < 1e-9);
  const auto spec_k3 = ts::charpoly_symmetric_eigenvalues(geometry::laplacian(k3));
  CHECK(std::abs(spec_k3[0] - 0.0) < 1e-9);
  CHECK(std::abs(spec_k3[1] - 3.0) < 1e-9);
  CHECK(std::abs(spec_k3[2] - 3.0) < 1e-9);

  CHECK(geometry::eigenvector_similarity(p3, k3) ==
        doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("eigenvector similarity is symmetric and zero on identical input") {
  ts::Rng rng(9);
  const Mat x = ts::random_matrix(rng, 15, 4);
  const Mat y = ts::random_matrix(rng, 15, 4);
  CHECK(geometry::eigenvector_similarity(x, x) == doctest::Approx(0.0));
  CHECK(geometry::eigenvector_similarity(x, y) ==
        doctest::Approx(geometry::eigenvector_similarity(y, x)).epsilon(1e-12));
  CHECK(geometry::eigenvector_similarity(x, y) >= 0.0);
}

TEST_CASE("rips H0 of two points is a single pair plus one essential class") {
  Mat dist(2, 2);
  dist << 0.0, 1.0, 1.0, 0.0;
  const auto diagrams = geometry::rips_persistence(dist, 1);
  REQUIRE(diagrams.size() == 2);
  const auto& h0 = diagrams[0];
  REQUIRE(h0.points.size() == 2);
  int essential = 0;
  for (const auto& p : h0.points) {
    CHECK(p.birth == 0.0);
    if (std::isinf(p.death)) {
      ++essential;
    } else {
      CHECK(p.death == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(essential == 1);
  CHECK(diagrams[1].points.empty());
}

TEST_CASE("rips H1 of the unit square contains the classic pair") {
  // Corners of a unit square under Euclidean distance: the four sides enter
  // at 1 and close the loop; the diagonals at sqrt(2) fill the triangles
  // that kill the cycle.
  Mat pts(4, 2);
  pts << 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0;
  Mat dist(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      dist(i, j) = (pts.row(i) - pts.row(j)).norm();
    }
  }
  const auto diagrams = geometry::rips_persistence(dist, 1);
  const auto h1 = finite_points(diagrams[1]);
  REQUIRE(h1.size() == 1);
  CHECK(h1[0].first == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(h1[0].second == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("rips H0 deaths equal the minimum spanning tree weights") {
  ts::Rng rng(10);
  const Mat points = ts::random_matrix(rng, 10, 3);
  Mat dist(10, 10);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      dist(i, j) = (points.row(i) - points.row(j)).norm();
    }
  }
  const auto diagrams = geometry::rips_persistence(dist, 0);
  std::vector<double> deaths;
  for (const auto& p : diagrams[0].points) {
    if (std::isfinite(p.death)) deaths.push_back(p.death);
  }
  std::sort(deaths.begin(), deaths.end());
  const auto mst = ts::mst_edge_weights(dist);
  REQUIRE(deaths.size() == mst.size());
  for (std::size_t i = 0; i < mst.size(); ++i) {
    CHECK(deaths[i] == doctest::Approx(mst[i]).epsilon(1e-12));
  }
}

TEST_CASE("rips rejects malformed distance matrices") {
  Mat not_square(2, 3);
  not_square.setZero();
  CHECK_THROWS_AS(geometry::rips_persistence(not_square, 1), DataError);
  Mat bad_diag = Mat::Zero(2, 2);
  bad_diag(0, 0) = 0.5;
  CHECK_THROWS_AS(geometry::rips_persistence(bad_diag, 1), DataError);
  Mat asym = Mat::Zero(2, 2);
  asym(0, 1) = 1.0;
  asym(1, 0) = 2.0;
  CHECK_THROWS_AS(geometry::rips_persistence(asym, 1), DataError);
  Mat fine = Mat::Zero(2, 2);
  fine(0, 1) = fine(1, 0) = 1.0;
  CHECK_THROWS_AS(geometry::rips_persistence(fine, 2), ConfigError);
}

TEST_CASE("bottleneck distance closed forms") {
  const auto a = diagram_of(1, {{0.0, 2.0}, {1.0, 3.0}});
  CHECK(geometry::bottleneck_distance(a, a) == 0.0);

  const auto single = diagram_of(1, {{0.0, 2.0}});
  const auto empty = diagram_of(1, {});
  CHECK(geometry::bottleneck_distance(single, empty) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(geometry::bottleneck_distance(empty, single) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(geometry::bottleneck_distance(empty, empty) == 0.0);

  const auto mismatched = diagram_of(0, {});
  CHECK_THROWS_AS(geometry::bottleneck_distance(a, mismatched), DataError);
}

TEST_CASE("bottleneck distance equals brute force on 200 random diagram pairs") {
  ts::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto random_diagram = [&](int max_points) {
      std::vector<std::pair<double, double>> pts;
      const int n = rng.below(max_points + 1);
      for (int i = 0; i < n; ++i) {
        const double birth = rng.uniform() * 2.0;
        const double death = birth + rng.uniform() * 2.0 + 1e-3;
        pts.emplace_back(birth, death);
      }
      return pts;
    };
    const auto pa = random_diagram(6);
    const auto pb = random_diagram(6);
    const double expected = ts::brute_force_bottleneck(pa, pb);
    const double got =
        geometry::bottleneck_distance(diagram_of(1, pa), diagram_of(1, pb));
    CHECK(got == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("bottleneck distance satisfies the triangle inequality") {
  ts::Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto random_diagram = [&]() {
      std::vector<std::pair<double, double>> pts;
      const int n = 1 + rng.below(5);
      for (int i = 0; i < n; ++i) {
        const double birth = rng.uniform();
        pts.emplace_back(birth, birth + rng.uniform() + 1e-3);
      }
      return diagram_of(1, pts);
    };
    const auto a = random_diagram();
    const auto b = random_diagram();
    const auto c = random_diagram();
    const double ab = geometry::bottleneck_distance(a, b);
    const double bc = geometry::bottleneck_distance(b, c);
    const double ac = geometry::bottleneck_distance(a, c);
    CHECK(ac <= ab + bc + 1e-9);
  }
}

TEST_CASE("pairwise distances are symmetric with the chosen metric") {
  ts::Rng rng(13);
  const Mat x = ts::random_matrix(rng, 6, 3);
  const Mat cos_dist = geometry::pairwise_distances(x, geometry::PointMetric::cosine);
  const Mat euc_dist = geometry::pairwise_distances(x, geometry::PointMetric::euclidean);
  for (int i = 0; i < 6; ++i) {
    CHECK(cos_dist(i, i) == 0.0);
    CHECK(euc_dist(i, i) == 0.0);
    for (int j = 0; j < 6; ++j) {
      CHECK(cos_dist(i, j) == cos_dist(j, i));
      CHECK(euc_dist(i, j) ==
            doctest::Approx((x.row(i) - x.row(j)).norm()).epsilon(1e-12));
      CHECK(cos_dist(i, j) >= 0.0);
    }
  }
}

TEST_CASE("gromov-hausdorff vanishes on identical and rotated spaces") {
  ts::Rng rng(14);
  const Mat x = ts::random_matrix(rng, 24, 5);
  const Mat r = ts::random_orthogonal(rng, 5);
  geometry::GhOptions options;
  options.preprocess = true;
  CHECK(geometry::gromov_hausdorff(x, x, options) == doctest::Approx(0.0));
  CHECK(geometry::gromov_hausdorff(x, Mat(x * r), options) <= 1e-10);
}

TEST_CASE("gromov-hausdorff of scaled squares equals the diagram bottleneck") {
  // Two squares, one scaled by two, compared under Euclidean distance with
  // preprocessing off (cosine would erase the scale). H1 diagrams: {(1,
  // sqrt 2)} and {(2, 2 sqrt 2)}; the diagonal projections dominate the
  // direct matching, so the bottleneck is sqrt(2) - 1... computed both ways.
  Mat small(4, 2), big(4, 2);
  small << 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0;
  big = 2.0 * small;
  geometry::GhOptions options;
  options.metric = geometry::PointMetric::euclidean;
  options.preprocess = false;
  options.homology_dim = 1;
  const double got = geometry::gromov_hausdorff(small, big, options);
  const double expected = ts::brute_force_bottleneck({{1.0, std::sqrt(2.0)}},
                                                     {{2.0, 2.0 * std::sqrt(2.0)}});
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));
  CHECK(got == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
}

TEST_CASE("hausdorff distance closed forms and oracle") {
  Mat x(1, 1), y(1, 1);
  x << 0.0;
  y << 3.0;
  CHECK(geometry::hausdorff_distance(x, x) == 0.0);
  CHECK(geometry::hausdorff_distance(x, y) == doctest::Approx(3.0).epsilon(1e-12));

  ts::Rng rng(15);
  const Mat a = ts::random_matrix(rng, 20, 4);
  const Mat b = ts::random_matrix(rng, 20, 4);
  double expected = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    const Mat& from = pass == 0 ? a : b;
    const Mat& to = pass == 0 ? b : a;
    for (int i = 0; i < from.rows(); ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (int j = 0; j < to.rows(); ++j) {
        nearest = std::min(nearest, (from.row(i) - to.row(j)).norm());
      }
      expected = std::max(expected, nearest);
    }
  }
  CHECK(geometry::hausdorff_distance(a, b) ==
        doctest::Approx(expected).epsilon(1e-12));
}
