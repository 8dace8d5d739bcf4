#pragma once

// Post-hoc isomorphism metrics between two embedding spaces: relational
// similarity of seed-pair cosine lists, eigenvector similarity over k-NN
// graph Laplacian spectra, and a Gromov-Hausdorff approximation via the
// bottleneck distance between Vietoris-Rips persistence diagrams.

#include <cstdint>
#include <vector>

#include "isoemb/isoloss.hpp"
#include "isoemb/types.hpp"

namespace isoemb::geometry {

// Unweighted undirected graph with zero diagonal, stored as a dense boolean
// adjacency matrix (row-major n*n).
struct NeighborGraph {
  int n = 0;
  std::vector<std::uint8_t> adjacency;

  bool at(int i, int j) const {
    return adjacency[static_cast<std::size_t>(i) * n + j] != 0;
  }
  void connect(int i, int j) {
    adjacency[static_cast<std::size_t>(i) * n + j] = 1;
    adjacency[static_cast<std::size_t>(j) * n + i] = 1;
  }
  int degree(int i) const;
};

struct PersistencePoint {
  double birth = 0.0;
  double death = 0.0;  // +infinity marks an essential class
};

struct PersistenceDiagram {
  int dim = 0;
  std::vector<PersistencePoint> points;
};

// Pearson correlation between the matched-order lists of pairwise cosine
// similarities of the seed vectors in each space. Uses the first `limit`
// seed pairs (limit <= 0 means all). Needs at least 3 usable pairs.
// Equals 1 - rsim training loss over the same seed subset.
double relational_similarity(const Mat& x, const Mat& y,
                             const isoloss::SeedDictionary& seeds,
                             int limit = 1000);

// k nearest neighbors by cosine distance, symmetrized by union: edge (i,j)
// present iff j is among i's k nearest or i among j's. Ties break to the
// lower index. Requires n > k >= 1.
NeighborGraph knn_graph(const Mat& x, int k);

// Unnormalized graph Laplacian L = D - A as a dense matrix.
Mat laplacian(const NeighborGraph& g);

// Sum of squared differences between the truncated ascending Laplacian
// spectra of the two graphs. Each spectrum is truncated to the largest
// prefix holding less than 90% of its total eigenvalue mass; the shared
// length is the minimum of the two. Graphs with no edges are an error.
double eigenvector_similarity(const NeighborGraph& gx, const NeighborGraph& gy);

// Convenience overload: builds k-NN graphs over the first `limit` rows of
// each space (limit <= 0 means all) and compares their spectra.
double eigenvector_similarity(const Mat& x, const Mat& y, int k = 2,
                              int limit = 10000);

// Persistence diagrams of the Vietoris-Rips filtration of a symmetric
// zero-diagonal distance matrix, for dimensions 0..max_dim (max_dim in
// {0, 1}). H0 pairs are (0, merge distance), one per union-find merge, plus
// one essential class per connected component. H1 pairs come from boundary
// reduction over the edge/triangle complex; zero-persistence H1 pairs (an
// artifact of the simplexwise tie ordering) are dropped.
std::vector<PersistenceDiagram> rips_persistence(const Mat& dist,
                                                 int max_dim = 1);

// Bottleneck distance between two diagrams of the same dimension: the
// minimum over partial matchings (diagonal projections allowed) of the
// maximum l-infinity pair cost. Essential (infinite-death) points are
// dropped before matching. Exact: binary search over candidate costs with
// bipartite-matching feasibility checks.
double bottleneck_distance(const PersistenceDiagram& a,
                           const PersistenceDiagram& b);

enum class PointMetric { cosine, euclidean };

// Symmetric zero-diagonal pairwise distance matrix under the given metric.
// Cosine distance is 1 - cosine similarity of the (re-normalized) rows.
Mat pairwise_distances(const Mat& x, PointMetric metric);

struct GhOptions {
  int limit = 5000;      // rows used per space (<= 0 means all)
  int homology_dim = 1;  // 0 or 1
  bool preprocess = true;
  PointMetric metric = PointMetric::cosine;
};

// Gromov-Hausdorff approximation: bottleneck distance between the two
// spaces' Rips persistence diagrams in the configured homology dimension.
// Persistence diagrams are isometry-invariant, so the optimal-orthogonal-
// alignment search is realized implicitly.
double gromov_hausdorff(const Mat& x, const Mat& y,
                        const GhOptions& options = {});

// Symmetric Hausdorff distance: max over both directions of the largest
// nearest-neighbor Euclidean distance.
double hausdorff_distance(const Mat& x, const Mat& y);

}  // namespace isoemb::geometry
