#include "isoemb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "isoemb/mapping.hpp"
#include "isoemb/numerics.hpp"

namespace isoemb::geometry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat unit_rows(const Mat& x) {
  Mat out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n > 0.0) out.row(i) /= n;
  }
  return out;
}

struct UnionFind {
  std::vector<std::int32_t> parent;
  explicit UnionFind(std::int32_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::int32_t find(std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  bool unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

// Hopcroft-Karp maximum bipartite matching.
class BipartiteMatcher {
 public:
  BipartiteMatcher(int n_left, int n_right)
      : n_left_(n_left), n_right_(n_right), adj_(n_left) {}

  void add_edge(int l, int r) { adj_[l].push_back(r); }

  int max_matching() {
    match_l_.assign(n_left_, -1);
    match_r_.assign(n_right_, -1);
    int matched = 0;
    while (bfs()) {
      for (int u = 0; u < n_left_; ++u) {
        if (match_l_[u] < 0 && dfs(u)) ++matched;
      }
    }
    return matched;
  }

 private:
  bool bfs() {
    std::queue<int> q;
    dist_.assign(n_left_, -1);
    for (int u = 0; u < n_left_; ++u) {
      if (match_l_[u] < 0) {
        dist_[u] = 0;
        q.push(u);
      }
    }
    bool found = false;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj_[u]) {
        const int w = match_r_[v];
        if (w < 0) {
          found = true;
        } else if (dist_[w] < 0) {
          dist_[w] = dist_[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  }

  bool dfs(int u) {
    for (int v : adj_[u]) {
      const int w = match_r_[v];
      if (w < 0 || (dist_[w] == dist_[u] + 1 && dfs(w))) {
        match_l_[u] = v;
        match_r_[v] = u;
        return true;
      }
    }
    dist_[u] = -1;
    return false;
  }

  int n_left_, n_right_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> match_l_, match_r_, dist_;
};

// Symmetric difference of two ascending index lists (GF(2) column addition).
std::vector<std::int32_t> xor_columns(const std::vector<std::int32_t>& a,
                                      const std::vector<std::int32_t>& b) {
  std::vector<std::int32_t> out;
  out.reserve(a.size() + b.size());
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                std::back_inserter(out));
  return out;
}

}  // namespace

int NeighborGraph::degree(int i) const {
  int d = 0;
  for (int j = 0; j < n; ++j) d += at(i, j) ? 1 : 0;
  return d;
}

double relational_similarity(const Mat& x, const Mat& y,
                             const isoloss::SeedDictionary& seeds,
                             int limit) {
  const std::size_t take =
      limit > 0 ? std::min<std::size_t>(seeds.size(), limit) : seeds.size();
  if (take < 3) throw DataError("relational similarity needs at least 3 seed pairs");
  Mat xs(static_cast<Eigen::Index>(take), x.cols());
  Mat ys(static_cast<Eigen::Index>(take), y.cols());
  for (std::size_t i = 0; i < take; ++i) {
    const auto [si, ti] = seeds.pairs[i];
    if (si < 0 || si >= x.rows() || ti < 0 || ti >= y.rows()) {
      throw DataError("seed pair id out of range");
    }
    xs.row(static_cast<Eigen::Index>(i)) = x.row(si);
    ys.row(static_cast<Eigen::Index>(i)) = y.row(ti);
  }
  const Vec cx = isoloss::pairwise_cosines(xs);
  const Vec cy = isoloss::pairwise_cosines(ys);
  return numerics::pearson(cx, cy);
}

NeighborGraph knn_graph(const Mat& x, int k) {
  if (k < 1) throw ConfigError("k-NN graph needs k >= 1");
  const int n = static_cast<int>(x.rows());
  if (n <= k) throw DataError("k-NN graph needs more points than k");

  const Mat unit = unit_rows(x);
  NeighborGraph g;
  g.n = n;
  g.adjacency.assign(static_cast<std::size_t>(n) * n, 0);

  std::vector<std::pair<double, int>> order(static_cast<std::size_t>(n - 1));
  Vec sims(n);
  for (int i = 0; i < n; ++i) {
    sims.noalias() = unit * unit.row(i).transpose();
    std::size_t m = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i) order[m++] = {1.0 - sims[j], j};
    }
    std::partial_sort(order.begin(), order.begin() + k, order.end());
    for (int t = 0; t < k; ++t) g.connect(i, order[t].second);
  }
  return g;
}

Mat laplacian(const NeighborGraph& g) {
  Mat l = Mat::Zero(g.n, g.n);
  for (int i = 0; i < g.n; ++i) {
    int deg = 0;
    for (int j = 0; j < g.n; ++j) {
      if (g.at(i, j)) {
        l(i, j) = -1.0;
        ++deg;
      }
    }
    l(i, i) = static_cast<double>(deg);
  }
  return l;
}

double eigenvector_similarity(const NeighborGraph& gx,
                              const NeighborGraph& gy) {
  const auto spectrum = [](const NeighborGraph& g) {
    Vec values = numerics::sym_eig(laplacian(g)).values;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      values[i] = std::max(0.0, values[i]);
    }
    return values;
  };
  const Vec vx = spectrum(gx);
  const Vec vy = spectrum(gy);
  if (vx.sum() <= 0.0 || vy.sum() <= 0.0) {
    throw DataError("eigenvector similarity needs graphs with at least one edge");
  }
  const int l = std::min(isoloss::spectral_mass_cutoff(vx),
                         isoloss::spectral_mass_cutoff(vy));
  double total = 0.0;
  for (int i = 0; i < l; ++i) {
    const double d = vx[i] - vy[i];
    total += d * d;
  }
  return total;
}

double eigenvector_similarity(const Mat& x, const Mat& y, int k, int limit) {
  const auto rows = [&](const Mat& m) {
    return limit > 0 ? std::min<Eigen::Index>(limit, m.rows()) : m.rows();
  };
  const Mat xs = x.topRows(rows(x));
  const Mat ys = y.topRows(rows(y));
  if (xs.rows() < k + 1 || ys.rows() < k + 1) {
    throw DataError("eigenvector similarity needs at least k+1 rows per space");
  }
  return eigenvector_similarity(knn_graph(xs, k), knn_graph(ys, k));
}

std::vector<PersistenceDiagram> rips_persistence(const Mat& dist,
                                                 int max_dim) {
  if (max_dim < 0 || max_dim > 1) {
    throw ConfigError("rips persistence supports dimensions 0 and 1 only");
  }
  const Eigen::Index n = dist.rows();
  if (n < 1 || dist.cols() != n) {
    throw DataError("rips persistence needs a square non-empty matrix");
  }
  if (!dist.allFinite()) throw DataError("distance matrix has non-finite entries");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(dist(i, i)) > 1e-12) {
      throw DataError("distance matrix diagonal must be zero");
    }
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(dist(i, j) - dist(j, i)) > 1e-9) {
        throw DataError("distance matrix must be symmetric");
      }
    }
  }

  struct Edge {
    double w;
    std::int32_t u, v;
    bool operator<(const Edge& o) const {
      return std::tie(w, u, v) < std::tie(o.w, o.u, o.v);
    }
  };
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (std::int32_t i = 0; i < n; ++i) {
    for (std::int32_t j = i + 1; j < n; ++j) {
      edges.push_back({dist(i, j), i, j});
    }
  }
  std::sort(edges.begin(), edges.end());

  std::vector<PersistenceDiagram> out(static_cast<std::size_t>(max_dim) + 1);
  out[0].dim = 0;

  UnionFind uf(static_cast<std::int32_t>(n));
  int components = static_cast<int>(n);
  for (const Edge& e : edges) {
    if (uf.unite(e.u, e.v)) {
      out[0].points.push_back({0.0, e.w});
      --components;
    }
  }
  for (int c = 0; c < components; ++c) out[0].points.push_back({0.0, kInf});

  if (max_dim < 1) return out;
  out[1].dim = 1;
  if (n < 3) return out;

  // Edge ids in filtration order; triangles refer to edges by id.
  std::vector<std::int32_t> edge_id(static_cast<std::size_t>(n) * n, -1);
  std::vector<double> edge_w(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    edge_id[static_cast<std::size_t>(edges[e].u) * n + edges[e].v] =
        static_cast<std::int32_t>(e);
    edge_id[static_cast<std::size_t>(edges[e].v) * n + edges[e].u] =
        static_cast<std::int32_t>(e);
    edge_w[e] = edges[e].w;
  }

  struct Triangle {
    double w;
    std::int32_t e0, e1, e2;  // edge ids, descending
    bool operator<(const Triangle& o) const {
      return std::tie(w, e0, e1, e2) < std::tie(o.w, o.e0, o.e1, o.e2);
    }
  };
  std::vector<Triangle> triangles;
  triangles.reserve(static_cast<std::size_t>(n) * (n - 1) * (n - 2) / 6);
  for (std::int32_t i = 0; i < n; ++i) {
    for (std::int32_t j = i + 1; j < n; ++j) {
      const std::int32_t eij = edge_id[static_cast<std::size_t>(i) * n + j];
      for (std::int32_t k = j + 1; k < n; ++k) {
        std::int32_t ids[3] = {
            eij, edge_id[static_cast<std::size_t>(i) * n + k],
            edge_id[static_cast<std::size_t>(j) * n + k]};
        std::sort(std::begin(ids), std::end(ids), std::greater<>());
        triangles.push_back(
            {edge_w[static_cast<std::size_t>(ids[0])], ids[0], ids[1], ids[2]});
      }
    }
  }
  std::sort(triangles.begin(), triangles.end());

  // Standard GF(2) boundary reduction restricted to triangle columns: the
  // final low entry of each surviving column is the cycle-creating edge the
  // triangle kills.
  std::vector<std::int32_t> pivot_owner(edges.size(), -1);
  std::vector<std::vector<std::int32_t>> stored;
  std::vector<std::int32_t> col;
  for (const Triangle& t : triangles) {
    col.assign({t.e2, t.e1, t.e0});
    while (!col.empty()) {
      const std::int32_t owner = pivot_owner[static_cast<std::size_t>(col.back())];
      if (owner < 0) break;
      col = xor_columns(col, stored[static_cast<std::size_t>(owner)]);
    }
    if (col.empty()) continue;
    const std::int32_t low = col.back();
    pivot_owner[static_cast<std::size_t>(low)] =
        static_cast<std::int32_t>(stored.size());
    stored.push_back(col);
    const double birth = edge_w[static_cast<std::size_t>(low)];
    if (t.w > birth) out[1].points.push_back({birth, t.w});
  }
  return out;
}

double bottleneck_distance(const PersistenceDiagram& a,
                           const PersistenceDiagram& b) {
  if (a.dim != b.dim) {
    throw DataError("bottleneck distance needs diagrams of the same dimension");
  }
  std::vector<PersistencePoint> pa, pb;
  for (const auto& p : a.points) {
    if (std::isfinite(p.death)) pa.push_back(p);
  }
  for (const auto& p : b.points) {
    if (std::isfinite(p.death)) pb.push_back(p);
  }
  const int na = static_cast<int>(pa.size());
  const int nb = static_cast<int>(pb.size());
  if (na == 0 && nb == 0) return 0.0;

  const auto diag_cost = [](const PersistencePoint& p) {
    return (p.death - p.birth) / 2.0;
  };
  const auto pair_cost = [](const PersistencePoint& p,
                            const PersistencePoint& q) {
    return std::max(std::abs(p.birth - q.birth), std::abs(p.death - q.death));
  };

  std::vector<double> candidates = {0.0};
  for (const auto& p : pa) candidates.push_back(diag_cost(p));
  for (const auto& q : pb) candidates.push_back(diag_cost(q));
  for (const auto& p : pa) {
    for (const auto& q : pb) candidates.push_back(pair_cost(p, q));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  // Left side: real A points then diagonal proxies for B. Right side: real B
  // points then diagonal proxies for A. A perfect matching at threshold
  // lambda exists iff a partial diagram matching of max cost <= lambda does.
  const int total = na + nb;
  const auto feasible = [&](double lambda) {
    BipartiteMatcher m(total, total);
    for (int i = 0; i < na; ++i) {
      for (int j = 0; j < nb; ++j) {
        if (pair_cost(pa[i], pb[j]) <= lambda) m.add_edge(i, j);
      }
      if (diag_cost(pa[i]) <= lambda) m.add_edge(i, nb + i);
    }
    for (int j = 0; j < nb; ++j) {
      if (diag_cost(pb[j]) <= lambda) m.add_edge(na + j, j);
      for (int i = 0; i < na; ++i) m.add_edge(na + j, nb + i);
    }
    return m.max_matching() == total;
  };

  std::size_t lo = 0, hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (feasible(candidates[mid])) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return candidates[lo];
}

Mat pairwise_distances(const Mat& x, PointMetric metric) {
  const Eigen::Index n = x.rows();
  if (n < 1) throw DataError("pairwise distances need a non-empty matrix");
  Mat d = Mat::Zero(n, n);
  if (metric == PointMetric::cosine) {
    const Mat unit = unit_rows(x);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = std::max(0.0, 1.0 - unit.row(i).dot(unit.row(j)));
        d(i, j) = v;
        d(j, i) = v;
      }
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = (x.row(i) - x.row(j)).norm();
        d(i, j) = v;
        d(j, i) = v;
      }
    }
  }
  return d;
}

double gromov_hausdorff(const Mat& x, const Mat& y, const GhOptions& options) {
  if (options.homology_dim < 0 || options.homology_dim > 1) {
    throw ConfigError("gromov-hausdorff homology dimension must be 0 or 1");
  }
  if (x.rows() < 1 || y.rows() < 1) {
    throw DataError("gromov-hausdorff needs non-empty spaces");
  }
  const auto prepare = [&](const Mat& m) {
    Mat p = options.preprocess ? mapping::preprocess(m) : m;
    const Eigen::Index rows =
        options.limit > 0 ? std::min<Eigen::Index>(options.limit, p.rows())
                          : p.rows();
    return Mat(p.topRows(rows));
  };
  const Mat dx = pairwise_distances(prepare(x), options.metric);
  const Mat dy = pairwise_distances(prepare(y), options.metric);
  const auto px = rips_persistence(dx, options.homology_dim);
  const auto py = rips_persistence(dy, options.homology_dim);
  const auto dim = static_cast<std::size_t>(options.homology_dim);
  return bottleneck_distance(px[dim], py[dim]);
}

double hausdorff_distance(const Mat& x, const Mat& y) {
  if (x.rows() < 1 || y.rows() < 1) {
    throw DataError("hausdorff distance needs non-empty point sets");
  }
  if (x.cols() != y.cols()) {
    throw DataError("hausdorff distance needs a shared space");
  }
  const auto directed = [](const Mat& a, const Mat& b) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double best = kInf;
      for (Eigen::Index j = 0; j < b.rows(); ++j) {
        best = std::min(best, (a.row(i) - b.row(j)).norm());
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(x, y), directed(y, x));
}

}  // namespace isoemb::geometry
