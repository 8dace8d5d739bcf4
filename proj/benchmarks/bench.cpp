#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "isoemb/corpus.hpp"
#include "isoemb/embedding.hpp"
#include "isoemb/geometry.hpp"
#include "isoemb/isoloss.hpp"
#include "isoemb/mapping.hpp"
#include "isoemb/sgns.hpp"

namespace {

using isoemb::Mat;

Mat gaussian(std::mt19937_64& gen, int rows, int cols) {
  std::normal_distribution<double> dist;
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = dist(gen);
  }
  return m;
}

void bm_procrustes(benchmark::State& state) {
  std::mt19937_64 gen(1);
  const int n = static_cast<int>(state.range(0));
  const int d = static_cast<int>(state.range(1));
  const Mat x = gaussian(gen, n, d);
  const Mat y = gaussian(gen, n, d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(isoemb::isoloss::solve_procrustes(x, y));
  }
}
BENCHMARK(bm_procrustes)->Args({1000, 50})->Args({1000, 300});

void bm_rsim_loss(benchmark::State& state) {
  std::mt19937_64 gen(2);
  const int n = static_cast<int>(state.range(0));
  const Mat x = gaussian(gen, n, 50);
  const Mat y = gaussian(gen, n, 50);
  for (auto _ : state) {
    benchmark::DoNotOptimize(isoemb::isoloss::rsim_loss(x, y));
  }
}
BENCHMARK(bm_rsim_loss)->Arg(100)->Arg(300);

void bm_rsim_u_loss(benchmark::State& state) {
  std::mt19937_64 gen(3);
  const int n = static_cast<int>(state.range(0));
  const Mat x = gaussian(gen, n, 50);
  const Mat y = gaussian(gen, n, 50);
  for (auto _ : state) {
    benchmark::DoNotOptimize(isoemb::isoloss::rsim_u_loss(x, y));
  }
}
BENCHMARK(bm_rsim_u_loss)->Arg(100)->Arg(300);

void bm_evs_u_loss(benchmark::State& state) {
  std::mt19937_64 gen(4);
  const int n = static_cast<int>(state.range(0));
  const Mat x = gaussian(gen, n, 50);
  const Mat y = gaussian(gen, n, 50);
  for (auto _ : state) {
    benchmark::DoNotOptimize(isoemb::isoloss::evs_u_loss(x, y));
  }
}
BENCHMARK(bm_evs_u_loss)->Arg(50)->Arg(100);

void bm_whiten(benchmark::State& state) {
  std::mt19937_64 gen(5);
  const int n = static_cast<int>(state.range(0));
  const Mat x = isoemb::mapping::preprocess(gaussian(gen, n, 300));
  for (auto _ : state) {
    benchmark::DoNotOptimize(isoemb::mapping::whiten(x));
  }
}
BENCHMARK(bm_whiten)->Arg(1000)->Arg(5000);

void bm_knn_graph(benchmark::State& state) {
  std::mt19937_64 gen(6);
  const int n = static_cast<int>(state.range(0));
  const Mat x = gaussian(gen, n, 50);
  for (auto _ : state) {
    benchmark::DoNotOptimize(isoemb::geometry::knn_graph(x, 10));
  }
}
BENCHMARK(bm_knn_graph)->Arg(500)->Arg(2000);

void bm_rips_persistence(benchmark::State& state) {
  std::mt19937_64 gen(7);
  const int n = static_cast<int>(state.range(0));
  const Mat x = gaussian(gen, n, 8);
  Mat dist(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dist(i, j) = (x.row(i) - x.row(j)).norm();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(isoemb::geometry::rips_persistence(dist, 1));
  }
}
BENCHMARK(bm_rips_persistence)->Arg(30)->Arg(60);

void bm_bottleneck(benchmark::State& state) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const int n = static_cast<int>(state.range(0));
  isoemb::geometry::PersistenceDiagram a, b;
  for (int i = 0; i < n; ++i) {
    double ba = u(gen), bb = u(gen);
    a.points.push_back({ba, ba + 1e-3 + u(gen)});
    b.points.push_back({bb, bb + 1e-3 + u(gen)});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(isoemb::geometry::bottleneck_distance(a, b));
  }
}
BENCHMARK(bm_bottleneck)->Arg(50)->Arg(150);

void bm_sgns_batch(benchmark::State& state) {
  std::mt19937_64 gen(9);
  const int vocab_n = 10000, dim = 300, batch = 4096, k = 10;
  isoemb::EmbeddingSpace space;
  for (int i = 0; i < vocab_n; ++i) {
    const std::string w = "w" + std::to_string(i);
    space.vocab.words.push_back(w);
    space.vocab.counts.push_back(1);
    space.vocab.word_to_id[w] = i;
  }
  space.input_vectors = 0.01 * gaussian(gen, vocab_n, dim);
  space.output_vectors = 0.01 * gaussian(gen, vocab_n, dim);

  std::uniform_int_distribution<int> pick(0, vocab_n - 1);
  isoemb::corpus::PairBatch pb;
  pb.k = k;
  for (int i = 0; i < batch; ++i) {
    pb.centers.push_back(pick(gen));
    pb.contexts.push_back(pick(gen));
    for (int j = 0; j < k; ++j) pb.negatives.push_back(pick(gen));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(isoemb::sgns::sgns_batch_loss(pb, space));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(bm_sgns_batch);

}  // namespace

BENCHMARK_MAIN();
