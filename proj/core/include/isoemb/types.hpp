#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace isoemb {

// Row-major so that one embedding row is contiguous in memory; all numeric
// kernels in the library operate on this type.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// process exit codes: ConfigError -> 1, DataError -> 2, NumericError -> 3.

// Invalid configuration or usage (bad flag values, missing required options).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unusable input data (bad files, empty corpora, dimension
// mismatches between user-supplied artifacts).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure (non-finite values, degenerate systems the algorithms
// cannot proceed through).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic, platform-independent PRNG (splitmix64). Every stochastic
// component draws from its own seeded stream so that runs with the same seed
// are bit-reproducible regardless of evaluation order elsewhere.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). Modulo bias is negligible for the small bounds used
  // here (window sizes, vocabulary indices) and keeps draws cheap.
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

// Derives an independent stream seed from a base seed and a stream tag
// (e.g. purpose id mixed with epoch). Uses the splitmix64 mixing function so
// related tags produce unrelated streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace isoemb
