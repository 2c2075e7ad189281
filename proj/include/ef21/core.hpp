#pragma once

// Shared vocabulary: vector types, error hierarchy, and the portable
// random-stream utilities every other header builds on.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ef21 {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnsupportedLabelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedOperationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Small vector helpers
// ---------------------------------------------------------------------------

inline double squared_norm(const Vector& v) { return v.squaredNorm(); }

inline double squared_distance(const Vector& a, const Vector& b) { return (a - b).squaredNorm(); }

inline bool all_finite(const Vector& v) { return v.allFinite(); }

// Sum of vectors in ascending index order. Fixed order keeps aggregation
// bitwise reproducible regardless of how the per-worker work was scheduled.
inline Vector ordered_sum(const std::vector<Vector>& parts) {
  Vector acc = Vector::Zero(parts.front().size());
  for (const auto& p : parts) acc += p;
  return acc;
}

inline Vector ordered_mean(const std::vector<Vector>& parts) {
  return ordered_sum(parts) / static_cast<double>(parts.size());
}

// ---------------------------------------------------------------------------
// Random streams
//
// std::mt19937_64 output is fixed by the standard, but the std::*_distribution
// adaptors are not, so all draws go through the helpers below to keep seeded
// runs identical across standard libraries.
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class StreamPurpose : std::uint64_t { Compression = 1, Sampling = 2, Fixture = 3, Oracle = 4 };

// Seed for the stream owned by (worker, round, purpose). Each component is
// mixed before combining so that e.g. (worker 1, round 0) and (worker 0,
// round 1) never collide.
constexpr std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t worker, std::uint64_t round,
                                    StreamPurpose purpose = StreamPurpose::Compression) noexcept {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ (worker + 0x1000003ULL));
  h = splitmix64(h ^ (round + 0x2000005ULL));
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  return h;
}

inline Rng make_stream(std::uint64_t base_seed, std::uint64_t worker, std::uint64_t round,
                       StreamPurpose purpose = StreamPurpose::Compression) {
  return Rng(stream_seed(base_seed, worker, round, purpose));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [0, bound) by rejection; bound > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return r % bound;
}

// Standard normal via Box-Muller (one draw per call; the partner is discarded).
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline Vector gaussian_vector(Rng& rng, std::size_t d) {
  Vector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = standard_normal(rng);
  return v;
}

// First k entries of a partial Fisher-Yates shuffle of {0, ..., n-1}: a
// uniformly random k-subset, in draw order.
inline std::vector<std::size_t> random_subset(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace ef21
