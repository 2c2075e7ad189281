#pragma once

// Contractive compressors C with E||C(x) - x||^2 <= (1 - alpha)||x||^2, the
// stateful Markov compressor built on top of them, and an empirical check of
// the contraction parameter.

#include "ef21/core.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ef21 {

enum class CompressorKind { TopK, RandKScaled, ScaledLinear, Identity };

inline std::string to_string(CompressorKind kind) {
  switch (kind) {
    case CompressorKind::TopK: return "top_k";
    case CompressorKind::RandKScaled: return "rand_k";
    case CompressorKind::ScaledLinear: return "scaled_linear";
    case CompressorKind::Identity: return "identity";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Primitive maps
// ---------------------------------------------------------------------------

namespace detail {

inline void require_k(std::size_t k, std::size_t d) {
  if (k < 1 || k > d) {
    throw ArgumentError("k must satisfy 1 <= k <= d (k=" + std::to_string(k) + ", d=" + std::to_string(d) +
                        ")");
  }
}

inline double magnitude_key(double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : std::abs(v); }

}  // namespace detail

// Keeps the k entries of largest magnitude. Among equal magnitudes the lower
// index wins, so the output is a deterministic function of x.
inline Vector top_k(const Vector& x, std::size_t k) {
  const auto d = static_cast<std::size_t>(x.size());
  detail::require_k(k, d);
  if (k == d) return x;
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&x](std::size_t a, std::size_t b) {
                      const double ma = detail::magnitude_key(x[static_cast<Eigen::Index>(a)]);
                      const double mb = detail::magnitude_key(x[static_cast<Eigen::Index>(b)]);
                      return ma > mb || (ma == mb && a < b);
                    });
  Vector out = Vector::Zero(x.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<Eigen::Index>(order[i]);
    out[j] = x[j];
  }
  return out;
}

// Unbiased Rand-k: (d/k) x_j on a uniform random k-subset, zero elsewhere.
// Member of U(omega) with omega = d/k - 1.
inline Vector rand_k(const Vector& x, std::size_t k, Rng& rng) {
  const auto d = static_cast<std::size_t>(x.size());
  detail::require_k(k, d);
  const double scale = static_cast<double>(d) / static_cast<double>(k);
  Vector out = Vector::Zero(x.size());
  for (auto j : random_subset(rng, d, k)) {
    const auto jj = static_cast<Eigen::Index>(j);
    out[jj] = scale * x[jj];
  }
  return out;
}

// Rand-k divided by (1 + omega). The d/k factors cancel, so the selected
// coordinates are copied exactly rather than multiplied and divided back.
inline Vector rand_k_scaled(const Vector& x, std::size_t k, Rng& rng) {
  const auto d = static_cast<std::size_t>(x.size());
  detail::require_k(k, d);
  if (k == d) return x;
  Vector out = Vector::Zero(x.size());
  for (auto j : random_subset(rng, d, k)) {
    const auto jj = static_cast<Eigen::Index>(j);
    out[jj] = x[jj];
  }
  return out;
}

inline Vector scaled_linear(const Vector& x, double c) {
  if (!(c > 0.0 && c <= 1.0)) throw ArgumentError("scaled_linear requires 0 < c <= 1");
  if (c == 1.0) return x;
  return c * x;
}

// ---------------------------------------------------------------------------
// Compressor value type
// ---------------------------------------------------------------------------

class Compressor {
 public:
  static Compressor top_k(std::size_t k, std::size_t d, unsigned value_bits = 32) {
    detail::require_k(k, d);
    return Compressor(CompressorKind::TopK, d, k, 1.0, value_bits);
  }

  static Compressor rand_k_scaled(std::size_t k, std::size_t d, unsigned value_bits = 32) {
    detail::require_k(k, d);
    return Compressor(CompressorKind::RandKScaled, d, k, 1.0, value_bits);
  }

  static Compressor scaled_linear(double c, std::size_t d, unsigned value_bits = 32) {
    if (!(c > 0.0 && c <= 1.0)) throw ArgumentError("scaled_linear requires 0 < c <= 1");
    return Compressor(CompressorKind::ScaledLinear, d, d, c, value_bits);
  }

  static Compressor identity(std::size_t d, unsigned value_bits = 32) {
    return Compressor(CompressorKind::Identity, d, d, 1.0, value_bits);
  }

  CompressorKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return d_; }
  std::size_t k() const noexcept { return k_; }
  double scale() const noexcept { return c_; }
  unsigned value_bits() const noexcept { return value_bits_; }

  // Contraction parameter: k/d for the sparsifiers, c(2 - c) for c*x.
  double alpha() const noexcept {
    switch (kind_) {
      case CompressorKind::TopK:
      case CompressorKind::RandKScaled:
        return static_cast<double>(k_) / static_cast<double>(d_);
      case CompressorKind::ScaledLinear: return c_ * (2.0 - c_);
      case CompressorKind::Identity: return 1.0;
    }
    return 1.0;
  }

  bool deterministic() const noexcept { return kind_ != CompressorKind::RandKScaled; }

  // Lossless compressors return their input bit-for-bit.
  bool lossless() const noexcept { return alpha() == 1.0; }

  // Payload travels as (index, value) pairs rather than a dense vector.
  bool sparse_payload() const noexcept {
    return kind_ == CompressorKind::TopK || kind_ == CompressorKind::RandKScaled;
  }

  // `rng` may be null only for deterministic compressors.
  Vector operator()(const Vector& x, Rng* rng = nullptr) const {
    if (static_cast<std::size_t>(x.size()) != d_) {
      throw ArgumentError("compressor dimension mismatch: expected " + std::to_string(d_) + ", got " +
                          std::to_string(x.size()));
    }
    switch (kind_) {
      case CompressorKind::TopK: return ef21::top_k(x, k_);
      case CompressorKind::RandKScaled:
        if (rng == nullptr) throw ArgumentError("rand_k compressor needs a random stream");
        return ef21::rand_k_scaled(x, k_, *rng);
      case CompressorKind::ScaledLinear: return ef21::scaled_linear(x, c_);
      case CompressorKind::Identity: return x;
    }
    return x;
  }

  std::string describe() const {
    std::ostringstream os;
    os << to_string(kind_);
    if (kind_ == CompressorKind::TopK || kind_ == CompressorKind::RandKScaled) os << "(k=" << k_ << ")";
    if (kind_ == CompressorKind::ScaledLinear) os << "(c=" << c_ << ")";
    return os.str();
  }

  bool operator==(const Compressor&) const = default;

 private:
  Compressor(CompressorKind kind, std::size_t d, std::size_t k, double c, unsigned value_bits)
      : kind_(kind), d_(d), k_(k), c_(c), value_bits_(value_bits) {
    if (value_bits_ == 0) throw ArgumentError("value_bits must be positive");
  }

  CompressorKind kind_;
  std::size_t d_;
  std::size_t k_;
  double c_;
  unsigned value_bits_;
};

// ---------------------------------------------------------------------------
// Markov compressor
// ---------------------------------------------------------------------------

struct MarkovState {
  Vector g;
};

struct MarkovUpdate {
  MarkovState state;
  Vector payload;  // C(v - g), the only thing that crosses the wire
};

// One step of M(v') = M(v) + C(v' - M(v)). With a lossless compressor the
// new estimate is set to v directly, which is the same value without the
// round-off of g + (v - g).
inline MarkovUpdate markov_step(const MarkovState& state, const Vector& v, const Compressor& comp,
                                Rng* rng = nullptr) {
  if (state.g.size() != v.size()) {
    throw ArgumentError("markov_step: state has dimension " + std::to_string(state.g.size()) +
                        " but input has dimension " + std::to_string(v.size()));
  }
  Vector payload = comp(v - state.g, rng);
  if (comp.lossless()) return {MarkovState{v}, std::move(payload)};
  return {MarkovState{state.g + payload}, std::move(payload)};
}

// Initial state M(v^0) = C(v^0).
inline MarkovState markov_init(const Vector& v0, const Compressor& comp, Rng* rng = nullptr) {
  return MarkovState{comp(v0, rng)};
}

// ---------------------------------------------------------------------------
// Empirical contraction
// ---------------------------------------------------------------------------

// Largest observed ratio E||C(x) - x||^2 / ||x||^2 over `trials` Gaussian
// inputs and `trials` random-sign inputs of uniform magnitude (where Top-k
// meets its bound with equality). For randomized compressors each input's
// expectation is a Monte-Carlo mean over `draws_per_input` draws.
inline double contraction_estimate(const Compressor& comp, std::size_t d, std::size_t trials, Rng& rng,
                                   std::size_t draws_per_input = 64) {
  if (trials == 0) throw ArgumentError("contraction_estimate needs trials >= 1");
  if (d != comp.dim()) throw ArgumentError("contraction_estimate: dimension does not match compressor");
  const std::size_t draws = comp.deterministic() ? 1 : std::max<std::size_t>(draws_per_input, 1);
  double worst = 0.0;
  auto probe = [&](const Vector& x) {
    const double norm = x.squaredNorm();
    if (norm == 0.0) return;
    double acc = 0.0;
    for (std::size_t r = 0; r < draws; ++r) acc += (comp(x, &rng) - x).squaredNorm();
    worst = std::max(worst, acc / static_cast<double>(draws) / norm);
  };
  for (std::size_t t = 0; t < trials; ++t) {
    probe(gaussian_vector(rng, d));
    Vector flat(static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < flat.size(); ++j) flat[j] = (rng() & 1U) ? 1.0 : -1.0;
    probe(flat);
  }
  return worst;
}

}  // namespace ef21
