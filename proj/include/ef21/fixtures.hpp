#pragma once

// Seeded synthetic datasets. The generators only use the portable RNG
// helpers from core.hpp, so the output is identical across platforms and
// can be pinned by hash.

#include "ef21/core.hpp"
#include "ef21/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace ef21::fixtures {

namespace detail {

inline Dataset from_dense(std::string name, const Matrix& a, Vector labels) {
  Dataset ds;
  ds.name = std::move(name);
  ds.features = a.sparseView();
  ds.features.makeCompressed();
  ds.labels = std::move(labels);
  return ds;
}

inline std::size_t draw_category(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform01(rng) * total;
  for (std::size_t c = 0; c + 1 < weights.size(); ++c) {
    if (u < weights[c]) return c;
    u -= weights[c];
  }
  return weights.size() - 1;
}

inline double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(q * static_cast<double>(values.size() - 1));
  return values[idx];
}

// One-hot categorical rows with a planted logistic label model. `drift`
// moves the category logits linearly with the row index, which makes the
// contiguous client shards heterogeneous.
inline Dataset categorical(std::string name, const std::vector<std::size_t>& groups, std::size_t rows,
                           double drift, double positive_share, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0, 0, StreamPurpose::Fixture);
  std::size_t d = 0;
  for (auto g : groups) d += g;

  std::vector<std::vector<double>> base, slope;
  for (auto g : groups) {
    std::vector<double> b(g), s(g);
    for (std::size_t c = 0; c < g; ++c) {
      b[c] = 1.2 * standard_normal(rng);
      s[c] = drift * standard_normal(rng);
    }
    base.push_back(std::move(b));
    slope.push_back(std::move(s));
  }
  const Vector planted = gaussian_vector(rng, d);

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(rows * groups.size());
  std::vector<double> scores(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double phase = static_cast<double>(r) / static_cast<double>(rows) - 0.5;
    std::size_t offset = 0;
    double z = 0.0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      std::vector<double> w(groups[gi]);
      for (std::size_t c = 0; c < groups[gi]; ++c) w[c] = std::exp(base[gi][c] + phase * slope[gi][c]);
      const auto col = offset + draw_category(rng, w);
      entries.emplace_back(static_cast<int>(r), static_cast<int>(col), 1.0);
      z += planted[static_cast<Eigen::Index>(col)];
      offset += groups[gi];
    }
    scores[r] = z;
  }
  const double shift = quantile(scores, 1.0 - positive_share);
  Vector labels(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const double p = 1.0 / (1.0 + std::exp(-(scores[r] - shift)));
    labels[static_cast<Eigen::Index>(r)] = uniform01(rng) < p ? 1.0 : -1.0;
  }

  Dataset ds;
  ds.name = std::move(name);
  ds.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  ds.features.setFromTriplets(entries.begin(), entries.end());
  ds.features.makeCompressed();
  ds.labels = std::move(labels);
  return ds;
}

}  // namespace detail

inline constexpr std::uint64_t kDefaultSeed = 1;

// Least squares, d = 10, 5 clients x 50 rows. Each client draws its targets
// from its own planted model, so the clients disagree at the optimum.
inline Dataset synthetic_ls_small(std::uint64_t seed = kDefaultSeed) {
  constexpr std::size_t d = 10, clients = 5, per_client = 50;
  Rng rng = make_stream(seed, 0, 0, StreamPurpose::Fixture);
  Matrix a(clients * per_client, d);
  Vector b(clients * per_client);
  for (std::size_t i = 0; i < clients; ++i) {
    const Vector planted = 2.0 * gaussian_vector(rng, d);
    for (std::size_t r = 0; r < per_client; ++r) {
      const auto row = static_cast<Eigen::Index>(i * per_client + r);
      a.row(row) = gaussian_vector(rng, d).transpose();
      b[row] = a.row(row).dot(planted) + 0.5 * standard_normal(rng);
    }
  }
  return detail::from_dense("synthetic-ls-small", a, b);
}

// Least squares with 3 clients in d = 3. Client i has rows 2 a_i and
// sqrt(2) e_k with targets (2, 0, 0, 0), so
//   f_i(x) = (a_i^T x - 1)^2 + |x|^2 / 2.
// The a_i are permutations of (-3, 2, 2): the client gradients are large and
// point in different directions, so Top-1 drops most of each of them and
// DCGD stalls far from the optimum while EF21 converges.
inline Dataset dcgd_divergence() {
  const std::array<std::array<double, 3>, 3> dirs{{{-3.0, 2.0, 2.0}, {2.0, -3.0, 2.0}, {2.0, 2.0, -3.0}}};
  Matrix a = Matrix::Zero(12, 3);
  Vector b = Vector::Zero(12);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index k = 0; k < 3; ++k) {
      a(4 * i, k) = 2.0 * dirs[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      a(4 * i + 1 + k, k) = std::sqrt(2.0);
    }
    b[4 * i] = 2.0;
  }
  return detail::from_dense("dcgd-divergence", a, b);
}

// Shaped like mushrooms: 8120 rows, 22 one-hot groups, d = 112.
inline Dataset mushrooms_surrogate(std::uint64_t seed = kDefaultSeed) {
  const std::vector<std::size_t> groups{6, 4, 8, 2, 9, 2, 2, 2, 10, 2, 4, 4, 4, 9, 9, 1, 4, 3, 5, 9, 6, 7};
  return detail::categorical("mushrooms-surrogate", groups, 8120, 3.0, 0.48, seed);
}

// Shaped like a 2000-row subsample of a9a: 14 one-hot groups, d = 123, about
// a quarter positive labels.
inline Dataset a9a_surrogate(std::uint64_t seed = kDefaultSeed) {
  const std::vector<std::size_t> groups{5, 8, 5, 16, 5, 7, 14, 6, 5, 2, 2, 2, 5, 41};
  return detail::categorical("a9a-surrogate", groups, 2000, 0.0, 0.24, seed);
}

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"synthetic-ls-small", "dcgd-divergence", "mushrooms-surrogate",
                                              "a9a-surrogate"};
  return names;
}

inline bool is_builtin(const std::string& name) {
  const auto& n = builtin_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

inline Dataset builtin(const std::string& name) {
  if (name == "synthetic-ls-small") return synthetic_ls_small();
  if (name == "dcgd-divergence") return dcgd_divergence();
  if (name == "mushrooms-surrogate") return mushrooms_surrogate();
  if (name == "a9a-surrogate") return a9a_surrogate();
  throw ConfigError("unknown builtin fixture '" + name + "'");
}

inline std::uint64_t fingerprint(const Dataset& ds) { return fnv1a64(serialize_libsvm(ds)); }

}  // namespace ef21::fixtures
