#pragma once

// LibSVM ingestion and the contiguous client split.

#include "ef21/core.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace ef21 {

struct Dataset {
  std::string name;
  SparseMatrix features;  // N x d, row-major
  Vector labels;          // N

  std::size_t rows() const noexcept { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(features.cols()); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline bool parse_index(std::string_view token, std::size_t& out) {
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// {0,1} -> {-1,+1}; {1,2} -> {-1,+1}; {-1,+1} unchanged.
inline void normalize_binary_labels(Vector& labels) {
  std::set<double> seen(labels.data(), labels.data() + labels.size());
  auto subset_of = [&seen](std::initializer_list<double> allowed) {
    return std::all_of(seen.begin(), seen.end(), [&](double v) {
      return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
    });
  };
  if (subset_of({-1.0, 1.0})) return;
  if (subset_of({0.0, 1.0})) {
    for (auto& v : labels) v = v == 0.0 ? -1.0 : 1.0;
    return;
  }
  if (subset_of({1.0, 2.0})) {
    for (auto& v : labels) v = v == 1.0 ? -1.0 : 1.0;
    return;
  }
  std::ostringstream os;
  os << "label set {";
  bool first = true;
  for (double v : seen) {
    if (!first) os << ", ";
    os << v;
    first = false;
  }
  os << "} is not binary";
  throw UnsupportedLabelError(os.str());
}

}  // namespace detail

struct ParseOptions {
  std::optional<std::size_t> dim;  // fix d instead of using the largest index seen
  bool normalize_labels = true;
};

// One sample per line: `<label> <idx>:<val> ...` with 1-based indices and
// optional trailing `#` comments. Blank and comment-only lines are skipped.
inline Dataset parse_libsvm(std::istream& in, std::string name = "libsvm", const ParseOptions& opts = {}) {
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<double> labels;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;

    std::size_t pos = 0;
    auto next_token = [&]() -> std::string_view {
      while (pos < view.size() && (view[pos] == ' ' || view[pos] == '\t')) ++pos;
      const auto start = pos;
      while (pos < view.size() && view[pos] != ' ' && view[pos] != '\t') ++pos;
      return view.substr(start, pos - start);
    };

    double label = 0.0;
    if (!detail::parse_double(next_token(), label)) throw ParseError(line_no, "malformed label");
    const auto row = static_cast<int>(labels.size());
    labels.push_back(label);

    std::size_t previous = 0;
    for (auto tok = next_token(); !tok.empty(); tok = next_token()) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) throw ParseError(line_no, "expected <index>:<value>, got '" + std::string(tok) + "'");
      std::size_t index = 0;
      double value = 0.0;
      if (!detail::parse_index(tok.substr(0, colon), index) || index == 0) {
        throw ParseError(line_no, "feature index must be a positive integer");
      }
      if (!detail::parse_double(tok.substr(colon + 1), value)) throw ParseError(line_no, "malformed feature value");
      if (index <= previous) throw ParseError(line_no, "feature indices must be strictly increasing");
      previous = index;
      max_index = std::max(max_index, index);
      entries.emplace_back(row, static_cast<int>(index - 1), value);
    }
  }
  if (labels.empty()) throw ParseError(line_no, "no samples in input");

  std::size_t d = max_index;
  if (opts.dim) {
    if (*opts.dim < max_index) {
      throw ParseError(line_no, "feature index " + std::to_string(max_index) + " exceeds configured dimension " +
                                    std::to_string(*opts.dim));
    }
    d = *opts.dim;
  }
  if (d == 0) throw ParseError(line_no, "no features in input");

  Dataset ds;
  ds.name = std::move(name);
  ds.features.resize(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(d));
  ds.features.setFromTriplets(entries.begin(), entries.end());
  ds.features.makeCompressed();
  ds.labels = Eigen::Map<const Vector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  if (opts.normalize_labels) detail::normalize_binary_labels(ds.labels);
  return ds;
}

inline Dataset parse_libsvm_string(const std::string& text, std::string name = "libsvm", const ParseOptions& opts = {}) {
  std::istringstream in(text);
  return parse_libsvm(in, std::move(name), opts);
}

inline Dataset load_libsvm(const std::string& path, const ParseOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file '" + path + "'");
  auto slash = path.find_last_of('/');
  return parse_libsvm(in, slash == std::string::npos ? path : path.substr(slash + 1), opts);
}

// Values are written with 17 significant digits, enough to round-trip any double.
inline std::string serialize_libsvm(const Dataset& ds) {
  std::string out;
  char buf[64];
  for (Eigen::Index r = 0; r < ds.features.rows(); ++r) {
    std::snprintf(buf, sizeof buf, "%.17g", ds.labels[r]);
    out += buf;
    for (SparseMatrix::InnerIterator it(ds.features, r); it; ++it) {
      std::snprintf(buf, sizeof buf, " %lld:%.17g", static_cast<long long>(it.col()) + 1, it.value());
      out += buf;
    }
    out += '\n';
  }
  return out;
}

// FNV-1a; used to pin the output of the seeded fixture generators.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Partition
// ---------------------------------------------------------------------------

struct Shard {
  std::size_t begin;
  std::size_t end;
  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const Shard&) const = default;
};

struct Partition {
  std::vector<Shard> shards;
  std::size_t count() const noexcept { return shards.size(); }
};

// Contiguous split in file order: the first n-1 shards hold floor(N/n) rows
// and the last one absorbs the remainder.
inline Partition partition(std::size_t rows, std::size_t n) {
  if (n < 1 || n > rows) {
    throw ArgumentError("partition needs 1 <= n <= N (n=" + std::to_string(n) + ", N=" + std::to_string(rows) + ")");
  }
  const std::size_t quota = rows / n;
  Partition p;
  p.shards.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t begin = i * quota;
    p.shards.push_back({begin, i + 1 == n ? rows : begin + quota});
  }
  return p;
}

inline Partition partition(const Dataset& ds, std::size_t n) { return partition(ds.rows(), n); }

}  // namespace ef21
