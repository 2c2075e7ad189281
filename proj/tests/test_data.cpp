#include "ef21/data.hpp"
#include "ef21/fixtures.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

using namespace ef21;

TEST(Parse, SingleLine) {
  const auto ds = parse_libsvm_string("+1 3:0.5 7:1\n");
  ASSERT_EQ(ds.rows(), 1u);
  EXPECT_EQ(ds.dim(), 7u);
  EXPECT_EQ(ds.labels[0], 1.0);
  EXPECT_EQ(ds.features.nonZeros(), 2);
  EXPECT_EQ(ds.features.coeff(0, 2), 0.5);
  EXPECT_EQ(ds.features.coeff(0, 6), 1.0);
}

TEST(Parse, ZeroOneLabelsRemapped) {
  const auto ds = parse_libsvm_string("0 1:2.0\n1 2:1\n");
  EXPECT_EQ(ds.labels[0], -1.0);
  EXPECT_EQ(ds.labels[1], 1.0);
}

TEST(Parse, OneTwoLabelsRemapped) {
  const auto ds = parse_libsvm_string("1 1:1\n2 1:1\n2 1:3\n");
  EXPECT_EQ(ds.labels[0], -1.0);
  EXPECT_EQ(ds.labels[1], 1.0);
  EXPECT_EQ(ds.labels[2], 1.0);
}

TEST(Parse, PlusMinusUnchanged) {
  const auto ds = parse_libsvm_string("-1 1:1\n+1 1:1\n");
  EXPECT_EQ(ds.labels[0], -1.0);
  EXPECT_EQ(ds.labels[1], 1.0);
}

TEST(Parse, CommentsAndBlankLines) {
  const auto ds = parse_libsvm_string("# header\n\n-1 2:3 # trailing\n   \n+1 1:1\n");
  EXPECT_EQ(ds.rows(), 2u);
  EXPECT_EQ(ds.features.coeff(0, 1), 3.0);
}

TEST(Parse, EmptyFileIsError) {
  EXPECT_THROW(parse_libsvm_string(""), ParseError);
  EXPECT_THROW(parse_libsvm_string("# only a comment\n"), ParseError);
}

TEST(Parse, MalformedLinesReportLineNumber) {
  const std::vector<std::string> bad{"+1 1:1\n+1 x:1\n", "+1 1:1\n+1 2\n", "+1 1:1\nfoo 1:1\n",
                                     "+1 1:1\n+1 0:1\n", "+1 1:1\n+1 3:1 2:1\n", "+1 1:1\n+1 1:abc\n"};
  for (const auto& text : bad) {
    try {
      parse_libsvm_string(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 2u) << text;
    }
  }
}

TEST(Parse, NonBinaryLabels) {
  EXPECT_THROW(parse_libsvm_string("1 1:1\n2 1:1\n3 1:1\n"), UnsupportedLabelError);
  ParseOptions raw;
  raw.normalize_labels = false;
  EXPECT_EQ(parse_libsvm_string("3.5 1:1\n", "x", raw).labels[0], 3.5);
}

TEST(Parse, DimensionOverride) {
  ParseOptions opts;
  opts.dim = 10;
  EXPECT_EQ(parse_libsvm_string("+1 3:1\n", "x", opts).dim(), 10u);
  opts.dim = 2;
  EXPECT_THROW(parse_libsvm_string("+1 3:1\n", "x", opts), ParseError);
}

TEST(Parse, MissingFile) { EXPECT_THROW(load_libsvm("/nonexistent/ef21/file.txt"), ConfigError); }

TEST(Parse, RoundTripIsBitExact) {
  Rng rng = make_stream(31, 0, 0, StreamPurpose::Oracle);
  std::string text;
  for (int r = 0; r < 40; ++r) {
    text += (r % 2) ? "+1" : "-1";
    for (int j = 1; j <= 9; ++j) {
      if (uniform01(rng) < 0.4) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " %d:%.17g", j, standard_normal(rng) * std::exp(10 * uniform01(rng)));
        text += buf;
      }
    }
    text += " 10:1\n";
  }
  const auto a = parse_libsvm_string(text);
  const auto b = parse_libsvm_string(serialize_libsvm(a));
  EXPECT_EQ(serialize_libsvm(a), serialize_libsvm(b));
  EXPECT_TRUE(Matrix(a.features).cwiseEqual(Matrix(b.features)).all());
  EXPECT_EQ(a.labels, b.labels);
}

TEST(Partition, ReferenceSizes) {
  auto sizes = [](std::size_t N, std::size_t n) {
    std::vector<std::size_t> out;
    for (const auto& s : partition(N, n).shards) out.push_back(s.size());
    return out;
  };
  EXPECT_EQ(sizes(8120, 20), std::vector<std::size_t>(20, 406));
  EXPECT_EQ(sizes(32560, 20), std::vector<std::size_t>(20, 1628));
  auto phishing = sizes(11055, 20);
  EXPECT_EQ(std::vector<std::size_t>(phishing.begin(), phishing.end() - 1), std::vector<std::size_t>(19, 552));
  EXPECT_EQ(phishing.back(), 567u);
  auto w8a = sizes(49749, 20);
  EXPECT_EQ(w8a.front(), 2487u);
  EXPECT_EQ(w8a.back(), 2496u);
}

TEST(Partition, ContiguousCover) {
  for (std::size_t N : {1u, 7u, 100u, 101u, 999u}) {
    for (std::size_t n = 1; n <= std::min<std::size_t>(N, 25); ++n) {
      const auto p = partition(N, n);
      ASSERT_EQ(p.count(), n);
      std::size_t next = 0;
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_EQ(p.shards[i].begin, next);
        if (i + 1 < n) {
          EXPECT_EQ(p.shards[i].size(), N / n);
        }
        next = p.shards[i].end;
      }
      EXPECT_EQ(next, N);
    }
  }
}

TEST(Partition, Errors) {
  EXPECT_THROW(partition(5, 6), ArgumentError);
  EXPECT_THROW(partition(5, 0), ArgumentError);
}

// Real LibSVM files, when present under $EF21_DATA_DIR.
TEST(RealData, ReferenceShapes) {
  const char* dir = std::getenv("EF21_DATA_DIR");
  if (dir == nullptr) GTEST_SKIP() << "EF21_DATA_DIR not set";
  const std::vector<std::tuple<std::string, std::size_t, std::size_t>> expected{
      {"phishing", 11055, 68}, {"mushrooms", 8124, 112}, {"a9a", 32561, 123}, {"w8a", 49749, 300}};
  int found = 0;
  for (const auto& [name, N, d] : expected) {
    const auto path = std::filesystem::path(dir) / name;
    if (!std::filesystem::exists(path)) continue;
    ++found;
    const auto ds = load_libsvm(path.string());
    EXPECT_EQ(ds.dim(), d) << name;
    EXPECT_GE(ds.rows(), N - 4) << name;
    EXPECT_EQ(partition(ds, 20).shards.front().size(), ds.rows() / 20) << name;
  }
  if (found == 0) GTEST_SKIP() << "no LibSVM files in " << dir;
}
