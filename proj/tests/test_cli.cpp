#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(EF21_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ef21_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) ++n;
  return n;
}

}  // namespace

TEST(Cli, RunWritesTraceAndSidecar) {
  const auto dir = scratch("run");
  EXPECT_EQ(cli("run --data synthetic-ls-small --problem least_squares --clients 5 --T 20 --out " + dir.string()), 0);
  EXPECT_EQ(line_count(dir / "trace.csv"), 22u);
  EXPECT_TRUE(fs::exists(dir / "trace.json"));
  fs::remove_all(dir);
}

TEST(Cli, ConfigFileWithOverrides) {
  const auto dir = scratch("config");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "data = a9a-surrogate\nmethod = ef21_plus\nT = 100\n";
  }
  EXPECT_EQ(cli("run --config " + (dir / "run.cfg").string() + " --T 7 --out " + (dir / "out").string()), 0);
  EXPECT_EQ(line_count(dir / "out" / "trace.csv"), 9u);
  fs::remove_all(dir);
}

TEST(Cli, ConfigErrorsExitOne) {
  EXPECT_EQ(cli("run --data no-such-data"), 1);
  EXPECT_EQ(cli("run"), 1);
  EXPECT_EQ(cli("run --data a9a-surrogate --method nope"), 1);
  EXPECT_EQ(cli("run --data a9a-surrogate --method ef21_sgd"), 1);
  EXPECT_EQ(cli("run --data a9a-surrogate --batch-size 3"), 1);
  EXPECT_EQ(cli("run --config /nonexistent.cfg"), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("run --unknown-flag 3"), 1);
}

TEST(Cli, MalformedDataExitsOne) {
  const auto dir = scratch("bad");
  {
    std::ofstream f(dir / "bad.svm");
    f << "1 1:0.5\n-1 oops\n";
  }
  EXPECT_EQ(cli("run --data " + (dir / "bad.svm").string()), 1);
  fs::remove_all(dir);
}

TEST(Cli, DivergenceExitsTwo) {
  const auto dir = scratch("diverge");
  EXPECT_EQ(cli("run --data dcgd-divergence --problem least_squares --clients 3 --method dcgd --gamma 1 --T 1000 --out " +
                dir.string()),
            2);
  EXPECT_TRUE(fs::exists(dir / "trace.csv"));
  fs::remove_all(dir);
}

TEST(Cli, Sweep) {
  const auto dir = scratch("sweep");
  EXPECT_EQ(cli("sweep --data synthetic-ls-small --problem least_squares --clients 5 --T 10 --multipliers 1,2,4 --out " +
                dir.string()),
            0);
  EXPECT_EQ(line_count(dir / "summary.csv"), 4u);
  EXPECT_TRUE(fs::exists(dir / "multiple_2.csv"));
  EXPECT_EQ(cli("sweep --data synthetic-ls-small --problem least_squares --clients 5"), 1);
  fs::remove_all(dir);
}

TEST(Cli, FixtureExport) {
  const auto dir = scratch("fixture");
  EXPECT_EQ(cli("fixture dcgd-divergence --file " + (dir / "d.svm").string()), 0);
  EXPECT_EQ(line_count(dir / "d.svm"), 12u);
  EXPECT_EQ(cli("fixture nope"), 1);
  // the exported file is usable as a dataset path
  EXPECT_EQ(cli("run --data " + (dir / "d.svm").string() + " --problem least_squares --clients 3 --method gd --gamma 0.01 --T 5"),
            0);
  fs::remove_all(dir);
}
