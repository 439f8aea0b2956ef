// Experiment runner: name registry, output files, and byte-level
// reproducibility of data products.
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ltn/config.hpp"
#include "ltn/experiments.hpp"
#include "test_util.hpp"

using namespace ltn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("experiment registry") {
  const auto& names = experimentNames();
  for (const char* want :
       {"patch_1d", "patch_1d_p0p1", "patch_2d", "opt_compare",
        "delta_convergence", "jump_1d", "cylinder_2d_windows", "heat_2d",
        "verify_cases", "dump_matrix"}) {
    CAPTURE(want);
    CHECK(std::find(names.begin(), names.end(), std::string(want)) !=
          names.end());
  }
  Config cfg;
  CHECK_THROWS_WITH_AS(
      runExperiment("unknown_thing", cfg,
                    test_util::freshDir("unknown").string()),
      doctest::Contains("patch_1d"), Error);
}

TEST_CASE("patch_1d run writes its products and reproduces byte-for-byte") {
  const auto dir1 = test_util::freshDir("patch_a");
  const auto dir2 = test_util::freshDir("patch_b");
  Config cfg1 = Config::fromText("h = 0.1\n");
  const ExperimentResult res1 = runExperiment("patch_1d", cfg1, dir1.string());
  CHECK(res1.ok);
  CHECK(res1.name == "patch_1d");
  CHECK(!res1.summary_jsonl.empty());

  CHECK(fs::exists(dir1 / "summary.jsonl"));
  CHECK(fs::exists(dir1 / "resolved_config.txt"));
  // A solution table is written as CSV.
  bool have_csv = false;
  for (const auto& entry : fs::directory_iterator(dir1))
    if (entry.path().extension() == ".csv") have_csv = true;
  CHECK(have_csv);

  // The resolved config records the explicit value and the defaults.
  const std::string resolved = slurp(dir1 / "resolved_config.txt");
  CHECK(resolved.find("h = 0.1") != std::string::npos);
  CHECK(resolved.find("delta") != std::string::npos);

  Config cfg2 = Config::fromText("h = 0.1\n");
  const ExperimentResult res2 = runExperiment("patch_1d", cfg2, dir2.string());
  CHECK(res2.ok);
  for (const auto& entry : fs::directory_iterator(dir1)) {
    if (entry.path().extension() != ".csv") continue;
    const auto other = dir2 / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
  }
  CHECK(slurp(dir1 / "resolved_config.txt") ==
        slurp(dir2 / "resolved_config.txt"));
}

TEST_CASE("unknown config keys are rejected") {
  Config cfg = Config::fromText("h = 0.1\nbanana = 3\n");
  CHECK_THROWS_WITH_AS(
      runExperiment("patch_1d", cfg, test_util::freshDir("badkey").string()),
      doctest::Contains("banana"), Error);
}

TEST_CASE("dump_matrix writes a parseable matrix-market file") {
  const auto dir = test_util::freshDir("dump");
  Config cfg = Config::fromText("h = 0.25\n");
  const ExperimentResult res = runExperiment("dump_matrix", cfg, dir.string());
  CHECK(res.ok);
  fs::path mtx;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".mtx") mtx = entry.path();
  REQUIRE(!mtx.empty());
  std::ifstream in(mtx);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("%%MatrixMarket") != std::string::npos);
  long rows = 0, cols = 0, nnz = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ss(line);
    REQUIRE((ss >> rows >> cols >> nnz));
    break;
  }
  CHECK(rows > 0);
  CHECK(rows == cols);
  CHECK(nnz > 0);
  long count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    long i = 0, j = 0;
    double v = 0.0;
    REQUIRE((ss >> i >> j >> v));
    CHECK(i >= 1);
    CHECK(i <= rows);
    CHECK(j >= 1);
    CHECK(j <= cols);
    ++count;
  }
  CHECK(count == nnz);
}
