#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "swave/cli/suites.hpp"

using namespace swave;
using namespace swave::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("swave_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string message_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

// Small, fast run.
RunConfig small_config() {
  return parse_config_text(R"(
[grid]
dim = 1
cutoff = 2
[time]
steps = 8
[run]
replicas = 40
seed = 9
[coefficients]
sigma = "cos"
drift = "sin"
)");
}

}  // namespace

TEST(Config, MinimalConfigGetsDefaults) {
  auto c = parse_config_text("[grid]\ndim = 1\n");
  EXPECT_EQ(c.dim, 1);
  EXPECT_EQ(c.cutoff, 2);
  EXPECT_EQ(c.measure, "riesz");
  EXPECT_DOUBLE_EQ(c.beta, 0.5);
  EXPECT_EQ(c.steps, 16);
  EXPECT_DOUBLE_EQ(c.target_time, c.horizon);
  EXPECT_EQ(c.sigma, "const:1");
  EXPECT_EQ(c.replicas, 200);
  EXPECT_EQ(c.deltas.size(), 4u);
  EXPECT_EQ(parse_config_text("").dim, 1);
}

TEST(Config, RieszExponentMustBeBelowDimension) {
  auto msg = message_of("[grid]\ndim = 2\n[measure]\nbeta = 2.5\n");
  EXPECT_NE(msg.find("measure.beta"), std::string::npos) << msg;
  EXPECT_NE(msg.find("beta < d"), std::string::npos) << msg;
  EXPECT_NO_THROW(parse_config_text("[grid]\ndim = 3\n[measure]\nbeta = 2.5\n"));
  // Other measures ignore beta.
  EXPECT_NO_THROW(parse_config_text("[grid]\ndim = 1\n[measure]\nkind = \"dirac\"\nbeta = 5\n"));
}

TEST(Config, StrictModeRejectsDuplicatesAndUnknownKeys) {
  EXPECT_NE(message_of("[grid]\ndim = 1\ndim = 2\n").find("duplicate key 'grid.dim'"),
            std::string::npos);
  EXPECT_NE(message_of("[grid]\ndim = 1\n[grid]\ncutoff = 1\n").find("duplicate section"),
            std::string::npos);
  EXPECT_NE(message_of("[grid]\ncutof = 1\n").find("unknown key 'grid.cutof'"),
            std::string::npos);
  EXPECT_NE(message_of("[nonsense]\nx = 1\n").find("unknown key"), std::string::npos);
}

TEST(Config, TypeAndRangeErrorsNameTheField) {
  EXPECT_NE(message_of("[grid]\ndim = 1.5\n").find("expected an integer"), std::string::npos);
  EXPECT_NE(message_of("[grid]\ndim = \"two\"\n").find("grid.dim"), std::string::npos);
  EXPECT_NE(message_of("[run]\nreplicas = 0\n").find("run.replicas"), std::string::npos);
  EXPECT_NE(message_of("[grid]\ncutoff = 65\n").find("[0, 64]"), std::string::npos);
  EXPECT_NE(message_of("[grid]\ndim = 6\ncutoff = 64\n").find("lattice points"),
            std::string::npos);
  EXPECT_NE(message_of("[coefficients]\nsigma = \"tan\"\n").find("coefficients.sigma"),
            std::string::npos);
  EXPECT_NE(message_of("[target]\ntime = 0.3\n").find("target.time"), std::string::npos);
  EXPECT_NE(message_of("[schedules]\ndelta = [0.3]\n").find("schedules.delta"),
            std::string::npos);
  EXPECT_NE(message_of("[mollifier]\nschedule = [4, 2]\n").find("strictly increasing"),
            std::string::npos);
  EXPECT_NE(message_of("[grid]\ndim = 1 2\n").find("expected a number"), std::string::npos);
  EXPECT_NE(message_of("dim\n").find("key = value"), std::string::npos);
}

TEST(Config, ParsesCommentsArraysAndStrings) {
  auto c = parse_config_text(R"(
# comment
[coefficients]
sigma = "const:2"   # trailing
drift = "table:0:0;1:1"
shifted_all_terms = true
[schedules]
bh_thresholds = [1, 2.5e1, 1e3]
[run]
output = "out#1"
)");
  EXPECT_EQ(c.sigma, "const:2");
  EXPECT_TRUE(c.shifted_all_terms);
  EXPECT_EQ(c.thresholds, (std::vector<double>{1, 25, 1000}));
  EXPECT_EQ(c.output, "out#1");
}

TEST(Config, DefaultDeltasFollowTheTimeGrid) {
  auto c = parse_config_text("[time]\nsteps = 4\n");
  EXPECT_EQ(c.deltas, (std::vector<double>{0.5, 0.25}));
}

TEST(Config, DigestIgnoresWorkersAndOutputOnly) {
  auto a = small_config();
  auto b = a;
  b.workers = 7;
  b.output = "elsewhere";
  EXPECT_EQ(config_digest(a), config_digest(b));
  b.seed += 1;
  EXPECT_NE(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a).size(), 64u);
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(RunSuite, RerunIsByteIdenticalAtAnyWorkerCount) {
  auto c = small_config();
  auto one = fresh_dir("rerun1"), many = fresh_dir("rerun4");
  ASSERT_TRUE(run_suite(c, "simulate", one));
  c.workers = 4;
  ASSERT_TRUE(run_suite(c, "simulate", many));
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(one)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    auto other = many / fs::relative(e.path(), one);
    EXPECT_EQ(read_bytes(e.path()), read_bytes(other)) << e.path();
    ++compared;
  }
  EXPECT_GE(compared, 3u);
}

TEST(RunSuite, EveryFileCarriesTheDigestAndIsListed) {
  auto c = small_config();
  auto root = fresh_dir("digest");
  ASSERT_TRUE(run_suite(c, "simulate", root));
  const auto digest = config_digest(c);
  auto manifest = nlohmann::json::parse(read_bytes(root / "manifest.json"));
  EXPECT_EQ(manifest["config_digest"], digest);
  EXPECT_TRUE(manifest["passed"].get<bool>());
  EXPECT_EQ(manifest["suites"][0]["name"], "simulate");
  std::size_t listed = 0;
  for (const auto& f : manifest["files"]) {
    auto bytes = read_bytes(root / f["path"].get<std::string>());
    EXPECT_EQ(sha256_hex(bytes), f["sha256"]);
    EXPECT_NE(bytes.find(digest), std::string::npos) << f["path"];
    ++listed;
  }
  EXPECT_EQ(listed, 3u);
  for (const auto& e : fs::recursive_directory_iterator(root))
    EXPECT_NE(e.path().extension(), ".tmp");
  auto field = read_field((root / "field_r0.bin").string());
  EXPECT_EQ(field.digest, digest);
}

TEST(RunSuite, FailureIsFlushedAndRecorded) {
  auto c = small_config();
  c.drift = "linear:100000";
  auto root = fresh_dir("diverge");
  EXPECT_FALSE(run_suite(c, "simulate", root));
  auto manifest = nlohmann::json::parse(read_bytes(root / "manifest.json"));
  EXPECT_FALSE(manifest["passed"].get<bool>());
  EXPECT_NE(manifest["suites"][0]["error"].get<std::string>().find("diverged"),
            std::string::npos);
  auto checks = read_bytes(root / "checks.csv");
  EXPECT_NE(checks.find("completed,fail"), std::string::npos) << checks;
}

TEST(RunSuite, EachSubcommandRuns) {
  auto c = small_config();
  for (std::string cmd : {"check-kernel", "malliavin", "density"}) {
    auto root = fresh_dir("cmd_" + cmd);
    EXPECT_TRUE(run_suite(c, cmd, root)) << cmd;
    EXPECT_TRUE(fs::exists(root / "checks.csv")) << cmd;
  }
  EXPECT_THROW(run_suite(c, "plot", fresh_dir("bad")), ConfigError);
}
