#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"

#include "fixtures.hpp"
#include "nflsim/artifact.hpp"
#include "nflsim/errors.hpp"
#include "nflsim/simulation.hpp"

namespace nflsim {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class ArtifactTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("nflsim_artifact_" +
             std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  RunArtifact write(const SimConfig& c, const std::string& name, int workers = 1) {
    ArtifactWriter writer((root_ / name).string(), c);
    RunArtifact run = run_simulation(c, workers, writer.observer());
    writer.finish(run);
    return run;
  }

  fs::path root_;
};

TEST_F(ArtifactTest, WritesEveryFile) {
  const SimConfig c = testing::toy_config();
  const RunArtifact run = write(c, "a");
  for (const char* f : {"manifest.json", "metrics.csv", "events.log", "trajectory.txt",
                        "summary.csv", "models.json"}) {
    EXPECT_TRUE(fs::exists(root_ / "a" / f)) << f;
  }
  const nlohmann::json manifest = nlohmann::json::parse(slurp(root_ / "a" / "manifest.json"));
  EXPECT_EQ(manifest["behaviors"].size(), static_cast<std::size_t>(c.num_clients));
  EXPECT_EQ(manifest["rounds_completed"], c.rounds);
  EXPECT_EQ(manifest["config"], to_json(c));

  const LoadedRun loaded = load_run((root_ / "a").string());
  ASSERT_EQ(loaded.metrics.size(), static_cast<std::size_t>(c.rounds));
  EXPECT_EQ(loaded.trajectory.size(), static_cast<std::size_t>(c.rounds));
  EXPECT_EQ(loaded.metrics.back().round, c.rounds);
}

TEST_F(ArtifactTest, MetricsRowsMatchTheRun) {
  const SimConfig c = testing::toy_config();
  const RunArtifact run = write(c, "a");
  std::istringstream lines(slurp(root_ / "a" / "metrics.csv"));
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, kMetricsHeader);
  std::size_t i = 0;
  for (const RoundMetrics& m : run.metrics) {
    if (m.round == 0) continue;
    ASSERT_TRUE(std::getline(lines, line));
    EXPECT_EQ(line, format_metrics_row(m));
    ++i;
  }
  EXPECT_EQ(i, static_cast<std::size_t>(c.rounds));
}

TEST_F(ArtifactTest, SummaryIsTheMeanOfTheFinalTenRecords) {
  const SimConfig c = testing::toy_config();
  const RunArtifact run = write(c, "a");
  const LoadedRun loaded = load_run((root_ / "a").string());
  double beta = 0.0, acc = 0.0;
  for (std::size_t i = loaded.metrics.size() - 10; i < loaded.metrics.size(); ++i) {
    ASSERT_TRUE(loaded.metrics[i].acc.has_value());
    beta += *loaded.metrics[i].beta_true;
    acc += *loaded.metrics[i].acc;
  }
  // The CSV carries six decimals.
  EXPECT_NEAR(*run.summary.beta_true, beta / 10.0, 1e-6);
  EXPECT_NEAR(*run.summary.acc, acc / 10.0, 1e-6);
}

TEST_F(ArtifactTest, WorkerCountGivesByteIdenticalFiles) {
  const SimConfig c = testing::toy_config();
  write(c, "one", 1);
  write(c, "eight", 8);
  for (const char* f : {"metrics.csv", "events.log", "trajectory.txt", "summary.csv"}) {
    EXPECT_EQ(slurp(root_ / "one" / f), slurp(root_ / "eight" / f)) << f;
  }
}

TEST_F(ArtifactTest, CompareWithItselfIsZero) {
  write(testing::toy_config(), "a");
  const LoadedRun a = load_run((root_ / "a").string());
  const CompareReport r = compare_runs(a, a);
  EXPECT_TRUE(r.trajectory_identical);
  EXPECT_EQ(*r.final_acc_delta, 0.0);
  EXPECT_EQ(*r.final_beta_delta, 0.0);
  for (const RoundDelta& d : r.per_round) {
    if (d.acc) EXPECT_EQ(*d.acc, 0.0);
  }
}

TEST_F(ArtifactTest, CompareDetectsDifferentTrajectories) {
  SimConfig c = testing::toy_config();
  write(c, "a");
  c.seed += 1;
  write(c, "b");
  const CompareReport r =
      compare_runs(load_run((root_ / "a").string()), load_run((root_ / "b").string()));
  EXPECT_FALSE(r.trajectory_identical);
  EXPECT_NE(format_compare(r).find("global_trajectory_identical,false"), std::string::npos);
}

TEST_F(ArtifactTest, CompareNeverReportingDetectorWithFedAvg) {
  SimConfig c = testing::toy_config();
  c.nr = 10000;
  c.mode = Mode::kDetectRecover;
  write(c, "dr");
  c.mode = Mode::kFedAvg;
  write(c, "fa");
  const CompareReport r =
      compare_runs(load_run((root_ / "fa").string()), load_run((root_ / "dr").string()));
  EXPECT_TRUE(r.trajectory_identical);
  EXPECT_EQ(*r.final_acc_delta, 0.0);
}

TEST_F(ArtifactTest, CompareRejectsDifferentShapes) {
  SimConfig c = testing::toy_config();
  write(c, "a");
  c.rounds = 12;
  write(c, "b");
  EXPECT_THROW(
      compare_runs(load_run((root_ / "a").string()), load_run((root_ / "b").string())),
      ConfigError);
}

TEST_F(ArtifactTest, EventLogCarriesSystemEvents) {
  SimConfig c = testing::toy_config();
  c.nr = 1;
  write(c, "a");
  const std::string log = slurp(root_ / "a" / "events.log");
  EXPECT_NE(log.find("event=behavior"), std::string::npos);
  EXPECT_NE(log.find("event=nfl_report"), std::string::npos);
}

}  // namespace
}  // namespace nflsim
