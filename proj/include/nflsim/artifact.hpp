#pragma once

#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nflsim/simulation.hpp"

namespace nflsim {

inline constexpr const char* kMetricsHeader =
    "round,beta_r,beta_win,beta_true,acc,beta_guard,nfl_flag,event";

// One metrics.csv line (no newline). Missing optional values are empty.
std::string format_metrics_row(const RoundMetrics& m);

// Streams a run into a directory:
//   manifest.json   resolved config, behaviors, aggregator
//   metrics.csv     one row per round, flushed as the run progresses
//   events.log      one event per line
//   trajectory.txt  round and global-model fingerprint per line
//   summary.csv     means over the last 10 rounds
//   models.json     final global and adapted models
class ArtifactWriter {
 public:
  ArtifactWriter(const std::string& dir, const SimConfig& config);

  void on_round(const RoundMetrics& m, std::span<const Event> events);
  void finish(const RunArtifact& run);

  RoundObserver observer() {
    return [this](const RoundMetrics& m, std::span<const Event> e) { on_round(m, e); };
  }

 private:
  std::string dir_;
  std::ofstream metrics_;
  std::ofstream events_;
  std::ofstream trajectory_;
};

std::string summary_csv(const Summary& s);

struct MetricsRow {
  int round = 0;
  double beta_r = 0.0;
  double beta_win = 0.0;
  std::optional<double> beta_true;
  std::optional<double> acc;
  std::optional<double> beta_guard;
  bool nfl_flag = false;
  std::string event;
};

struct LoadedRun {
  std::string dir;
  int num_clients = 0;
  int rounds = 0;
  std::vector<MetricsRow> metrics;
  std::vector<std::string> trajectory;  // fingerprints, one per round
};

LoadedRun load_run(const std::string& dir);

struct RoundDelta {
  int round = 0;
  std::optional<double> acc;   // b - a
  std::optional<double> beta;  // b - a (true beta)
};

struct CompareReport {
  std::vector<RoundDelta> per_round;
  std::optional<double> final_acc_delta;
  std::optional<double> final_beta_delta;
  std::optional<double> final_beta_guard_delta;
  bool trajectory_identical = false;
};

// Both runs must share N and R.
CompareReport compare_runs(const LoadedRun& a, const LoadedRun& b);
std::string format_compare(const CompareReport& report);

}  // namespace nflsim
