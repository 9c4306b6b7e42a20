#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nflsim/client.hpp"
#include "nflsim/config.hpp"
#include "nflsim/detection.hpp"
#include "nflsim/report.hpp"

namespace nflsim {

// K distinct client ids in ascending order, uniform without replacement and
// a pure function of (seed, round).
std::vector<int> sample_active(int n, int k, int round, std::uint64_t seed);

// n_i / Σn_i over the reporting clients, in ascending client-id order.
std::vector<double> fedavg_weights(std::span<const ClientReport> reports);
ParamVector aggregate_fedavg(std::span<const ClientReport> reports);

// delta scaled down to norm S when it is longer than S.
ParamVector clip_update(const ParamVector& delta, double clip_norm);

// w_prev + (1/K) Σ Clip(w_i - w_prev, S) + N(0, σ²I), noise keyed by
// (seed, round).
ParamVector aggregate_dp(const ParamVector& w_prev,
                         std::span<const ClientReport> reports, double clip_norm,
                         double sigma, std::uint64_t seed, int round);

// Gaussian noise vector with the layout of `like`.
ParamVector gaussian_noise(const ParamVector& like, double sigma,
                           std::uint64_t seed, int round);

// Per-update clip (if S > 0) -> aggregator -> Gaussian noise (if σ > 0).
// Under DP the fedavg choice is the unweighted mean of the clipped updates.
ParamVector aggregate(const ParamVector& w_prev, std::span<const ClientReport> reports,
                      const AggregatorChoice& choice, const DpConfig& dp,
                      std::uint64_t seed, int round);

struct ServerState {
  int round = 0;
  ParamVector global;  // w^r
  DetectorState detector;
  // Short-term mode: set at the first cancel; adaptation never resumes.
  bool recovery_stopped = false;

  bool nfl_flag() const { return detector.nfl_flag; }
  int cnt() const { return detector.cnt; }
  const std::vector<double>& beta_round_history() const { return detector.history; }
};

struct Event {
  int round = 0;
  std::string type;
  int client = -1;
  std::string detail;
};

std::string format_event(const Event& e);

struct RoundMetrics {
  int round = 0;
  double beta_r = 0.0;    // β̂^r
  double beta_win = 0.0;  // windowed β̂
  std::optional<double> beta_true;
  std::optional<double> acc;
  std::optional<double> beta_guard;
  bool nfl_flag = false;
  std::vector<std::string> events;  // system-level events of this round
  std::uint64_t global_fingerprint = 0;
  int adapt_steps = 0;
  int reporting_clients = 0;
};

class WorkerPool;

ServerState init_server(const SimConfig& config);

// One round of the protocol. Appends client- and system-level events to
// `events`; `evaluate` also computes the ground-truth metrics.
RoundMetrics run_round(ServerState& server, std::vector<ClientState>& clients,
                       const SimConfig& config, bool evaluate,
                       std::vector<Event>& events, WorkerPool* pool = nullptr);

struct Evaluation {
  GainRecord gains;
  double acc = 0.0;
  std::optional<double> beta_guard;
};

Evaluation evaluate_clients(const std::vector<ClientState>& clients,
                            const ParamVector& global, WeightsMode mode);

}  // namespace nflsim
