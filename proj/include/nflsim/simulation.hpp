#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "nflsim/config.hpp"
#include "nflsim/protocol.hpp"

namespace nflsim {

// Builds the dataset, partitions it, assigns behaviors and trains every
// client's private model.
std::vector<ClientState> build_clients(const SimConfig& config, int workers = 1);

struct Summary {
  int rounds_averaged = 0;
  double beta_r = 0.0;
  double beta_win = 0.0;
  std::optional<double> beta_true;
  std::optional<double> acc;
  std::optional<double> beta_guard;
};

// Mean of the last `last` records (fields missing on any record are
// averaged over the records that have them).
Summary summarize(std::span<const RoundMetrics> metrics, int last = 10);

struct RunArtifact {
  SimConfig config;
  std::vector<Behavior> behaviors;
  std::vector<RoundMetrics> metrics;
  std::vector<Event> events;
  ServerState server;
  std::vector<ClientState> clients;
  Summary summary;
};

// Called once before round 1 with a round-0 record and the setup events
// (behavior assignment), then after every round with that round's metrics
// and the events it produced.
using RoundObserver =
    std::function<void(const RoundMetrics&, std::span<const Event>)>;

RunArtifact run_simulation(const SimConfig& config, int workers = 1,
                           const RoundObserver& observer = {});

}  // namespace nflsim
