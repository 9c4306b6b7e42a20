#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nflsim/detection.hpp"
#include "nflsim/model.hpp"
#include "nflsim/recovery.hpp"
#include "nflsim/report.hpp"

namespace nflsim {

enum class Behavior { kHonestGuard, kVanilla, kAttacker };

std::string to_string(Behavior b);

struct ClientState {
  int client_id = 0;
  Batch train;
  Batch test;
  std::vector<int> classes;
  ParamVector private_params;
  double private_score = 0.0;  // P_i
  std::optional<ParamVector> adapted;  // v_i
  Behavior behavior = Behavior::kHonestGuard;
  LocalPolicyState local;

  std::size_t n_i() const { return train.size(); }
};

struct LocalTrainParams {
  int epochs = 1;
  int batch_size = 10;
  double eta = 0.1;
  AdaptationConfig adapt;
};

struct ClientUpdateOptions {
  // Adaptation is on for this client this round.
  bool nfl_flag = false;
  // Estimate β̂_i with v_i even though adaptation is off (recovery stopped
  // but the adapted model is kept for inference).
  bool estimate_with_adapted = false;
  bool trace_lambda = false;
};

struct ClientUpdateResult {
  ClientReport report;
  int adapt_steps = 0;
  bool initialized_adapted = false;
  std::vector<LambdaDiagnostics> lambda_trace;
};

// Local round of one client: shuffle and batch the training data, estimate
// β̂_i on the first batch, run E epochs of SGD from w_prev and, when the
// flag is set, one adapted-model step after every local step.
ClientUpdateResult client_update(ClientState& client, const ParamVector& w_prev,
                                 const ClientUpdateOptions& options,
                                 const LocalTrainParams& params,
                                 std::uint64_t seed, int round);

}  // namespace nflsim
