#include "nflsim/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nflsim/errors.hpp"

namespace nflsim {

std::string to_string(FabricationPolicy::Kind k) {
  switch (k) {
    case FabricationPolicy::Kind::kHonest: return "honest";
    case FabricationPolicy::Kind::kConstant: return "constant";
    case FabricationPolicy::Kind::kUniformRandom: return "uniform_random";
  }
  return "honest";
}

FabricationPolicy::Kind fabrication_kind_from_string(const std::string& s) {
  if (s == "honest") return FabricationPolicy::Kind::kHonest;
  if (s == "constant") return FabricationPolicy::Kind::kConstant;
  if (s == "uniform_random") return FabricationPolicy::Kind::kUniformRandom;
  throw ConfigError("unknown fabrication policy '" + s + "'",
                    "behavior.fabrication.policy");
}

void BehaviorAssignment::validate() const {
  if (attacker_fraction < 0.0 || attacker_fraction > 1.0) {
    throw ConfigError("must lie in [0, 1]", "behavior.attacker_fraction");
  }
  if (vanilla_fraction < 0.0 || vanilla_fraction > 1.0) {
    throw ConfigError("must lie in [0, 1]", "behavior.vanilla_fraction");
  }
  if (attacker_fraction + vanilla_fraction > 1.0 + 1e-12) {
    throw ConfigError("attacker and vanilla fractions exceed 1",
                      "behavior.vanilla_fraction");
  }
  if (fabrication.kind == FabricationPolicy::Kind::kUniformRandom &&
      !(fabrication.low <= fabrication.high)) {
    throw ConfigError("empty range", "behavior.fabrication");
  }
}

Batch flip_labels(const Batch& batch, int class_count) {
  if (class_count < 2) throw ConfigError("label flipping needs at least two classes");
  Batch out = batch;
  for (int& y : out.labels) y = class_count - 1 - y;
  return out;
}

LabeledDataset flip_labels(const LabeledDataset& data, int class_count) {
  LabeledDataset out;
  out.examples = flip_labels(data.examples, class_count);
  out.class_count = class_count;
  return out;
}

std::vector<Behavior> assign_behaviors(int n, const BehaviorAssignment& assignment,
                                       std::uint64_t seed) {
  assignment.validate();
  const int attackers = static_cast<int>(std::lround(n * assignment.attacker_fraction));
  const int vanilla = std::min(
      n - attackers, static_cast<int>(std::lround(n * assignment.vanilla_fraction)));
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng = make_rng(seed, Stream::kBehavior);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<Behavior> out(n, Behavior::kHonestGuard);
  for (int k = 0; k < attackers; ++k) out[ids[k]] = Behavior::kAttacker;
  for (int k = attackers; k < attackers + vanilla; ++k) out[ids[k]] = Behavior::kVanilla;
  return out;
}

double fabricate_gain(const FabricationPolicy& policy, double honest_gain,
                      std::uint64_t seed, int client_id, int round) {
  switch (policy.kind) {
    case FabricationPolicy::Kind::kHonest:
      return honest_gain;
    case FabricationPolicy::Kind::kConstant:
      return policy.value;
    case FabricationPolicy::Kind::kUniformRandom: {
      Rng rng = make_rng(seed, Stream::kFabrication,
                         static_cast<std::uint64_t>(client_id),
                         static_cast<std::uint64_t>(round));
      return std::uniform_real_distribution<double>(policy.low, policy.high)(rng);
    }
  }
  return honest_gain;
}

ClientUpdateResult attacker_report(ClientState& client, const ParamVector& w_prev,
                                   const ClientUpdateOptions& options,
                                   const LocalTrainParams& params,
                                   const FabricationPolicy& policy,
                                   std::uint64_t seed, int round) {
  if (client.behavior != Behavior::kAttacker) {
    throw ProtocolError("client " + std::to_string(client.client_id) +
                        " is not an attacker");
  }
  ClientUpdateResult out = client_update(client, w_prev, options, params, seed, round);
  out.report.beta_hat =
      fabricate_gain(policy, out.report.beta_hat, seed, client.client_id, round);
  return out;
}

ClientUpdateResult vanilla_client_report(ClientState& client, const ParamVector& w_prev,
                                         const LocalTrainParams& params,
                                         std::uint64_t seed, int round) {
  return client_update(client, w_prev, ClientUpdateOptions{}, params, seed, round);
}

}  // namespace nflsim
