#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nflsim/client.hpp"
#include "nflsim/data.hpp"

namespace nflsim {

// What an attacker reports as β̂_i.
struct FabricationPolicy {
  enum class Kind { kHonest, kConstant, kUniformRandom };
  Kind kind = Kind::kHonest;
  double value = 0.0;  // constant
  double low = -1.0;   // uniform_random range
  double high = 1.0;

  static FabricationPolicy honest() { return {}; }
  static FabricationPolicy constant(double v) { return {Kind::kConstant, v, 0.0, 0.0}; }
  static FabricationPolicy uniform(double lo, double hi) {
    return {Kind::kUniformRandom, 0.0, lo, hi};
  }
};

std::string to_string(FabricationPolicy::Kind k);
FabricationPolicy::Kind fabrication_kind_from_string(const std::string& s);

struct BehaviorAssignment {
  double attacker_fraction = 0.0;
  double vanilla_fraction = 0.0;
  FabricationPolicy fabrication;

  void validate() const;
};

// y -> class_count - 1 - y; features are untouched.
LabeledDataset flip_labels(const LabeledDataset& data, int class_count);
Batch flip_labels(const Batch& batch, int class_count);

// Exactly round(N * fraction) attackers and vanilla clients, drawn without
// replacement; everyone else is an honest guard client.
std::vector<Behavior> assign_behaviors(int n, const BehaviorAssignment& assignment,
                                       std::uint64_t seed);

// Applies the fabrication policy to an honestly computed gain.
double fabricate_gain(const FabricationPolicy& policy, double honest_gain,
                      std::uint64_t seed, int client_id, int round);

// Label-flip poisoner. Its data already carries flipped labels (see
// build_clients), so this is the standard client round followed by the
// fabrication policy applied to β̂_i.
ClientUpdateResult attacker_report(ClientState& client, const ParamVector& w_prev,
                                   const ClientUpdateOptions& options,
                                   const LocalTrainParams& params,
                                   const FabricationPolicy& policy,
                                   std::uint64_t seed, int round);

// A client that never runs recovery: plain client_update with the flag off.
ClientUpdateResult vanilla_client_report(ClientState& client, const ParamVector& w_prev,
                                         const LocalTrainParams& params,
                                         std::uint64_t seed, int round);

}  // namespace nflsim
