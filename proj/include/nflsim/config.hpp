#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "nflsim/adversary.hpp"
#include "nflsim/data.hpp"
#include "nflsim/detection.hpp"
#include "nflsim/model.hpp"
#include "nflsim/recovery.hpp"
#include "nflsim/robust_aggregation.hpp"

namespace nflsim {

enum class Mode { kFedAvg, kDetectRecover, kAllTime, kShortTerm };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct DataSpec {
  std::string source = "synthetic";  // "synthetic" or "file"
  int classes = 10;
  int dim = 32;
  int per_class = 1000;
  double spread = 1.0;
  double separation = 1.0;
  std::string path;
  std::string delimiter = ",";
};

struct DpConfig {
  bool enabled = false;
  double clip_norm = 0.0;  // S; 0 disables clipping
  double sigma = 0.0;
};

struct SimConfig {
  std::uint64_t seed = 1;
  int num_clients = 50;
  double active_fraction = 0.1;
  int active_clients = 0;  // K; 0 derives it from active_fraction
  int rounds = 400;
  int local_epochs = 1;
  int batch_size = 10;
  double learning_rate = 0.1;

  std::vector<int> hidden{32};
  Activation activation = Activation::kRelu;

  DataSpec data;
  PartitionPlan partition;

  Mode mode = Mode::kDetectRecover;
  int nr = 50;
  int window_c = 50;
  bool individual_measures = false;

  AggregatorChoice aggregator;
  DpConfig dp;
  AdaptationConfig adaptation;
  BehaviorAssignment behavior;
  TrainingBudget private_training{20, 0.1, 10};
  WeightsMode beta_weights = WeightsMode::kEqual;
  int eval_every = 5;
  bool trace_lambda = false;

  int k() const;
  ModelSpec model_spec() const;
  void validate() const;
};

nlohmann::json to_json(const SimConfig& config);
// Applies the keys of `j` on top of `base`; unknown keys are rejected.
SimConfig apply_json(SimConfig base, const nlohmann::json& j);
SimConfig config_from_json(const nlohmann::json& j);

// Reads a JSON config file. A top-level "preset" key selects the base
// configuration the remaining keys override.
SimConfig load_config(const std::string& path);
void save_config(const SimConfig& config, const std::string& path);

// Named scenario presets: ideal, nfl_default, vanilla_mix(p),
// partial_adapt(L).
SimConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace nflsim
