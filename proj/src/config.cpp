#include "nflsim/config.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <set>

#include "nflsim/errors.hpp"

namespace nflsim {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError("expected an object", path.empty() ? "<root>" : path);
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key", path.empty() ? key : path + "." + key);
    }
  }
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

template <typename T>
void read(const json& obj, const std::string& path, const std::string& key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value: ") + e.what(), join(path, key));
  }
}

// Enum read through a string parser; parser errors get the key path.
template <typename T, typename Parse>
void read_enum(const json& obj, const std::string& path, const std::string& key,
               T& out, Parse parse) {
  std::string s;
  if (!obj.contains(key)) return;
  read(obj, path, key, s);
  try {
    out = parse(s);
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), join(path, key));
  }
}

void apply_fabrication(const json& j, FabricationPolicy& f) {
  const std::string path = "behavior.fabrication";
  reject_unknown(j, path, {"policy", "value", "low", "high"});
  read_enum(j, path, "policy", f.kind, fabrication_kind_from_string);
  read(j, path, "value", f.value);
  read(j, path, "low", f.low);
  read(j, path, "high", f.high);
}

// Desk-scale defaults shared by every preset.
SimConfig desk_defaults() {
  SimConfig c;
  c.seed = 1;
  c.num_clients = 50;
  c.active_fraction = 0.1;
  c.rounds = 400;
  c.local_epochs = 1;
  c.batch_size = 10;
  c.learning_rate = 0.1;
  c.hidden = {32};
  c.activation = Activation::kRelu;
  c.data.classes = 10;
  c.data.dim = 32;
  c.data.per_class = 1000;
  c.data.spread = 1.0;
  c.data.separation = 2.5;
  c.partition.train_fraction = 0.9;
  c.partition.min_client_size = 40;
  c.nr = 50;
  c.window_c = 50;
  c.private_training = {50, 0.1, 10};
  c.eval_every = 5;
  return c;
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kFedAvg: return "fedavg";
    case Mode::kDetectRecover: return "detect_recover";
    case Mode::kAllTime: return "all_time";
    case Mode::kShortTerm: return "short_term";
  }
  return "detect_recover";
}

Mode mode_from_string(const std::string& s) {
  for (auto m : {Mode::kFedAvg, Mode::kDetectRecover, Mode::kAllTime, Mode::kShortTerm}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown mode '" + s + "'", "mode");
}

int SimConfig::k() const {
  if (active_clients > 0) return active_clients;
  return std::max(1, static_cast<int>(std::lround(active_fraction * num_clients)));
}

ModelSpec SimConfig::model_spec() const {
  ModelSpec spec;
  spec.layer_sizes.push_back(data.dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.layer_sizes.push_back(data.classes);
  spec.activation = activation;
  return spec;
}

void SimConfig::validate() const {
  if (num_clients < 1) throw ConfigError("must be at least 1", "clients.N");
  if (active_clients < 0) throw ConfigError("must be non-negative", "clients.K");
  if (active_clients > num_clients) {
    throw ConfigError("K = " + std::to_string(active_clients) + " exceeds N = " +
                          std::to_string(num_clients),
                      "clients.K");
  }
  if (!(active_fraction > 0.0 && active_fraction <= 1.0)) {
    throw ConfigError("must lie in (0, 1]", "clients.active_fraction");
  }
  if (rounds < 1) throw ConfigError("must be at least 1", "rounds");
  if (local_epochs < 1) throw ConfigError("must be at least 1", "local.E");
  if (batch_size < 1) throw ConfigError("must be at least 1", "local.B");
  if (!(learning_rate >= 0.0)) throw ConfigError("must be non-negative", "local.eta");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("hidden sizes must be positive", "model.hidden");
  }
  if (data.source != "synthetic" && data.source != "file") {
    throw ConfigError("must be 'synthetic' or 'file'", "data.source");
  }
  if (data.source == "file" && data.path.empty()) {
    throw ConfigError("required when data.source is 'file'", "data.path");
  }
  if (data.delimiter.size() != 1) throw ConfigError("must be one character", "data.delimiter");
  if (data.classes < 2) throw ConfigError("must be at least 2", "data.classes");
  if (data.dim < 1) throw ConfigError("must be positive", "data.dim");
  if (data.per_class < 1) throw ConfigError("must be positive", "data.per_class");
  if (!(data.spread >= 0.0)) throw ConfigError("must be non-negative", "data.spread");
  partition.validate();
  if (nr < 1) throw ConfigError("must be at least 1", "detection.NR");
  if (window_c < 1) throw ConfigError("must be at least 1", "detection.c");
  aggregator.validate(k());
  if (dp.enabled) {
    if (dp.clip_norm < 0.0) throw ConfigError("must be non-negative", "dp.S");
    if (dp.sigma < 0.0) throw ConfigError("must be non-negative", "dp.sigma");
  }
  adaptation.validate(model_spec());
  behavior.validate();
  if (private_training.epochs < 1) throw ConfigError("must be at least 1", "private_training.epochs");
  if (private_training.batch_size < 1) throw ConfigError("must be at least 1", "private_training.B");
  if (eval_every < 1) throw ConfigError("must be at least 1", "eval_every");
}

json to_json(const SimConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["clients"] = {{"N", c.num_clients}, {"K", c.k()}, {"active_fraction", c.active_fraction}};
  j["rounds"] = c.rounds;
  j["local"] = {{"E", c.local_epochs}, {"B", c.batch_size}, {"eta", c.learning_rate}};
  j["model"] = {{"hidden", c.hidden}, {"activation", to_string(c.activation)}};
  j["data"] = {{"source", c.data.source},       {"classes", c.data.classes},
               {"dim", c.data.dim},             {"per_class", c.data.per_class},
               {"spread", c.data.spread},       {"separation", c.data.separation},
               {"path", c.data.path},           {"delimiter", c.data.delimiter}};
  j["partition"] = {{"scheme", to_string(c.partition.scheme)},
                    {"group_fractions", c.partition.group_fractions},
                    {"lognormal_mu", c.partition.lognormal_mu},
                    {"lognormal_sigma", c.partition.lognormal_sigma},
                    {"train_fraction", c.partition.train_fraction},
                    {"min_client_size", c.partition.min_client_size}};
  j["mode"] = to_string(c.mode);
  j["detection"] = {{"NR", c.nr}, {"c", c.window_c},
                    {"individual_measures", c.individual_measures}};
  j["aggregator"] = {{"kind", to_string(c.aggregator.kind)},
                     {"trim_k", c.aggregator.trim_k},
                     {"f", c.aggregator.krum_f},
                     {"m", c.aggregator.krum_m},
                     {"k", c.aggregator.norm_k}};
  j["dp"] = {{"enabled", c.dp.enabled}, {"S", c.dp.clip_norm}, {"sigma", c.dp.sigma}};
  j["adaptation"] = {{"frozen_layers", c.adaptation.frozen_lower_layers}};
  if (c.adaptation.lambda_mode == LambdaMode::kFixed) {
    j["adaptation"]["lambda"] = c.adaptation.fixed_lambda;
  } else {
    j["adaptation"]["lambda"] = "dynamic";
  }
  const FabricationPolicy& f = c.behavior.fabrication;
  j["behavior"] = {{"attacker_fraction", c.behavior.attacker_fraction},
                   {"vanilla_fraction", c.behavior.vanilla_fraction},
                   {"fabrication",
                    {{"policy", to_string(f.kind)},
                     {"value", f.value},
                     {"low", f.low},
                     {"high", f.high}}}};
  j["private_training"] = {{"epochs", c.private_training.epochs},
                           {"eta", c.private_training.eta},
                           {"B", c.private_training.batch_size}};
  j["beta_weights"] = to_string(c.beta_weights);
  j["eval_every"] = c.eval_every;
  j["trace_lambda"] = c.trace_lambda;
  return j;
}

SimConfig apply_json(SimConfig c, const json& j) {
  reject_unknown(j, "",
                 {"preset", "seed", "clients", "rounds", "local", "model", "data",
                  "partition", "mode", "detection", "aggregator", "dp", "adaptation",
                  "behavior", "private_training", "beta_weights", "eval_every",
                  "trace_lambda"});
  read(j, "", "seed", c.seed);
  if (j.contains("clients")) {
    const json& s = j["clients"];
    reject_unknown(s, "clients", {"N", "K", "active_fraction"});
    read(s, "clients", "N", c.num_clients);
    if (s.contains("active_fraction")) {
      read(s, "clients", "active_fraction", c.active_fraction);
      c.active_clients = 0;
    }
    read(s, "clients", "K", c.active_clients);
  }
  read(j, "", "rounds", c.rounds);
  if (j.contains("local")) {
    const json& s = j["local"];
    reject_unknown(s, "local", {"E", "B", "eta"});
    read(s, "local", "E", c.local_epochs);
    read(s, "local", "B", c.batch_size);
    read(s, "local", "eta", c.learning_rate);
  }
  if (j.contains("model")) {
    const json& s = j["model"];
    reject_unknown(s, "model", {"hidden", "activation"});
    read(s, "model", "hidden", c.hidden);
    read_enum(s, "model", "activation", c.activation, activation_from_string);
  }
  if (j.contains("data")) {
    const json& s = j["data"];
    reject_unknown(s, "data", {"source", "classes", "dim", "per_class", "spread",
                               "separation", "path", "delimiter"});
    read(s, "data", "source", c.data.source);
    read(s, "data", "classes", c.data.classes);
    read(s, "data", "dim", c.data.dim);
    read(s, "data", "per_class", c.data.per_class);
    read(s, "data", "spread", c.data.spread);
    read(s, "data", "separation", c.data.separation);
    read(s, "data", "path", c.data.path);
    read(s, "data", "delimiter", c.data.delimiter);
  }
  if (j.contains("partition")) {
    const json& s = j["partition"];
    reject_unknown(s, "partition", {"scheme", "group_fractions", "lognormal_mu",
                                    "lognormal_sigma", "train_fraction",
                                    "min_client_size"});
    read_enum(s, "partition", "scheme", c.partition.scheme, partition_scheme_from_string);
    read(s, "partition", "group_fractions", c.partition.group_fractions);
    read(s, "partition", "lognormal_mu", c.partition.lognormal_mu);
    read(s, "partition", "lognormal_sigma", c.partition.lognormal_sigma);
    read(s, "partition", "train_fraction", c.partition.train_fraction);
    read(s, "partition", "min_client_size", c.partition.min_client_size);
  }
  read_enum(j, "", "mode", c.mode, mode_from_string);
  if (j.contains("detection")) {
    const json& s = j["detection"];
    reject_unknown(s, "detection", {"NR", "c", "individual_measures"});
    read(s, "detection", "NR", c.nr);
    read(s, "detection", "c", c.window_c);
    read(s, "detection", "individual_measures", c.individual_measures);
  }
  if (j.contains("aggregator")) {
    const json& s = j["aggregator"];
    reject_unknown(s, "aggregator", {"kind", "trim_k", "f", "m", "k"});
    read_enum(s, "aggregator", "kind", c.aggregator.kind, aggregator_kind_from_string);
    read(s, "aggregator", "trim_k", c.aggregator.trim_k);
    read(s, "aggregator", "f", c.aggregator.krum_f);
    read(s, "aggregator", "m", c.aggregator.krum_m);
    read(s, "aggregator", "k", c.aggregator.norm_k);
  }
  if (j.contains("dp")) {
    const json& s = j["dp"];
    reject_unknown(s, "dp", {"enabled", "S", "sigma"});
    read(s, "dp", "enabled", c.dp.enabled);
    read(s, "dp", "S", c.dp.clip_norm);
    read(s, "dp", "sigma", c.dp.sigma);
  }
  if (j.contains("adaptation")) {
    const json& s = j["adaptation"];
    reject_unknown(s, "adaptation", {"frozen_layers", "lambda"});
    read(s, "adaptation", "frozen_layers", c.adaptation.frozen_lower_layers);
    if (s.contains("lambda")) {
      const json& l = s["lambda"];
      if (l.is_string() && l.get<std::string>() == "dynamic") {
        c.adaptation.lambda_mode = LambdaMode::kDynamic;
      } else if (l.is_number()) {
        c.adaptation.lambda_mode = LambdaMode::kFixed;
        c.adaptation.fixed_lambda = l.get<double>();
      } else {
        throw ConfigError("must be \"dynamic\" or a number", "adaptation.lambda");
      }
    }
  }
  if (j.contains("behavior")) {
    const json& s = j["behavior"];
    reject_unknown(s, "behavior", {"attacker_fraction", "vanilla_fraction", "fabrication"});
    read(s, "behavior", "attacker_fraction", c.behavior.attacker_fraction);
    read(s, "behavior", "vanilla_fraction", c.behavior.vanilla_fraction);
    if (s.contains("fabrication")) apply_fabrication(s["fabrication"], c.behavior.fabrication);
  }
  if (j.contains("private_training")) {
    const json& s = j["private_training"];
    reject_unknown(s, "private_training", {"epochs", "eta", "B"});
    read(s, "private_training", "epochs", c.private_training.epochs);
    read(s, "private_training", "eta", c.private_training.eta);
    read(s, "private_training", "B", c.private_training.batch_size);
  }
  read_enum(j, "", "beta_weights", c.beta_weights, weights_mode_from_string);
  read(j, "", "eval_every", c.eval_every);
  read(j, "", "trace_lambda", c.trace_lambda);
  c.validate();
  return c;
}

SimConfig config_from_json(const json& j) {
  SimConfig base = desk_defaults();
  if (j.is_object() && j.contains("preset")) {
    if (!j["preset"].is_string()) throw ConfigError("must be a string", "preset");
    base = preset(j["preset"].get<std::string>());
  }
  return apply_json(std::move(base), j);
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  return config_from_json(j);
}

void save_config(const SimConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file '" + path + "'");
  out << to_json(config).dump(2) << "\n";
}

SimConfig preset(const std::string& name) {
  static const std::regex parameterised(R"(^(vanilla_mix|partial_adapt)[(:]([0-9.]+)\)?$)");
  SimConfig c = desk_defaults();
  if (name == "ideal") {
    c.partition.scheme = PartitionScheme::kIid;
    c.behavior.attacker_fraction = 0.0;
    c.dp = {};
    return c;
  }
  // The adversarial scenario: non-IID mixed allocation, label-flip attackers,
  // 10% activity and clipped, noised aggregation.
  c.partition.scheme = PartitionScheme::kNonIidMixed;
  c.partition.group_fractions = {0.5, 0.3, 0.2};
  c.partition.lognormal_mu = 0.0;
  c.partition.lognormal_sigma = 2.0;
  c.behavior.attacker_fraction = 0.3;
  c.active_fraction = 0.1;
  c.dp = {true, 15.0, 0.001};
  if (name == "nfl_default") return c;

  std::smatch m;
  if (std::regex_match(name, m, parameterised)) {
    const std::string kind = m[1];
    const std::string arg = m[2];
    try {
      if (kind == "vanilla_mix") {
        c.behavior.vanilla_fraction = std::stod(arg);
      } else {
        c.adaptation.frozen_lower_layers = std::stoi(arg);
      }
    } catch (const std::exception&) {
      throw ConfigError("bad preset argument '" + arg + "'", "preset");
    }
    c.validate();
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'", "preset");
}

std::vector<std::string> preset_names() {
  return {"ideal", "nfl_default", "vanilla_mix(p)", "partial_adapt(L_fb)"};
}

}  // namespace nflsim
