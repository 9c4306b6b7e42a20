#include "nflsim/simulation.hpp"

#include <algorithm>

#include "nflsim/adversary.hpp"
#include "nflsim/data.hpp"
#include "nflsim/errors.hpp"
#include "nflsim/worker_pool.hpp"

namespace nflsim {

std::vector<ClientState> build_clients(const SimConfig& config, int workers) {
  config.validate();
  LabeledDataset data;
  if (config.data.source == "file") {
    data = load_delimited(config.data.path, config.data.delimiter.front());
  } else {
    data = gen_synthetic(config.data.classes, config.data.dim, config.data.per_class,
                         config.data.spread, config.seed, config.data.separation);
  }
  const ModelSpec spec = config.model_spec();
  if (data.examples.features.cols() != spec.input_dim() ||
      data.class_count > spec.class_count()) {
    throw ConfigError("dataset shape does not match the model", "data");
  }
  std::vector<ClientData> parts =
      partition(data, config.num_clients, config.partition, config.seed);
  const std::vector<Behavior> behaviors =
      assign_behaviors(config.num_clients, config.behavior, config.seed);

  std::vector<ClientState> clients(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    ClientState& c = clients[i];
    c.client_id = static_cast<int>(i);
    c.train = std::move(parts[i].train);
    c.test = std::move(parts[i].test);
    c.classes = std::move(parts[i].classes);
    c.behavior = behaviors[i];
    // An attacker's whole local view is the flipped copy: its private model,
    // uploads, gain estimates and adapted model all see flipped labels.
    if (c.behavior == Behavior::kAttacker) {
      c.train = flip_labels(c.train, spec.class_count());
      c.test = flip_labels(c.test, spec.class_count());
    }
  }
  WorkerPool pool(workers);
  pool.parallel_for(clients.size(), [&](std::size_t i) {
    ClientState& c = clients[i];
    PrivateModel pm = train_private(
        c.train, c.test, spec, config.private_training,
        derive_seed(config.seed, Stream::kPrivate, static_cast<std::uint64_t>(i)));
    c.private_params = std::move(pm.params);
    c.private_score = pm.score;
  });
  return clients;
}

Summary summarize(std::span<const RoundMetrics> metrics, int last) {
  Summary s;
  const std::size_t n = std::min(metrics.size(), static_cast<std::size_t>(last));
  if (n == 0) return s;
  const auto tail = metrics.subspan(metrics.size() - n);
  s.rounds_averaged = static_cast<int>(n);
  auto mean_opt = [&](auto field) -> std::optional<double> {
    double sum = 0.0;
    int count = 0;
    for (const RoundMetrics& m : tail) {
      if (const std::optional<double>& v = m.*field; v) {
        sum += *v;
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
  };
  for (const RoundMetrics& m : tail) {
    s.beta_r += m.beta_r;
    s.beta_win += m.beta_win;
  }
  s.beta_r /= static_cast<double>(n);
  s.beta_win /= static_cast<double>(n);
  s.beta_true = mean_opt(&RoundMetrics::beta_true);
  s.acc = mean_opt(&RoundMetrics::acc);
  s.beta_guard = mean_opt(&RoundMetrics::beta_guard);
  return s;
}

RunArtifact run_simulation(const SimConfig& config, int workers,
                           const RoundObserver& observer) {
  RunArtifact art;
  art.config = config;
  art.clients = build_clients(config, workers);
  for (const ClientState& c : art.clients) art.behaviors.push_back(c.behavior);
  art.server = init_server(config);
  for (const ClientState& c : art.clients) {
    art.events.push_back({0, "behavior", c.client_id, to_string(c.behavior)});
  }
  if (observer) observer(RoundMetrics{}, art.events);

  WorkerPool pool(workers);
  const int final_window_start = config.rounds - 10;
  for (int r = 1; r <= config.rounds; ++r) {
    const bool evaluate = r % config.eval_every == 0 || r > final_window_start;
    const std::size_t first_event = art.events.size();
    RoundMetrics m =
        run_round(art.server, art.clients, config, evaluate, art.events, &pool);
    if (observer) {
      observer(m, std::span<const Event>(art.events).subspan(first_event));
    }
    art.metrics.push_back(std::move(m));
  }
  art.summary = summarize(art.metrics);
  return art;
}

}  // namespace nflsim
