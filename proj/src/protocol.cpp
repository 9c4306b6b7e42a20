#include "nflsim/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nflsim/adversary.hpp"
#include "nflsim/errors.hpp"
#include "nflsim/robust_aggregation.hpp"
#include "nflsim/worker_pool.hpp"

namespace nflsim {

namespace {

std::vector<const ClientReport*> sorted_reports(std::span<const ClientReport> reports) {
  if (reports.empty()) throw ProtocolError("no reports to aggregate");
  std::vector<const ClientReport*> out;
  for (const ClientReport& r : reports) {
    if (!reports.front().updated_params.same_layout(r.updated_params)) {
      throw ProtocolError("report from client " + std::to_string(r.client_id) +
                          " has a mismatched layout");
    }
    out.push_back(&r);
  }
  std::stable_sort(out.begin(), out.end(), [](const ClientReport* a, const ClientReport* b) {
    return a->client_id < b->client_id;
  });
  return out;
}

// Reports whose parameters are w_prev + Clip(w_i - w_prev, S).
std::vector<ClientReport> clipped_reports(const ParamVector& w_prev,
                                          std::span<const ClientReport> reports,
                                          double clip_norm) {
  std::vector<ClientReport> out(reports.begin(), reports.end());
  if (clip_norm <= 0.0) return out;
  for (ClientReport& r : out) {
    r.updated_params = w_prev + clip_update(r.updated_params - w_prev, clip_norm);
  }
  return out;
}

struct ClientTask {
  ClientState* client = nullptr;
  ClientUpdateOptions options;
  std::optional<ClientUpdateResult> result;
  bool skipped = false;
};

}  // namespace

std::vector<int> sample_active(int n, int k, int round, std::uint64_t seed) {
  if (n < 1) throw ConfigError("must be at least 1", "clients.N");
  if (k < 1 || k > n) {
    throw ConfigError("K = " + std::to_string(k) + " must lie in [1, N = " +
                          std::to_string(n) + "]",
                      "clients.K");
  }
  Rng rng = make_rng(seed, Stream::kSampling, static_cast<std::uint64_t>(round));
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  // Partial Fisher-Yates.
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<double> fedavg_weights(std::span<const ClientReport> reports) {
  const auto sorted = sorted_reports(reports);
  double total = 0.0;
  for (const ClientReport* r : sorted) total += static_cast<double>(r->n_i);
  std::vector<double> w;
  for (const ClientReport* r : sorted) w.push_back(static_cast<double>(r->n_i) / total);
  return w;
}

ParamVector aggregate_fedavg(std::span<const ClientReport> reports) {
  const auto sorted = sorted_reports(reports);
  const std::vector<double> w = fedavg_weights(reports);
  ParamVector out(sorted.front()->updated_params.layout_ptr());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const ParamVector& p = sorted[i]->updated_params;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += w[i] * p[j];
  }
  return out;
}

ParamVector clip_update(const ParamVector& delta, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ConfigError("clip norm must be positive", "dp.S");
  const double norm = l2_norm(delta);
  if (norm <= clip_norm) return delta;
  return delta * (clip_norm / norm);
}

ParamVector gaussian_noise(const ParamVector& like, double sigma,
                           std::uint64_t seed, int round) {
  ParamVector out(like.layout_ptr());
  if (sigma <= 0.0) return out;
  Rng rng = make_rng(seed, Stream::kNoise, static_cast<std::uint64_t>(round));
  std::normal_distribution<double> normal(0.0, sigma);
  for (double& v : out.values()) v = normal(rng);
  return out;
}

ParamVector aggregate_dp(const ParamVector& w_prev,
                         std::span<const ClientReport> reports, double clip_norm,
                         double sigma, std::uint64_t seed, int round) {
  if (sigma < 0.0) throw ConfigError("must be non-negative", "dp.sigma");
  const auto sorted = sorted_reports(reports);
  ParamVector sum(w_prev.layout_ptr());
  for (const ClientReport* r : sorted) {
    w_prev.require_same_layout(r->updated_params);
    ParamVector delta = r->updated_params - w_prev;
    sum += clip_norm > 0.0 ? clip_update(delta, clip_norm) : delta;
  }
  sum *= 1.0 / static_cast<double>(sorted.size());
  return w_prev + sum + gaussian_noise(w_prev, sigma, seed, round);
}

ParamVector aggregate(const ParamVector& w_prev, std::span<const ClientReport> reports,
                      const AggregatorChoice& choice, const DpConfig& dp,
                      std::uint64_t seed, int round) {
  if (dp.enabled && choice.kind == AggregatorKind::kFedAvg) {
    return aggregate_dp(w_prev, reports, dp.clip_norm, dp.sigma, seed, round);
  }
  const std::vector<ClientReport> inputs =
      clipped_reports(w_prev, reports, dp.enabled ? dp.clip_norm : 0.0);
  choice.validate(static_cast<int>(inputs.size()));
  ParamVector out;
  switch (choice.kind) {
    case AggregatorKind::kFedAvg: out = aggregate_fedavg(inputs); break;
    case AggregatorKind::kMedian: out = agg_median(inputs); break;
    case AggregatorKind::kTrimmedMean: out = agg_trimmed_mean(inputs, choice.trim_k); break;
    case AggregatorKind::kMultiKrum:
      out = agg_multi_krum(inputs, choice.krum_f, choice.krum_m);
      break;
    case AggregatorKind::kKNorm: out = agg_k_norm(inputs, w_prev, choice.norm_k); break;
  }
  if (dp.enabled && dp.sigma > 0.0) out += gaussian_noise(w_prev, dp.sigma, seed, round);
  return out;
}

std::string format_event(const Event& e) {
  std::string s = "round=" + std::to_string(e.round) + " event=" + e.type;
  if (e.client >= 0) s += " client=" + std::to_string(e.client);
  if (!e.detail.empty()) s += " " + e.detail;
  return s;
}

ServerState init_server(const SimConfig& config) {
  ServerState s;
  Rng rng = make_rng(config.seed, Stream::kInit);
  s.global = init_params(config.model_spec(), rng);
  s.detector.c = config.window_c;
  s.detector.nr = config.nr;
  s.detector.nfl_flag = config.mode == Mode::kAllTime;
  return s;
}

Evaluation evaluate_clients(const std::vector<ClientState>& clients,
                            const ParamVector& global, WeightsMode mode) {
  std::vector<GainInput> inputs;
  for (const ClientState& c : clients) {
    inputs.push_back({&inference_model(c.adapted, global), &c.test, c.private_score,
                      c.n_i()});
  }
  Evaluation out;
  out.gains = true_beta(inputs, mode);
  if (!clients.empty()) {
    out.acc = std::accumulate(out.gains.per_client_accuracy.begin(),
                              out.gains.per_client_accuracy.end(), 0.0) /
              static_cast<double>(clients.size());
  }
  double guard_sum = 0.0;
  int guard_count = 0;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].behavior != Behavior::kHonestGuard) continue;
    guard_sum += out.gains.per_client[i];
    ++guard_count;
  }
  if (guard_count > 0) out.beta_guard = guard_sum / guard_count;
  return out;
}

RoundMetrics run_round(ServerState& server, std::vector<ClientState>& clients,
                       const SimConfig& config, bool evaluate,
                       std::vector<Event>& events, WorkerPool* pool) {
  const int r = server.round + 1;
  const Mode mode = config.mode;
  const bool detector_on = mode == Mode::kDetectRecover || mode == Mode::kShortTerm;
  const bool recovery_on = mode != Mode::kFedAvg && !server.recovery_stopped;
  const bool individual = config.individual_measures && detector_on;

  LocalTrainParams local;
  local.epochs = config.local_epochs;
  local.batch_size = config.batch_size;
  local.eta = config.learning_rate;
  local.adapt = config.adaptation;

  const std::vector<int> active =
      sample_active(config.num_clients, config.k(), r, config.seed);
  std::vector<ClientTask> tasks;
  for (int id : active) {
    ClientTask t;
    t.client = &clients.at(static_cast<std::size_t>(id));
    if (t.client->behavior != Behavior::kVanilla) {
      const bool system_flag = mode == Mode::kAllTime || server.detector.nfl_flag;
      const bool local_flag = individual && t.client->local.active &&
                              t.client->behavior == Behavior::kHonestGuard;
      t.options.nfl_flag = recovery_on && (system_flag || local_flag);
      t.options.estimate_with_adapted = server.recovery_stopped;
    }
    t.options.trace_lambda = config.trace_lambda;
    tasks.push_back(std::move(t));
  }

  auto work = [&](std::size_t i) {
    ClientTask& t = tasks[i];
    try {
      switch (t.client->behavior) {
        case Behavior::kAttacker:
          t.result = attacker_report(*t.client, server.global, t.options, local,
                                     config.behavior.fabrication, config.seed, r);
          break;
        case Behavior::kVanilla:
          t.result = vanilla_client_report(*t.client, server.global, local,
                                           config.seed, r);
          break;
        case Behavior::kHonestGuard:
          t.result = client_update(*t.client, server.global, t.options, local,
                                   config.seed, r);
          break;
      }
    } catch (const SkipClient&) {
      t.skipped = true;
    }
  };
  if (pool != nullptr) {
    pool->parallel_for(tasks.size(), work);
  } else {
    for (std::size_t i = 0; i < tasks.size(); ++i) work(i);
  }

  RoundMetrics m;
  m.round = r;
  std::vector<ClientReport> reports;
  std::vector<double> gains;
  for (ClientTask& t : tasks) {
    const int id = t.client->client_id;
    if (t.skipped) {
      events.push_back({r, "client_skipped", id, ""});
      continue;
    }
    ClientUpdateResult& res = *t.result;
    if (res.initialized_adapted) events.push_back({r, "adapted_init", id, ""});
    if (res.adapt_steps > 0) {
      events.push_back({r, "adapt", id, "steps=" + std::to_string(res.adapt_steps)});
      m.adapt_steps += res.adapt_steps;
    }
    for (std::size_t k = 0; k < res.lambda_trace.size(); ++k) {
      const LambdaDiagnostics& d = res.lambda_trace[k];
      char buf[160];
      std::snprintf(buf, sizeof buf, "batch=%zu loss_div=%.6g grad_div=%.6g lambda=%.6g",
                    k, d.loss_div, d.grad_div, d.lambda);
      events.push_back({r, "lambda", id, buf});
    }
    if (individual && t.client->behavior == Behavior::kHonestGuard) {
      const LocalAction action =
          client_local_policy(t.client->local, res.report.beta_hat,
                              server.detector.nfl_flag, config.nr, config.window_c);
      if (action != LocalAction::kNone) events.push_back({r, to_string(action), id, ""});
    }
    gains.push_back(res.report.beta_hat);
    reports.push_back(std::move(res.report));
  }
  m.reporting_clients = static_cast<int>(reports.size());

  double round_gain = 0.0;
  if (reports.empty()) {
    events.push_back({r, "empty_round", -1, ""});
    m.events.push_back("empty_round");
    round_gain = server.detector.history.empty() ? 0.0 : server.detector.history.back();
  } else {
    server.global = aggregate(server.global, reports, config.aggregator, config.dp,
                              config.seed, r);
    round_gain = round_median(gains);
  }

  if (detector_on) {
    DetectorStep step = detector_step(std::move(server.detector), round_gain);
    server.detector = std::move(step.state);
    if (step.event != DetectorEvent::kNone) {
      const std::string type = step.event == DetectorEvent::kReport ? "nfl_report"
                                                                    : "nfl_cancel";
      events.push_back({r, type, -1, "cnt=" + std::to_string(server.detector.cnt)});
      m.events.push_back(type);
      if (step.event == DetectorEvent::kCancel && mode == Mode::kShortTerm &&
          !server.recovery_stopped) {
        server.recovery_stopped = true;
        events.push_back({r, "recovery_stopped", -1, ""});
        m.events.push_back("recovery_stopped");
      }
    }
  } else {
    server.detector.history.push_back(round_gain);
    server.detector.windowed = windowed_gain(server.detector.history, server.detector.c);
  }
  server.round = r;

  m.beta_r = round_gain;
  m.beta_win = server.detector.windowed;
  m.nfl_flag = server.detector.nfl_flag;
  m.global_fingerprint = server.global.fingerprint();
  if (evaluate) {
    Evaluation ev = evaluate_clients(clients, server.global, config.beta_weights);
    m.beta_true = ev.gains.overall;
    m.acc = ev.acc;
    m.beta_guard = ev.beta_guard;
  }
  return m;
}

}  // namespace nflsim
