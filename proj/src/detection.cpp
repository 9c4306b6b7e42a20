#include "nflsim/detection.hpp"

#include <algorithm>

#include "nflsim/errors.hpp"

namespace nflsim {

double estimate_client_gain(const ParamVector& eval_model,
                            const Batch& first_batch, double private_score) {
  if (first_batch.empty()) throw ProtocolError("cannot estimate gain on an empty batch");
  return accuracy(eval_model, first_batch) - private_score;
}

double round_median(std::span<const double> gains) {
  if (gains.empty()) throw ProtocolError("median of an empty gain list");
  std::vector<double> v(gains.begin(), gains.end());
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

double windowed_gain(std::span<const double> history, int c) {
  if (history.empty()) throw ProtocolError("windowed gain of an empty history");
  const std::size_t w =
      std::min(history.size(), static_cast<std::size_t>(std::max(c, 1)));
  double sum = 0.0;
  for (std::size_t k = history.size() - w; k < history.size(); ++k) sum += history[k];
  return sum / static_cast<double>(w);
}

std::string to_string(DetectorEvent e) {
  switch (e) {
    case DetectorEvent::kReport: return "report";
    case DetectorEvent::kCancel: return "cancel";
    case DetectorEvent::kNone: break;
  }
  return "none";
}

DetectorStep detector_step(DetectorState state, double round_gain) {
  state.history.push_back(round_gain);
  const int r = state.round();
  state.windowed = windowed_gain(state.history, state.c);
  const bool negative_window = state.windowed < 0.0;
  if (negative_window) ++state.cnt;
  if (round_gain < 0.0) state.last_negative_round = r;

  DetectorEvent event = DetectorEvent::kNone;
  if (negative_window && state.cnt >= state.nr && !state.nfl_flag) {
    state.nfl_flag = true;
    event = DetectorEvent::kReport;
  } else if (state.nfl_flag && r - state.last_negative_round.value_or(0) > state.c) {
    state.nfl_flag = false;
    event = DetectorEvent::kCancel;
  }
  return {std::move(state), event};
}

std::string to_string(LocalAction a) {
  switch (a) {
    case LocalAction::kActivateAdaptation: return "activate_adaptation";
    case LocalAction::kStopAdaptation: return "stop_adaptation";
    case LocalAction::kNone: break;
  }
  return "none";
}

LocalAction client_local_policy(LocalPolicyState& state, double client_gain,
                                bool system_flag, int nr, int c) {
  if (client_gain < 0.0) {
    ++state.negative_rounds;
    state.nonnegative_streak = 0;
  } else {
    ++state.nonnegative_streak;
  }
  if (!state.active) {
    if (!system_flag && state.negative_rounds > nr) {
      state.active = true;
      state.nonnegative_streak = 0;
      return LocalAction::kActivateAdaptation;
    }
    return LocalAction::kNone;
  }
  if (state.nonnegative_streak >= c) {
    state.active = false;
    state.negative_rounds = 0;
    return LocalAction::kStopAdaptation;
  }
  return LocalAction::kNone;
}

std::string to_string(WeightsMode m) {
  return m == WeightsMode::kEqual ? "equal" : "size";
}

WeightsMode weights_mode_from_string(const std::string& s) {
  if (s == "equal") return WeightsMode::kEqual;
  if (s == "size") return WeightsMode::kSize;
  throw ConfigError("unknown weights mode '" + s + "'");
}

GainRecord true_beta(std::span<const GainInput> clients, WeightsMode mode) {
  GainRecord out;
  if (clients.empty()) return out;
  std::size_t total = 0;
  for (const GainInput& c : clients) total += c.sample_count;
  for (const GainInput& c : clients) {
    if (c.test == nullptr || c.test->empty()) {
      throw ProtocolError("client without a test set");
    }
    const double v = accuracy(*c.inference_model, *c.test);
    const double beta = v - c.private_score;
    out.per_client_accuracy.push_back(v);
    out.per_client.push_back(beta);
    const double alpha =
        mode == WeightsMode::kEqual || total == 0
            ? 1.0 / static_cast<double>(clients.size())
            : static_cast<double>(c.sample_count) / static_cast<double>(total);
    out.overall += alpha * beta;
  }
  return out;
}

}  // namespace nflsim
