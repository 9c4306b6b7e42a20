#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nflsim/model.hpp"

namespace nflsim {

// β̂_i: accuracy of `eval_model` on the client's first batch of the round
// minus the private-model score P_i.
double estimate_client_gain(const ParamVector& eval_model,
                            const Batch& first_batch, double private_score);

// Median of the per-client gains of one round; an even count averages the
// middle pair.
double round_median(std::span<const double> gains);

// Mean of the last min(c, history.size()) entries.
double windowed_gain(std::span<const double> history, int c);

enum class DetectorEvent { kNone, kReport, kCancel };

std::string to_string(DetectorEvent e);

// Server-side NFL detector.
//
// Each round appends the round median β̂^r, recomputes the windowed gain and
// counts rounds with a negative windowed gain. NFL is reported on a negative
// round once that count reaches `nr`. A standing report is cancelled once
// more than `c` rounds have passed since the last round with β̂^r < 0. The
// negative-round count is never reset.
struct DetectorState {
  int c = 50;
  int nr = 50;
  std::vector<double> history;
  int cnt = 0;
  bool nfl_flag = false;
  std::optional<int> last_negative_round;
  double windowed = 0.0;

  int round() const { return static_cast<int>(history.size()); }
};

struct DetectorStep {
  DetectorState state;
  DetectorEvent event = DetectorEvent::kNone;
};

DetectorStep detector_step(DetectorState state, double round_gain);

// Per-client bookkeeping for the individual-level measures.
struct LocalPolicyState {
  int negative_rounds = 0;
  int nonnegative_streak = 0;
  bool active = false;
};

enum class LocalAction { kNone, kActivateAdaptation, kStopAdaptation };

std::string to_string(LocalAction a);

// Updates the client's own record with this round's β̂_i. Adaptation starts
// once the client has seen more than `nr` negative rounds while the system
// flag is off, and stops after `c` consecutive non-negative rounds.
LocalAction client_local_policy(LocalPolicyState& state, double client_gain,
                                bool system_flag, int nr, int c);

enum class WeightsMode { kEqual, kSize };

std::string to_string(WeightsMode m);
WeightsMode weights_mode_from_string(const std::string& s);

struct GainRecord {
  std::vector<double> per_client;           // β_i
  std::vector<double> per_client_accuracy;  // V_i
  double overall = 0.0;                     // β
};

struct GainInput {
  const ParamVector* inference_model = nullptr;
  const Batch* test = nullptr;
  double private_score = 0.0;
  std::size_t sample_count = 0;
};

// Ground-truth performance gain on every client's full test set.
GainRecord true_beta(std::span<const GainInput> clients, WeightsMode mode);

}  // namespace nflsim
