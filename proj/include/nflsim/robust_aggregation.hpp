#pragma once

#include <span>
#include <string>
#include <vector>

#include "nflsim/report.hpp"

namespace nflsim {

enum class AggregatorKind { kFedAvg, kMedian, kTrimmedMean, kMultiKrum, kKNorm };

std::string to_string(AggregatorKind k);
AggregatorKind aggregator_kind_from_string(const std::string& s);

struct AggregatorChoice {
  AggregatorKind kind = AggregatorKind::kFedAvg;
  int trim_k = 1;      // trimmed mean: values dropped at each end
  int krum_f = 1;      // multi-Krum: assumed Byzantine count
  int krum_m = 0;      // multi-Krum: reports averaged; 0 means n - f
  int norm_k = 1;      // K-norm: largest-norm updates dropped

  // Throws ConfigError if the choice cannot run on `report_count` reports.
  void validate(int report_count) const;
};

// All robust aggregators are unweighted and permutation-invariant.

// Coordinate-wise median; even counts average the middle pair.
ParamVector agg_median(std::span<const ClientReport> reports);

// Coordinate-wise mean after dropping the trim_k largest and smallest values.
ParamVector agg_trimmed_mean(std::span<const ClientReport> reports, int trim_k);

// Krum scores (sum of squared distances to the n - f - 2 nearest other
// reports); averages the m lowest-scoring reports, ties to the lower id.
ParamVector agg_multi_krum(std::span<const ClientReport> reports, int f, int m);
std::vector<double> krum_scores(std::span<const ClientReport> reports, int f);
// Client ids picked by multi-Krum, in ascending order.
std::vector<int> multi_krum_selection(std::span<const ClientReport> reports,
                                      int f, int m);

// Drops the k reports whose updates (params - reference) have the largest
// norms, ties dropping the higher id first, and averages the rest.
ParamVector agg_k_norm(std::span<const ClientReport> reports,
                       const ParamVector& reference, int k);

// Unweighted mean in ascending client-id order.
ParamVector mean_of(std::span<const ClientReport> reports);

}  // namespace nflsim
