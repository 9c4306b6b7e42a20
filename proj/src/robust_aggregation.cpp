#include "nflsim/robust_aggregation.hpp"

#include <algorithm>
#include <numeric>

#include "nflsim/errors.hpp"

namespace nflsim {

namespace {

// Reports sorted by client id, with a layout check.
std::vector<const ClientReport*> canonical(std::span<const ClientReport> reports) {
  if (reports.empty()) throw ProtocolError("no reports to aggregate");
  std::vector<const ClientReport*> out;
  for (const ClientReport& r : reports) {
    reports.front().updated_params.require_same_layout(r.updated_params);
    out.push_back(&r);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ClientReport* a, const ClientReport* b) {
                     return a->client_id < b->client_id;
                   });
  return out;
}

ParamVector mean_of(const std::vector<const ClientReport*>& reports) {
  ParamVector out(reports.front()->updated_params.layout_ptr());
  for (const ClientReport* r : reports) out += r->updated_params;
  out *= 1.0 / static_cast<double>(reports.size());
  return out;
}

// Applies `reduce` to the sorted column of each coordinate.
template <typename Reduce>
ParamVector coordinate_wise(std::span<const ClientReport> reports, Reduce reduce) {
  const auto sorted = canonical(reports);
  ParamVector out(sorted.front()->updated_params.layout_ptr());
  std::vector<double> column(sorted.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      column[i] = sorted[i]->updated_params[j];
    }
    std::sort(column.begin(), column.end());
    out[j] = reduce(column);
  }
  return out;
}

}  // namespace

std::string to_string(AggregatorKind k) {
  switch (k) {
    case AggregatorKind::kFedAvg: return "fedavg";
    case AggregatorKind::kMedian: return "median";
    case AggregatorKind::kTrimmedMean: return "trimmed_mean";
    case AggregatorKind::kMultiKrum: return "multi_krum";
    case AggregatorKind::kKNorm: return "k_norm";
  }
  return "fedavg";
}

AggregatorKind aggregator_kind_from_string(const std::string& s) {
  for (auto k : {AggregatorKind::kFedAvg, AggregatorKind::kMedian,
                 AggregatorKind::kTrimmedMean, AggregatorKind::kMultiKrum,
                 AggregatorKind::kKNorm}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown aggregator '" + s + "'", "aggregator.kind");
}

void AggregatorChoice::validate(int n) const {
  switch (kind) {
    case AggregatorKind::kFedAvg:
    case AggregatorKind::kMedian:
      break;
    case AggregatorKind::kTrimmedMean:
      if (trim_k < 0 || n <= 2 * trim_k) {
        throw ConfigError("trimmed mean needs more than 2*trim_k reports (have " +
                              std::to_string(n) + ")",
                          "aggregator.trim_k");
      }
      break;
    case AggregatorKind::kMultiKrum: {
      if (krum_f < 0 || n < 2 * krum_f + 3) {
        throw ConfigError("multi-Krum needs at least 2f+3 reports (have " +
                              std::to_string(n) + ")",
                          "aggregator.f");
      }
      const int m = krum_m == 0 ? n - krum_f : krum_m;
      if (m < 1 || m > n - krum_f) {
        throw ConfigError("m must lie in [1, n - f]", "aggregator.m");
      }
      break;
    }
    case AggregatorKind::kKNorm:
      if (norm_k < 0 || norm_k >= n) {
        throw ConfigError("k must be smaller than the report count", "aggregator.k");
      }
      break;
  }
}

ParamVector mean_of(std::span<const ClientReport> reports) {
  return mean_of(canonical(reports));
}

ParamVector agg_median(std::span<const ClientReport> reports) {
  return coordinate_wise(reports, [](const std::vector<double>& col) {
    const std::size_t mid = col.size() / 2;
    return col.size() % 2 == 1 ? col[mid] : 0.5 * (col[mid - 1] + col[mid]);
  });
}

ParamVector agg_trimmed_mean(std::span<const ClientReport> reports, int trim_k) {
  if (trim_k < 0 || reports.size() <= 2 * static_cast<std::size_t>(trim_k)) {
    throw ConfigError("infeasible trim_k " + std::to_string(trim_k) + " for " +
                          std::to_string(reports.size()) + " reports",
                      "aggregator.trim_k");
  }
  const auto k = static_cast<std::size_t>(trim_k);
  return coordinate_wise(reports, [k](const std::vector<double>& col) {
    double sum = 0.0;
    for (std::size_t i = k; i < col.size() - k; ++i) sum += col[i];
    return sum / static_cast<double>(col.size() - 2 * k);
  });
}

std::vector<double> krum_scores(std::span<const ClientReport> reports, int f) {
  const auto sorted = canonical(reports);
  const int n = static_cast<int>(sorted.size());
  if (f < 0 || n < 2 * f + 3) {
    throw ConfigError("multi-Krum needs at least 2f+3 reports", "aggregator.f");
  }
  const auto neighbours = static_cast<std::size_t>(n - f - 2);
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      dist[i][j] = dist[j][i] =
          squared_distance(sorted[i]->updated_params, sorted[j]->updated_params);
    }
  }
  std::vector<double> scores(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> d;
    for (int j = 0; j < n; ++j) {
      if (j != i) d.push_back(dist[i][j]);
    }
    std::sort(d.begin(), d.end());
    scores[i] = std::accumulate(d.begin(), d.begin() + static_cast<long>(neighbours), 0.0);
  }
  return scores;
}

std::vector<int> multi_krum_selection(std::span<const ClientReport> reports,
                                      int f, int m) {
  const auto sorted = canonical(reports);
  const int n = static_cast<int>(sorted.size());
  if (m == 0) m = n - f;
  if (m < 1 || m > n - f) throw ConfigError("m must lie in [1, n - f]", "aggregator.m");
  const std::vector<double> scores = krum_scores(reports, f);
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // `sorted` is in id order, so a stable sort breaks ties by lower id.
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return scores[a] < scores[b]; });
  std::vector<int> ids;
  for (int k = 0; k < m; ++k) ids.push_back(sorted[idx[k]]->client_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

ParamVector agg_multi_krum(std::span<const ClientReport> reports, int f, int m) {
  const std::vector<int> ids = multi_krum_selection(reports, f, m);
  std::vector<const ClientReport*> chosen;
  for (const ClientReport* r : canonical(reports)) {
    if (std::binary_search(ids.begin(), ids.end(), r->client_id)) chosen.push_back(r);
  }
  return mean_of(chosen);
}

ParamVector agg_k_norm(std::span<const ClientReport> reports,
                       const ParamVector& reference, int k) {
  const auto sorted = canonical(reports);
  const int n = static_cast<int>(sorted.size());
  if (k < 0 || k >= n) {
    throw ConfigError("k must be smaller than the report count", "aggregator.k");
  }
  std::vector<double> norms(n);
  for (int i = 0; i < n; ++i) {
    norms[i] = squared_distance(sorted[i]->updated_params, reference);
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Largest norm first; among equal norms the higher id goes first.
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (norms[a] != norms[b]) return norms[a] > norms[b];
    return a > b;
  });
  std::vector<int> keep(idx.begin() + k, idx.end());
  std::sort(keep.begin(), keep.end());
  std::vector<const ClientReport*> chosen;
  for (int i : keep) chosen.push_back(sorted[i]);
  return mean_of(chosen);
}

}  // namespace nflsim
