#pragma once

// Straightforward reference implementations used to check the library.
// They work on plain std::vector<double> and favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "nflsim/model.hpp"
#include "nflsim/report.hpp"

namespace nflsim::oracle {

using Vec = std::vector<double>;

inline Vec as_vec(const ParamVector& p) { return {p.values().begin(), p.values().end()}; }

inline std::vector<std::pair<int, Vec>> sorted_by_id(std::span<const ClientReport> reports) {
  std::vector<std::pair<int, Vec>> out;
  for (const ClientReport& r : reports) out.emplace_back(r.client_id, as_vec(r.updated_params));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

inline Vec column(const std::vector<std::pair<int, Vec>>& rows, std::size_t j) {
  Vec col;
  for (const auto& [id, v] : rows) col.push_back(v[j]);
  return col;
}

inline Vec median(std::span<const ClientReport> reports) {
  const auto rows = sorted_by_id(reports);
  Vec out(rows.front().second.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    Vec col = column(rows, j);
    std::sort(col.begin(), col.end());
    const std::size_t n = col.size();
    out[j] = n % 2 == 1 ? col[n / 2] : (col[n / 2 - 1] + col[n / 2]) / 2.0;
  }
  return out;
}

inline Vec trimmed_mean(std::span<const ClientReport> reports, int k) {
  const auto rows = sorted_by_id(reports);
  Vec out(rows.front().second.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    Vec col = column(rows, j);
    std::sort(col.begin(), col.end());
    double sum = 0.0;
    for (std::size_t i = k; i + k < col.size(); ++i) sum += col[i];
    out[j] = sum / static_cast<double>(col.size() - 2 * k);
  }
  return out;
}

inline double sq_dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline Vec mean_rows(const std::vector<Vec>& rows) {
  Vec out(rows.front().size(), 0.0);
  for (const Vec& r : rows) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += r[j];
  }
  for (double& x : out) x /= static_cast<double>(rows.size());
  return out;
}

// Returns the selected ids (ascending) and their mean.
inline std::pair<std::vector<int>, Vec> multi_krum(std::span<const ClientReport> reports,
                                                   int f, int m) {
  const auto rows = sorted_by_id(reports);
  const int n = static_cast<int>(rows.size());
  if (m == 0) m = n - f;
  std::vector<std::pair<double, int>> scored;  // (score, id)
  for (int i = 0; i < n; ++i) {
    Vec d;
    for (int j = 0; j < n; ++j) {
      if (j != i) d.push_back(sq_dist(rows[i].second, rows[j].second));
    }
    std::sort(d.begin(), d.end());
    scored.emplace_back(std::accumulate(d.begin(), d.begin() + (n - f - 2), 0.0),
                        rows[i].first);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<int> ids;
  for (int i = 0; i < m; ++i) ids.push_back(scored[i].second);
  std::sort(ids.begin(), ids.end());
  std::vector<Vec> picked;
  for (const auto& [id, v] : rows) {
    if (std::find(ids.begin(), ids.end(), id) != ids.end()) picked.push_back(v);
  }
  return {ids, mean_rows(picked)};
}

inline Vec k_norm(std::span<const ClientReport> reports, const ParamVector& reference,
                  int k) {
  const auto rows = sorted_by_id(reports);
  const Vec ref = as_vec(reference);
  std::vector<std::pair<double, int>> norms;  // (norm, id)
  for (const auto& [id, v] : rows) norms.emplace_back(std::sqrt(sq_dist(v, ref)), id);
  // Largest norm first; equal norms drop the higher id first.
  std::sort(norms.begin(), norms.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second > b.second;
  });
  std::vector<int> dropped;
  for (int i = 0; i < k; ++i) dropped.push_back(norms[i].second);
  std::vector<Vec> kept;
  for (const auto& [id, v] : rows) {
    if (std::find(dropped.begin(), dropped.end(), id) == dropped.end()) kept.push_back(v);
  }
  return mean_rows(kept);
}

inline double max_abs_diff(const Vec& a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Central finite-difference gradient of f at p.
template <typename F>
Vec fd_gradient(F&& f, const ParamVector& p, double h = 1e-5) {
  Vec g(p.size());
  ParamVector q = p;
  for (std::size_t i = 0; i < p.size(); ++i) {
    q[i] = p[i] + h;
    const double up = f(q);
    q[i] = p[i] - h;
    const double down = f(q);
    q[i] = p[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Vec& expected, std::span<const double> actual) {
  double diff = 0.0, ne = 0.0, na = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    diff += (expected[i] - actual[i]) * (expected[i] - actual[i]);
    ne += expected[i] * expected[i];
    na += actual[i] * actual[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(ne), std::sqrt(na), 1e-8});
}

// Random small problem: a model spec, parameters and a labelled batch.
struct Instance {
  ModelSpec spec;
  ParamVector params;
  Batch batch;
};

inline Instance random_instance(std::mt19937_64& rng, double param_scale = 0.5) {
  std::uniform_int_distribution<int> dim(2, 5), classes(2, 4), hidden(0, 1),
      width(2, 6), rows(1, 6);
  Instance inst;
  inst.spec.layer_sizes.push_back(dim(rng));
  if (hidden(rng) == 1) inst.spec.layer_sizes.push_back(width(rng));
  inst.spec.layer_sizes.push_back(classes(rng));
  inst.spec.activation = hidden(rng) == 1 ? Activation::kRelu : Activation::kIdentity;
  std::normal_distribution<double> normal(0.0, param_scale);
  inst.params = ParamVector(Layout::for_model(inst.spec));
  for (double& v : inst.params.values()) v = normal(rng);
  const int n = rows(rng);
  inst.batch.features = Eigen::MatrixXd(n, inst.spec.input_dim());
  std::normal_distribution<double> feature(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < inst.spec.input_dim(); ++j) inst.batch.features(i, j) = feature(rng);
  }
  std::uniform_int_distribution<int> label(0, inst.spec.class_count() - 1);
  for (int i = 0; i < n; ++i) inst.batch.labels.push_back(label(rng));
  return inst;
}

inline ParamVector perturbed(const ParamVector& p, std::mt19937_64& rng, double scale) {
  ParamVector out = p;
  std::normal_distribution<double> normal(0.0, scale);
  for (double& v : out.values()) v += normal(rng);
  return out;
}

// Reports with random parameters over a flat layout of `dim` values.
inline std::vector<ClientReport> random_reports(std::mt19937_64& rng, int n, int dim,
                                                bool with_ties = false) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ClientReport> out;
  for (int i = 0; i < n; ++i) {
    Vec v(dim);
    for (double& x : v) x = with_ties ? std::round(normal(rng)) : normal(rng);
    out.push_back({ids[i] * 3 + 1, ParamVector::flat(v), 0.0, 1});
  }
  return out;
}

}  // namespace nflsim::oracle
