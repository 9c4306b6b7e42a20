#include "nflsim/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "nflsim/errors.hpp"

namespace nflsim {

namespace {

// Rounds non-negative real shares to integers summing to `total`, giving the
// leftover units to the largest fractional parts (ties to the lower index).
std::vector<std::size_t> largest_remainder(const std::vector<double>& shares,
                                           std::size_t total) {
  const double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
  std::vector<std::size_t> out(shares.size(), 0);
  if (shares.empty() || total == 0) return out;
  std::vector<double> frac(shares.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const double exact = sum > 0.0 ? shares[i] / sum * static_cast<double>(total)
                                   : static_cast<double>(total) /
                                         static_cast<double>(shares.size());
    out[i] = static_cast<std::size_t>(std::floor(exact));
    frac[i] = exact - std::floor(exact);
    assigned += out[i];
  }
  std::vector<std::size_t> idx(shares.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % idx.size()) {
    ++out[idx[k]];
    ++assigned;
  }
  return out;
}

ClientData split_client(const LabeledDataset& data,
                        std::vector<std::size_t> rows, double train_fraction,
                        Rng& rng) {
  std::shuffle(rows.begin(), rows.end(), rng);
  const int classes = data.class_count;
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t r : rows) by_class[data.examples.labels[r]].push_back(r);

  // Test examples only come from classes with at least two examples so every
  // class on the client keeps a training example.
  std::vector<double> shares(classes, 0.0);
  std::size_t capacity = 0;
  for (int c = 0; c < classes; ++c) {
    if (by_class[c].size() >= 2) {
      shares[c] = static_cast<double>(by_class[c].size());
      capacity += by_class[c].size() - 1;
    }
  }
  const auto wanted = static_cast<std::size_t>(std::max<long>(
      1, std::lround(static_cast<double>(rows.size()) * (1.0 - train_fraction))));
  std::size_t test_total = std::min(wanted, capacity);

  std::vector<std::size_t> test_count = largest_remainder(shares, test_total);
  // Cap at size-1 per class and push any overflow to classes with room.
  std::size_t overflow = 0;
  for (int c = 0; c < classes; ++c) {
    const std::size_t cap = by_class[c].size() >= 2 ? by_class[c].size() - 1 : 0;
    if (test_count[c] > cap) {
      overflow += test_count[c] - cap;
      test_count[c] = cap;
    }
  }
  for (int c = 0; c < classes && overflow > 0; ++c) {
    const std::size_t cap = by_class[c].size() >= 2 ? by_class[c].size() - 1 : 0;
    const std::size_t add = std::min(overflow, cap - test_count[c]);
    test_count[c] += add;
    overflow -= add;
  }

  std::vector<std::size_t> train_rows, test_rows;
  std::vector<int> present;
  for (int c = 0; c < classes; ++c) {
    if (by_class[c].empty()) continue;
    present.push_back(c);
    const auto& v = by_class[c];
    test_rows.insert(test_rows.end(), v.begin(), v.begin() + test_count[c]);
    train_rows.insert(train_rows.end(), v.begin() + test_count[c], v.end());
  }
  // Singleton-class clients (e.g. two classes with one example each) still
  // need a test example.
  if (test_rows.empty() && train_rows.size() >= 2) {
    test_rows.push_back(train_rows.back());
    train_rows.pop_back();
  }
  std::shuffle(train_rows.begin(), train_rows.end(), rng);
  std::shuffle(test_rows.begin(), test_rows.end(), rng);

  ClientData out;
  out.train = take_rows(data.examples, train_rows);
  out.test = take_rows(data.examples, test_rows);
  out.classes = std::move(present);
  return out;
}

std::vector<ClientData> partition_iid(const LabeledDataset& data, int n,
                                      const PartitionPlan& plan, Rng& rng) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.examples.labels[a] < data.examples.labels[b];
  });
  // Dealing label-sorted rows round-robin gives equal sizes (within one) and
  // near-equal class counts on every client.
  std::vector<std::vector<std::size_t>> rows(n);
  for (std::size_t k = 0; k < order.size(); ++k) {
    rows[k % static_cast<std::size_t>(n)].push_back(order[k]);
  }
  std::vector<ClientData> out;
  for (int i = 0; i < n; ++i) {
    if (rows[i].size() < static_cast<std::size_t>(plan.min_client_size)) {
      throw PartitionError("client " + std::to_string(i) + " would receive only " +
                           std::to_string(rows[i].size()) + " examples");
    }
    out.push_back(split_client(data, std::move(rows[i]), plan.train_fraction, rng));
  }
  return out;
}

std::vector<ClientData> partition_mixed(const LabeledDataset& data, int n,
                                        const PartitionPlan& plan, Rng& rng) {
  const int classes = data.class_count;
  const std::array<int, 3> groups = group_sizes(n, plan.group_fractions);
  std::vector<int> group_of;
  for (int g = 0; g < 3; ++g) group_of.insert(group_of.end(), groups[g], g);
  std::shuffle(group_of.begin(), group_of.end(), rng);

  const int half = std::max(1, classes / 2);
  const int two = std::min(2, classes);
  std::vector<std::vector<int>> client_classes(n);
  std::vector<int> all(classes);
  std::iota(all.begin(), all.end(), 0);
  for (int i = 0; i < n; ++i) {
    if (group_of[i] == 0) {
      client_classes[i] = all;
      continue;
    }
    std::vector<int> pick = all;
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(group_of[i] == 1 ? half : two);
    std::sort(pick.begin(), pick.end());
    client_classes[i] = std::move(pick);
  }

  std::lognormal_distribution<double> size_law(plan.lognormal_mu,
                                               plan.lognormal_sigma);
  std::vector<double> weight(n);
  for (double& w : weight) w = size_law(rng);

  // Label-sorted pools.
  std::vector<std::vector<std::size_t>> pool(classes);
  {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t r : order) pool[data.examples.labels[r]].push_back(r);
  }

  // count[i][c]: examples of class c given to client i. Every holder gets one
  // example of each of its classes first; the rest is split in proportion to
  // the client's size weight spread over its classes.
  std::vector<std::vector<std::size_t>> count(n, std::vector<std::size_t>(classes, 0));
  for (int c = 0; c < classes; ++c) {
    std::vector<int> holders;
    for (int i = 0; i < n; ++i) {
      if (std::binary_search(client_classes[i].begin(), client_classes[i].end(), c)) {
        holders.push_back(i);
      }
    }
    if (holders.empty()) {
      if (!pool[c].empty()) {
        throw PartitionError("class " + std::to_string(c) +
                             " is assigned to no client");
      }
      continue;
    }
    if (pool[c].size() < holders.size()) {
      throw PartitionError("client " + std::to_string(holders[pool[c].size()]) +
                           " cannot receive an example of class " +
                           std::to_string(c) + ": class exhausted");
    }
    std::vector<double> shares;
    for (int i : holders) {
      shares.push_back(weight[i] / static_cast<double>(client_classes[i].size()));
    }
    const auto extra = largest_remainder(shares, pool[c].size() - holders.size());
    for (std::size_t h = 0; h < holders.size(); ++h) {
      count[holders[h]][c] = 1 + extra[h];
    }
  }

  auto total_of = [&](int i) {
    return std::accumulate(count[i].begin(), count[i].end(), std::size_t{0});
  };
  const auto min_size = static_cast<std::size_t>(plan.min_client_size);
  for (int i = 0; i < n; ++i) {
    while (total_of(i) < min_size) {
      // Borrow one example of one of this client's classes from the largest
      // holder that can spare it.
      int donor = -1;
      int donor_class = -1;
      for (int c : client_classes[i]) {
        for (int j = 0; j < n; ++j) {
          if (j == i || count[j][c] < 2 || total_of(j) <= min_size) continue;
          if (donor < 0 || count[j][c] > count[donor][donor_class]) {
            donor = j;
            donor_class = c;
          }
        }
      }
      if (donor < 0) {
        throw PartitionError("client " + std::to_string(i) +
                             " cannot reach the minimum size of " +
                             std::to_string(min_size));
      }
      --count[donor][donor_class];
      ++count[i][donor_class];
    }
  }

  std::vector<std::vector<std::size_t>> rows(n);
  for (int c = 0; c < classes; ++c) {
    std::size_t next = 0;
    for (int i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < count[i][c]; ++k) rows[i].push_back(pool[c][next++]);
    }
  }
  std::vector<ClientData> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(split_client(data, std::move(rows[i]), plan.train_fraction, rng));
  }
  return out;
}

}  // namespace

std::vector<std::size_t> LabeledDataset::label_histogram() const {
  std::vector<std::size_t> h(static_cast<std::size_t>(class_count), 0);
  for (int y : examples.labels) ++h[static_cast<std::size_t>(y)];
  return h;
}

std::string to_string(PartitionScheme s) {
  return s == PartitionScheme::kIid ? "iid" : "noniid_mixed";
}

PartitionScheme partition_scheme_from_string(const std::string& s) {
  if (s == "iid") return PartitionScheme::kIid;
  if (s == "noniid_mixed") return PartitionScheme::kNonIidMixed;
  throw ConfigError("unknown partition scheme '" + s + "'");
}

void PartitionPlan::validate() const {
  double sum = 0.0;
  for (double f : group_fractions) {
    if (f < 0.0) throw ConfigError("group fractions must be non-negative", "partition.group_fractions");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("group fractions must sum to 1", "partition.group_fractions");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("must lie in (0, 1)", "partition.train_fraction");
  }
  if (!(lognormal_sigma >= 0.0)) {
    throw ConfigError("must be non-negative", "partition.lognormal_sigma");
  }
  if (min_client_size < 2) {
    throw ConfigError("must be at least 2", "partition.min_client_size");
  }
}

std::array<int, 3> group_sizes(int client_count,
                               const std::array<double, 3>& fractions) {
  const auto sizes = largest_remainder({fractions[0], fractions[1], fractions[2]},
                                       static_cast<std::size_t>(client_count));
  return {static_cast<int>(sizes[0]), static_cast<int>(sizes[1]),
          static_cast<int>(sizes[2])};
}

LabeledDataset gen_synthetic(int class_count, int dim, int per_class,
                             double spread, std::uint64_t seed,
                             double separation) {
  if (class_count < 2) throw ConfigError("need at least two classes", "data.classes");
  if (per_class < 1) throw ConfigError("must be positive", "data.per_class");
  if (dim < 1) throw ConfigError("must be positive", "data.dim");
  Rng rng = make_rng(seed, Stream::kData);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd means(class_count, dim);
  for (int c = 0; c < class_count; ++c) {
    for (int d = 0; d < dim; ++d) means(c, d) = normal(rng);
    means.row(c) *= separation / means.row(c).norm();
  }

  LabeledDataset out;
  out.class_count = class_count;
  const Eigen::Index rows = static_cast<Eigen::Index>(class_count) * per_class;
  out.examples.features.resize(rows, dim);
  out.examples.labels.reserve(static_cast<std::size_t>(rows));
  Eigen::Index r = 0;
  for (int c = 0; c < class_count; ++c) {
    for (int k = 0; k < per_class; ++k, ++r) {
      for (int d = 0; d < dim; ++d) {
        out.examples.features(r, d) = means(c, d) + spread * normal(rng);
      }
      out.examples.labels.push_back(c);
    }
  }
  return out;
}

std::vector<ClientData> partition(const LabeledDataset& data, int client_count,
                                  const PartitionPlan& plan,
                                  std::uint64_t seed) {
  plan.validate();
  if (client_count < 1) throw ConfigError("must be at least 1", "N");
  if (data.size() < 2 * static_cast<std::size_t>(client_count)) {
    throw PartitionError("dataset of " + std::to_string(data.size()) +
                         " examples is too small for " +
                         std::to_string(client_count) + " clients");
  }
  Rng rng = make_rng(seed, Stream::kPartition);
  return plan.scheme == PartitionScheme::kIid
             ? partition_iid(data, client_count, plan, rng)
             : partition_mixed(data, client_count, plan, rng);
}

LabeledDataset load_delimited(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file '" + path + "'", "data.path");
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, delimiter)) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line_no) + ": bad value '" +
                              cell + "'",
                          "data.path");
      }
    }
    if (values.size() < 2) {
      throw ConfigError("line " + std::to_string(line_no) +
                            ": need at least one feature and a label",
                        "data.path");
    }
    const double label = values.back();
    if (label < 0 || label != std::floor(label)) {
      throw ConfigError("line " + std::to_string(line_no) +
                            ": label must be a non-negative integer",
                        "data.path");
    }
    values.pop_back();
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw ConfigError("line " + std::to_string(line_no) + ": ragged row", "data.path");
    }
    rows.push_back(std::move(values));
    labels.push_back(static_cast<int>(label));
  }
  if (rows.empty()) throw ConfigError("dataset file is empty", "data.path");
  LabeledDataset out;
  out.examples.features.resize(static_cast<Eigen::Index>(rows.size()),
                               static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out.examples.features(static_cast<Eigen::Index>(i),
                            static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  out.examples.labels = std::move(labels);
  out.class_count = *std::max_element(out.examples.labels.begin(),
                                      out.examples.labels.end()) + 1;
  return out;
}

}  // namespace nflsim
