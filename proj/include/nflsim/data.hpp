#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nflsim/model.hpp"

namespace nflsim {

struct LabeledDataset {
  Batch examples;
  int class_count = 0;

  std::size_t size() const { return examples.size(); }
  std::vector<std::size_t> label_histogram() const;
};

enum class PartitionScheme { kIid, kNonIidMixed };

std::string to_string(PartitionScheme s);
PartitionScheme partition_scheme_from_string(const std::string& s);

struct PartitionPlan {
  PartitionScheme scheme = PartitionScheme::kIid;
  // Client-group shares for (all classes, half the classes, two classes).
  std::array<double, 3> group_fractions{0.5, 0.3, 0.2};
  double lognormal_mu = 0.0;
  double lognormal_sigma = 2.0;
  double train_fraction = 0.9;
  // Floor on examples per client (at least one train and one test example).
  int min_client_size = 2;

  void validate() const;
};

struct ClientData {
  Batch train;
  Batch test;
  std::vector<int> classes;  // sorted distinct labels held by the client
};

// Gaussian blobs: one unit-sphere mean per class scaled by `separation`,
// isotropic noise of scale `spread`.
LabeledDataset gen_synthetic(int class_count, int dim, int per_class,
                             double spread, std::uint64_t seed,
                             double separation = 1.0);

// Splits `data` across `client_count` clients and then each client's share
// into train/test.
std::vector<ClientData> partition(const LabeledDataset& data, int client_count,
                                  const PartitionPlan& plan,
                                  std::uint64_t seed);

// Number of clients in each of the three non-IID groups.
std::array<int, 3> group_sizes(int client_count,
                               const std::array<double, 3>& fractions);

// Dense delimited text, one example per line, integer label in the last
// column. Blank lines and lines starting with '#' are skipped.
LabeledDataset load_delimited(const std::string& path, char delimiter = ',');

}  // namespace nflsim
