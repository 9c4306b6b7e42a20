#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <gtest/gtest.h>

#include "nflsim/data.hpp"
#include "nflsim/errors.hpp"

namespace nflsim {
namespace {

// Multiset of (label, first feature) pairs; the synthetic features are
// continuous, so this identifies rows.
std::multiset<std::pair<int, double>> row_keys(const Batch& b) {
  std::multiset<std::pair<int, double>> out;
  for (std::size_t r = 0; r < b.size(); ++r) out.emplace(b.labels[r], b.features(r, 0));
  return out;
}

std::multiset<std::pair<int, double>> client_keys(const std::vector<ClientData>& parts) {
  std::multiset<std::pair<int, double>> out;
  for (const ClientData& c : parts) {
    auto a = row_keys(c.train);
    auto b = row_keys(c.test);
    out.insert(a.begin(), a.end());
    out.insert(b.begin(), b.end());
  }
  return out;
}

PartitionPlan mixed_plan() {
  PartitionPlan plan;
  plan.scheme = PartitionScheme::kNonIidMixed;
  plan.min_client_size = 10;
  return plan;
}

TEST(GenSyntheticTest, ExactClassCounts) {
  const LabeledDataset d = gen_synthetic(4, 3, 100, 1.0, 9);
  EXPECT_EQ(d.size(), 400u);
  for (std::size_t count : d.label_histogram()) EXPECT_EQ(count, 100u);
}

TEST(GenSyntheticTest, SameSeedSameData) {
  const LabeledDataset a = gen_synthetic(3, 5, 20, 0.5, 4);
  const LabeledDataset b = gen_synthetic(3, 5, 20, 0.5, 4);
  EXPECT_EQ(a.examples.features, b.examples.features);
  EXPECT_EQ(a.examples.labels, b.examples.labels);
  const LabeledDataset c = gen_synthetic(3, 5, 20, 0.5, 5);
  EXPECT_NE(a.examples.features, c.examples.features);
}

TEST(GenSyntheticTest, ZeroSpreadCollapsesEachClassToItsMean) {
  const LabeledDataset d = gen_synthetic(5, 4, 10, 0.0, 2, 3.0);
  // Every example equals its class mean, and the means are distinct points
  // on a sphere of radius 3, so nearest-mean classification is perfect.
  std::map<int, Eigen::RowVectorXd> mean;
  for (std::size_t r = 0; r < d.size(); ++r) {
    const int y = d.examples.labels[r];
    if (!mean.count(y)) mean[y] = d.examples.features.row(r);
    EXPECT_EQ(d.examples.features.row(r), mean[y]);
  }
  for (const auto& [y, m] : mean) EXPECT_NEAR(m.norm(), 3.0, 1e-12);
  for (std::size_t r = 0; r < d.size(); ++r) {
    int best = -1;
    double best_dist = 1e300;
    for (const auto& [y, m] : mean) {
      const double dist = (d.examples.features.row(r) - m).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = y;
      }
    }
    EXPECT_EQ(best, d.examples.labels[r]);
  }
}

TEST(PartitionTest, IidSingleClientGetsEverything) {
  const LabeledDataset d = gen_synthetic(3, 2, 30, 1.0, 1);
  const auto parts = partition(d, 1, PartitionPlan{}, 7);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(client_keys(parts), row_keys(d.examples));
  EXPECT_EQ(parts[0].classes, (std::vector<int>{0, 1, 2}));
}

TEST(PartitionTest, IidConservesExamplesAndBalancesSizes) {
  const LabeledDataset d = gen_synthetic(10, 3, 53, 1.0, 3);
  const auto parts = partition(d, 7, PartitionPlan{}, 3);
  EXPECT_EQ(client_keys(parts), row_keys(d.examples));
  std::size_t lo = SIZE_MAX, hi = 0;
  for (const ClientData& c : parts) {
    const std::size_t n = c.train.size() + c.test.size();
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  EXPECT_LE(hi - lo, 1u);
}

TEST(PartitionTest, MixedGroupsHaveTheRightClassCounts) {
  const LabeledDataset d = gen_synthetic(10, 3, 100, 1.0, 5);
  const auto parts = partition(d, 10, mixed_plan(), 5);
  std::map<std::size_t, int> by_class_count;
  for (const ClientData& c : parts) ++by_class_count[c.classes.size()];
  EXPECT_EQ(by_class_count[10], 5);
  EXPECT_EQ(by_class_count[5], 3);
  EXPECT_EQ(by_class_count[2], 2);
}

TEST(PartitionTest, MixedConservesExamples) {
  const LabeledDataset d = gen_synthetic(10, 3, 200, 1.0, 6);
  const auto parts = partition(d, 50, mixed_plan(), 6);
  EXPECT_EQ(client_keys(parts), row_keys(d.examples));
  for (const ClientData& c : parts) {
    EXPECT_GE(c.train.size() + c.test.size(), 10u);
    EXPECT_GE(c.train.size(), 1u);
    EXPECT_GE(c.test.size(), 1u);
    // Labels stay inside the client's class set.
    for (int y : c.train.labels) {
      EXPECT_TRUE(std::binary_search(c.classes.begin(), c.classes.end(), y));
    }
  }
}

TEST(PartitionTest, MixedSizesAreHeavyTailed) {
  const LabeledDataset d = gen_synthetic(10, 2, 1000, 1.0, 8);
  PartitionPlan plan = mixed_plan();
  const auto parts = partition(d, 50, plan, 8);
  std::vector<double> sizes;
  for (const ClientData& c : parts) {
    sizes.push_back(static_cast<double>(c.train.size() + c.test.size()));
  }
  double mean = 0.0;
  for (double s : sizes) mean += s;
  mean /= sizes.size();
  double var = 0.0;
  for (double s : sizes) var += (s - mean) * (s - mean);
  const double cv = std::sqrt(var / sizes.size()) / mean;
  // A lognormal with sigma 2 has a coefficient of variation far above 1;
  // equal sizes would give 0.
  EXPECT_GT(cv, 1.0);
}

TEST(PartitionTest, DeterministicInSeed) {
  const LabeledDataset d = gen_synthetic(10, 3, 100, 1.0, 2);
  const auto a = partition(d, 20, mixed_plan(), 11);
  const auto b = partition(d, 20, mixed_plan(), 11);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].train.labels, b[i].train.labels);
    EXPECT_EQ(a[i].train.features, b[i].train.features);
    EXPECT_EQ(a[i].test.features, b[i].test.features);
  }
}

TEST(PartitionTest, TrainFractionIsRespected) {
  const LabeledDataset d = gen_synthetic(4, 2, 50, 1.0, 2);
  const auto parts = partition(d, 4, PartitionPlan{}, 2);
  for (const ClientData& c : parts) {
    const double n = static_cast<double>(c.train.size() + c.test.size());
    EXPECT_EQ(c.test.size(), static_cast<std::size_t>(std::lround(n * 0.1)));
  }
}

TEST(PartitionTest, TooSmallDatasetNamesTheClient) {
  const LabeledDataset d = gen_synthetic(10, 2, 5, 1.0, 2);
  PartitionPlan plan = mixed_plan();
  plan.min_client_size = 20;
  try {
    partition(d, 10, plan, 1);
    FAIL() << "expected PartitionError";
  } catch (const PartitionError& e) {
    EXPECT_NE(std::string(e.what()).find("client"), std::string::npos);
  }
}

TEST(GroupSizesTest, ScaledFiftyThirtyTwentySplit) {
  EXPECT_EQ(group_sizes(10, {0.5, 0.3, 0.2}), (std::array<int, 3>{5, 3, 2}));
  EXPECT_EQ(group_sizes(50, {0.5, 0.3, 0.2}), (std::array<int, 3>{25, 15, 10}));
  const auto odd = group_sizes(7, {0.5, 0.3, 0.2});
  EXPECT_EQ(odd[0] + odd[1] + odd[2], 7);
}

TEST(PartitionPlanTest, RejectsBadFractions) {
  PartitionPlan plan;
  plan.group_fractions = {0.5, 0.5, 0.5};
  EXPECT_THROW(plan.validate(), ConfigError);
  plan = PartitionPlan{};
  plan.train_fraction = 1.0;
  EXPECT_THROW(plan.validate(), ConfigError);
}

TEST(LoadDelimitedTest, ReadsLabelsFromLastColumn) {
  const auto path = std::filesystem::temp_directory_path() / "nflsim_data_test.csv";
  {
    std::ofstream out(path);
    out << "# x0,x1,label\n0.5,1.5,0\n\n-1,2,2\n3,4,1\n";
  }
  const LabeledDataset d = load_delimited(path.string(), ',');
  std::filesystem::remove(path);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.class_count, 3);
  EXPECT_EQ(d.examples.labels, (std::vector<int>{0, 2, 1}));
  EXPECT_DOUBLE_EQ(d.examples.features(1, 0), -1.0);
}

TEST(LoadDelimitedTest, RaggedRowsAreRejected) {
  const auto path = std::filesystem::temp_directory_path() / "nflsim_data_bad.csv";
  {
    std::ofstream out(path);
    out << "1,2,0\n1,1\n";
  }
  EXPECT_THROW(load_delimited(path.string(), ','), ConfigError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace nflsim
