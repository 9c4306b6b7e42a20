#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "nflsim/errors.hpp"
#include "nflsim/robust_aggregation.hpp"
#include "oracles.hpp"

namespace nflsim {
namespace {

std::vector<ClientReport> reports_of(std::vector<std::vector<double>> rows) {
  std::vector<ClientReport> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back({static_cast<int>(i), ParamVector::flat(rows[i]), 0.0, 1});
  }
  return out;
}

std::vector<double> values(const ParamVector& p) { return oracle::as_vec(p); }

TEST(MedianTest, PerCoordinate) {
  const auto r = reports_of({{0, 0}, {1, 10}, {2, -10}});
  EXPECT_EQ(values(agg_median(r)), (std::vector<double>{1, 0}));
  const auto single = reports_of({{3, -4}});
  EXPECT_EQ(values(agg_median(single)), (std::vector<double>{3, -4}));
}

TEST(MedianTest, PermutationInvariant) {
  std::mt19937_64 rng(61);
  auto r = oracle::random_reports(rng, 6, 5);
  const auto before = values(agg_median(r));
  std::shuffle(r.begin(), r.end(), rng);
  EXPECT_EQ(values(agg_median(r)), before);
}

TEST(TrimmedMeanTest, DropsExtremes) {
  const auto r = reports_of({{-100}, {1}, {2}, {3}, {100}});
  EXPECT_DOUBLE_EQ(values(agg_trimmed_mean(r, 1))[0], 2.0);
  EXPECT_DOUBLE_EQ(values(agg_trimmed_mean(r, 0))[0], 6.0 / 5.0);
}

TEST(TrimmedMeanTest, InfeasibleTrimThrows) {
  const auto r = reports_of({{1}, {2}, {3}, {4}});
  EXPECT_THROW(agg_trimmed_mean(r, 2), ConfigError);
}

TEST(TrimmedMeanTest, MatchesSortAndSliceOracle) {
  std::mt19937_64 rng(62);
  for (int t = 0; t < 100; ++t) {
    const auto r = oracle::random_reports(rng, 5, 7, t % 3 == 0);
    for (int k : {0, 1, 2}) {
      EXPECT_LE(oracle::max_abs_diff(oracle::trimmed_mean(r, k),
                                     agg_trimmed_mean(r, k).values()),
                1e-10);
    }
  }
}

TEST(MedianTest, MatchesSortOracle) {
  std::mt19937_64 rng(63);
  for (int t = 0; t < 100; ++t) {
    const auto r = oracle::random_reports(rng, 2 + t % 9, 4, t % 2 == 0);
    EXPECT_LE(oracle::max_abs_diff(oracle::median(r), agg_median(r).values()), 1e-10);
  }
}

TEST(MultiKrumTest, IdenticalReportsReturnThatVector) {
  const auto r = reports_of({{1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}});
  EXPECT_EQ(values(agg_multi_krum(r, 1, 0)), (std::vector<double>{1, 2}));
}

TEST(MultiKrumTest, ExcludesFarOutlier) {
  const auto r = reports_of({{0.0, 0.1}, {0.1, 0.0}, {-0.1, 0.0}, {0.0, -0.1}, {50.0, 50.0}});
  const auto selected = multi_krum_selection(r, 1, 0);
  EXPECT_EQ(selected, (std::vector<int>{0, 1, 2, 3}));
  const auto mean = values(agg_multi_krum(r, 1, 0));
  EXPECT_NEAR(mean[0], 0.0, 1e-15);
  EXPECT_NEAR(mean[1], 0.0, 1e-15);
}

TEST(MultiKrumTest, ScoresSumNearestSquaredDistances) {
  // On a line at 0, 1, 3, 7, 15 with f = 1 each score sums the two nearest
  // squared distances.
  const auto r = reports_of({{0}, {1}, {3}, {7}, {15}});
  const auto s = krum_scores(r, 1);
  EXPECT_EQ(s, (std::vector<double>{1 + 9, 1 + 4, 4 + 9, 16 + 36, 64 + 144}));
  EXPECT_EQ(multi_krum_selection(r, 1, 2), (std::vector<int>{0, 1}));
}

TEST(MultiKrumTest, TiesGoToLowerId) {
  // Symmetric layout: clients 0 and 4 tie, as do 1 and 3.
  const auto r = reports_of({{-2}, {-1}, {0}, {1}, {2}});
  EXPECT_EQ(multi_krum_selection(r, 1, 2), (std::vector<int>{1, 2}));
  EXPECT_EQ(multi_krum_selection(r, 1, 4), (std::vector<int>{0, 1, 2, 3}));
}

TEST(MultiKrumTest, MatchesBruteForceOracle) {
  std::mt19937_64 rng(64);
  for (int t = 0; t < 100; ++t) {
    const int n = 5 + t % 6;
    const int f = 1 + t % std::max(1, (n - 3) / 2);
    const int m = t % 2 == 0 ? 0 : 1 + t % (n - f);
    const auto r = oracle::random_reports(rng, n, 3, t % 4 == 0);
    const auto expected = oracle::multi_krum(r, f, m);
    EXPECT_EQ(multi_krum_selection(r, f, m), expected.first);
    EXPECT_LE(oracle::max_abs_diff(expected.second, agg_multi_krum(r, f, m).values()), 1e-10);
  }
}

TEST(MultiKrumTest, TooFewReportsThrows) {
  const auto r = reports_of({{0}, {1}, {2}, {3}});
  EXPECT_THROW(agg_multi_krum(r, 1, 0), ConfigError);
}

TEST(KNormTest, ZeroDropIsMean) {
  const auto r = reports_of({{1, 3}, {3, 5}, {5, 7}});
  const ParamVector ref = ParamVector::flat({0, 0});
  EXPECT_EQ(values(agg_k_norm(r, ref, 0)), (std::vector<double>{3, 5}));
}

TEST(KNormTest, DropsTheScaledReport) {
  const auto r = reports_of({{1, 1}, {2, 0}, {100, 100}, {0, 2}});
  const ParamVector ref = ParamVector::flat({0, 0});
  EXPECT_EQ(values(agg_k_norm(r, ref, 1)), (std::vector<double>{1, 1}));
}

TEST(KNormTest, EqualNormsDropHigherIdFirst) {
  const auto r = reports_of({{1, 0}, {0, 1}, {0, 0}});
  const ParamVector ref = ParamVector::flat({0, 0});
  EXPECT_EQ(values(agg_k_norm(r, ref, 1)), (std::vector<double>{0.5, 0}));
}

TEST(KNormTest, MatchesSortByNormOracle) {
  std::mt19937_64 rng(65);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 8;
    const auto r = oracle::random_reports(rng, n, 4, t % 3 == 0);
    const ParamVector ref = ParamVector::flat(std::vector<double>(4, t % 3 == 0 ? 0.0 : 0.2));
    const int k = t % n;
    EXPECT_LE(oracle::max_abs_diff(oracle::k_norm(r, ref, k), agg_k_norm(r, ref, k).values()),
              1e-10);
  }
}

TEST(AggregatorChoiceTest, ValidateAgainstReportCount) {
  AggregatorChoice c;
  c.kind = AggregatorKind::kMultiKrum;
  c.krum_f = 1;
  EXPECT_NO_THROW(c.validate(5));
  EXPECT_THROW(c.validate(4), ConfigError);
  c.kind = AggregatorKind::kKNorm;
  c.norm_k = 5;
  EXPECT_THROW(c.validate(5), ConfigError);
}

TEST(AggregatorKindTest, NamesRoundTrip) {
  for (AggregatorKind k : {AggregatorKind::kFedAvg, AggregatorKind::kMedian,
                           AggregatorKind::kTrimmedMean, AggregatorKind::kMultiKrum,
                           AggregatorKind::kKNorm}) {
    EXPECT_EQ(aggregator_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(aggregator_kind_from_string("mean"), ConfigError);
}

}  // namespace
}  // namespace nflsim
