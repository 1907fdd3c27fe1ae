#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace tempo;

namespace {

RMConfig three_tenants(int c_max = 12) {
  RMConfig cfg;
  cfg.capacity = 12;
  cfg.tenants["A"] = fixtures::tenant(1, 0, 12);
  cfg.tenants["B"] = fixtures::tenant(2, 0, 12);
  cfg.tenants["C"] = fixtures::tenant(3, 0, c_max);
  return cfg;
}

}  // namespace

TEST(FairAllocation, ProportionalToWeights) {
  auto a = fair_allocation({{"A", 100}, {"B", 100}, {"C", 100}}, three_tenants());
  EXPECT_EQ(a, (std::map<std::string, int>{{"A", 2}, {"B", 4}, {"C", 6}}));
}

TEST(FairAllocation, IdleTenantQuotaRedistributed) {
  auto a = fair_allocation({{"A", 100}, {"B", 100}, {"C", 0}}, three_tenants());
  EXPECT_EQ(a, (std::map<std::string, int>{{"A", 4}, {"B", 8}, {"C", 0}}));
}

TEST(FairAllocation, MaxLimitReleasesQuota) {
  auto a = fair_allocation({{"A", 100}, {"B", 100}, {"C", 100}}, three_tenants(3));
  EXPECT_EQ(a, (std::map<std::string, int>{{"A", 3}, {"B", 6}, {"C", 3}}));
}

TEST(FairAllocation, DemandCapsAndMinLimits) {
  RMConfig cfg;
  cfg.capacity = 10;
  cfg.tenants["A"] = fixtures::tenant(1, 4, 10);
  cfg.tenants["B"] = fixtures::tenant(9, 0, 10);
  auto a = fair_allocation({{"A", 6}, {"B", 100}}, cfg);
  EXPECT_EQ(a.at("A"), 4);  // min limit outranks its 1/10 share
  EXPECT_EQ(a.at("B"), 6);
  auto b = fair_allocation({{"A", 2}, {"B", 3}}, cfg);
  EXPECT_EQ(b.at("A"), 2);
  EXPECT_EQ(b.at("B"), 3);
}

TEST(FairAllocation, Errors) {
  RMConfig cfg = three_tenants();
  EXPECT_THROW(fair_allocation({{"A", -1}}, cfg), ConfigError);
  EXPECT_THROW(fair_allocation({{"Z", 1}}, cfg), ConfigError);
  cfg.tenants["A"].min_limit = 7;
  cfg.tenants["B"].min_limit = 6;
  EXPECT_THROW(fair_allocation({{"A", 1}}, cfg), ConfigError);
}

// Water-filling properties over random instances.
TEST(FairAllocation, RandomProperties) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> ntenants(1, 6), cap(1, 40), dem(0, 30);
  std::uniform_real_distribution<double> weight(0.1, 5);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = ntenants(rng);
    const int capacity = cap(rng);
    std::vector<ShareParams> params(n);
    std::vector<int> demands(n), out(n);
    int min_budget = capacity;
    for (int t = 0; t < n; ++t) {
      params[t].weight = weight(rng);
      params[t].min_limit = std::uniform_int_distribution<int>(0, std::max(0, min_budget / 2))(rng);
      min_budget -= params[t].min_limit;
      params[t].max_limit = std::uniform_int_distribution<int>(params[t].min_limit, capacity)(rng);
      demands[t] = dem(rng);
    }
    fair_allocation(params, demands, capacity, out);
    int total = 0, placeable = 0;
    for (int t = 0; t < n; ++t) {
      const int hi = std::min(demands[t], params[t].max_limit);
      ASSERT_GE(out[t], std::min(demands[t], params[t].min_limit));
      ASSERT_LE(out[t], hi);
      total += out[t];
      placeable += hi;
    }
    ASSERT_LE(total, capacity);
    // Work conservation: stop only when full or everyone is capped.
    ASSERT_EQ(total, std::min(capacity, placeable));
    // Weighted fairness up to one container: an uncapped tenant above its
    // min never holds more than a capped-out share relative to another.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j || out[j] >= std::min(demands[j], params[j].max_limit)) continue;
        if (out[i] <= std::min(demands[i], params[i].min_limit)) continue;
        ASSERT_LE((out[i] - 1) / params[i].weight, (out[j] + 1) / params[j].weight + 1e-9)
            << "trial " << trial << " i=" << i << " j=" << j;
      }
  }
}
