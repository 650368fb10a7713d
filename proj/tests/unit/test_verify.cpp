#include <gtest/gtest.h>

#include "sfc/verify.hpp"
#include "sfc/verify_suite.hpp"

using namespace sfc;

TEST(Oracle, PatternCountRecursion) {
  EXPECT_EQ(verify::oracle_pattern_count(3, 2), 4u);
  EXPECT_EQ(verify::oracle_pattern_count(4, 4), 35u);
  EXPECT_EQ(verify::oracle_pattern_count(1, 8), 8u);
  EXPECT_THROW(verify::oracle_pattern_count(9, 1), DomainError);
}

TEST(Oracle, NaiveAccountantTracksUsage) {
  const NetworkGraph g = default_topology(kDefaultTopologySeed);
  verify::NaiveAccountant acct(g);
  EXPECT_TRUE(acct.idle());
  const NodeIndex n = g.nodes_of(NodeKind::Compute).front();
  acct.add_cores(n, 3);
  acct.add_bandwidth(0, 0.5);
  EXPECT_EQ(acct.node_free(n), g.node(n).cores - 3);
  EXPECT_DOUBLE_EQ(acct.link_free(0), g.link(0).capacity - 0.5);
  EXPECT_TRUE(acct.within_capacity());
  acct.add_cores(n, g.node(n).cores);
  EXPECT_FALSE(acct.within_capacity());
}

TEST(Suite, FastLevelPasses) {
  const auto results = verify::run_suite(verify::Level::Fast);
  ASSERT_EQ(results.size(), 7u);
  for (const auto& r : results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
  const std::string table = verify::format_table(results);
  EXPECT_NE(table.find("PASS  pattern_count"), std::string::npos);
  EXPECT_EQ(table.find("FAIL"), std::string::npos);
}

TEST(Suite, InjectedFaultIsReported) {
  verify::SuiteHooks hooks;
  hooks.pattern_count = [](int n, int m) { return n == 4 && m == 3 ? 14u : pattern_count(n, m); };
  const auto res = verify::check_pattern_counts(hooks);
  EXPECT_FALSE(res.passed);
  EXPECT_NE(res.detail.find("n=4 m=3"), std::string::npos);

  hooks.pattern_count = [](int n, int m) { return n == 3 && m == 2 ? 3u : pattern_count(n, m); };
  const auto small_case = verify::check_pattern_counts(hooks);
  EXPECT_FALSE(small_case.passed);
  EXPECT_NE(small_case.detail.find("P(3,2)"), std::string::npos);
  EXPECT_NE(verify::format_table({small_case}).find("FAIL"), std::string::npos);
}

TEST(Suite, ExceptionsBecomeFailures) {
  verify::SuiteHooks hooks;
  hooks.pattern_count = [](int, int) -> std::uint64_t { throw DomainError("boom"); };
  const auto res = verify::check_pattern_counts(hooks);
  EXPECT_FALSE(res.passed);
  EXPECT_NE(res.detail.find("boom"), std::string::npos);
}

TEST(Oracle, BestPlacementOnEmptyNetwork) {
  const NetworkGraph g = default_topology(kDefaultTopologySeed);
  const ResourceLedger ledger(g);
  Rng rng(3);
  int found = 0;
  for (int i = 0; i < 30; ++i) {
    SfcRequest r = verify::random_request(g, rng);
    r.bandwidth = 0.5;
    const auto best = verify::oracle_best_placement(ledger, g, r, ConstraintParams{});
    if (!best) continue;
    ++found;
    EXPECT_TRUE(check_feasible(ledger, r, best->deployment, ConstraintParams{}).feasible());
    EXPECT_DOUBLE_EQ(best->reward, compute_reward(r, best->deployment.allocations));
    // The base-only deployment is the ceiling on an empty network.
    EXPECT_LE(best->reward, compute_reward(r, base_allocations(r)) + 1e-9);
  }
  EXPECT_GT(found, 10);
}
