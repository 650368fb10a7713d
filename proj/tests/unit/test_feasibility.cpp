#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "sfc/feasibility.hpp"
#include "sfc/rng.hpp"
#include "sfc/verify.hpp"
#include "sfc/verify_suite.hpp"

using namespace sfc;
using namespace testing_helpers;

namespace {

Deployment first_fit(const NetworkGraph& g, const SfcRequest& r, std::vector<VnfAllocation> allocs) {
  Deployment d;
  d.path = candidate_paths(g, r.src, r.dst, 1).front();
  d.pattern.counts.assign(d.path.m(), 0);
  d.pattern.counts[0] = static_cast<int>(r.size());
  d.allocations = std::move(allocs);
  return d;
}

}  // namespace

TEST(Reliability, Examples) {
  EXPECT_NEAR(sfc_reliability({{1, 0, 1}}, 0.9), 0.99, 1e-15);
  EXPECT_NEAR(sfc_reliability({{1, 0, 0}, {1, 0, 0}}, 0.9), 0.81, 1e-15);
  const double direct = (1.0 - 0.01 * 0.01) * (1.0 - 0.01 * 0.01 * 0.01) * (1.0 - 0.01);
  EXPECT_NEAR(sfc_reliability({{1, 0, 1}, {2, 0, 2}, {1, 3, 0}}, 0.99), direct, 1e-12);
  EXPECT_THROW(sfc_reliability({{1, 0, 0}}, 1.0), DomainError);
  EXPECT_THROW(sfc_reliability({{1, 0, 0}}, 0.0), DomainError);
}

TEST(Delay, Examples) {
  CandidatePath zero;
  EXPECT_DOUBLE_EQ(sfc_delay(zero, {{2, 0, 0}}, std::vector<double>{2e9}, 1e9), 1.0);
  const double one = sfc_delay(zero, {{1, 1, 0}}, std::vector<double>{5e6}, 1e9);
  const double two = sfc_delay(zero, {{2, 2, 0}}, std::vector<double>{5e6}, 1e9);
  EXPECT_DOUBLE_EQ(one, 2.0 * two);

  const NetworkGraph g = line_graph(8, 10.0, 1.0);
  CandidatePath p = candidate_paths(g, 0, 4, 1).front();
  p.total_delay = 0.001 + 0.002 + 0.003;
  EXPECT_NEAR(sfc_delay(p, {{1, 0, 0}, {1, 0, 0}}, std::vector<double>{4e6, 4e6}, 1e9), 0.014, 1e-15);
}

TEST(Delay, ReplicasDoNotSpeedUp) {
  CandidatePath zero;
  const std::vector<double> w{3e6};
  EXPECT_DOUBLE_EQ(sfc_delay(zero, {{1, 0, 0}}, w, 1e9), sfc_delay(zero, {{1, 0, 5}}, w, 1e9));
  EXPECT_THROW(sfc_delay(zero, {{1, 0, 0}}, w, 0.0), DomainError);
  EXPECT_THROW(sfc_delay(zero, {{1, 0, 0}, {1, 0, 0}}, w, 1e9), ShapeError);
}

TEST(Monotonicity, ExtraCores) {
  Rng rng(5);
  CandidatePath zero;
  for (int i = 0; i < 200; ++i) {
    std::vector<VnfAllocation> a;
    std::vector<double> w;
    const auto n = rng.uniform_int(1, 4);
    for (int k = 0; k < n; ++k) {
      a.push_back({static_cast<int>(rng.uniform_int(1, 4)), static_cast<int>(rng.uniform_int(0, 3)),
                   static_cast<int>(rng.uniform_int(0, 3))});
      w.push_back(rng.uniform(1e6, 1e7));
    }
    const std::size_t k = rng.index(a.size());
    auto boosted = a;
    ++boosted[k].boost;
    EXPECT_LE(sfc_delay(zero, boosted, w, 1e9), sfc_delay(zero, a, w, 1e9));
    auto replicated = a;
    ++replicated[k].replicas;
    EXPECT_GE(sfc_reliability(replicated, 0.999), sfc_reliability(a, 0.999));
  }
}

TEST(CheckFeasible, EmptyDefaultTopologyPasses) {
  const NetworkGraph g = default_topology(kDefaultTopologySeed);
  const ResourceLedger ledger(g);
  const SfcRequest r = make_request(g, {1, 1, 1}, 0.2, 0, 10, 0.9, 1.0);
  const FeasibilityReport rep = check_feasible(ledger, r, first_fit(g, r, base_allocations(r)), ConstraintParams{});
  EXPECT_TRUE(rep.bandwidth);
  EXPECT_TRUE(rep.compute);
  EXPECT_TRUE(rep.reliability);
  EXPECT_TRUE(rep.delay);
  EXPECT_TRUE(rep.feasible());
}

TEST(CheckFeasible, OversizedBandwidthFails) {
  const NetworkGraph g = default_topology(kDefaultTopologySeed);
  const ResourceLedger ledger(g);
  const SfcRequest r = make_request(g, {1, 1}, 100.0);
  const FeasibilityReport rep = check_feasible(ledger, r, first_fit(g, r, base_allocations(r)), ConstraintParams{});
  EXPECT_FALSE(rep.bandwidth);
  EXPECT_TRUE(rep.compute);
  EXPECT_FALSE(rep.feasible());
}

TEST(CheckFeasible, BoundariesAreInclusive) {
  const NetworkGraph g = line_graph(4, 1.0, 1.0);
  const ResourceLedger ledger(g);
  SfcRequest r = make_request(g, {2, 2}, 1.0);
  Deployment d = first_fit(g, r, base_allocations(r));
  // Exactly fills node A's four cores and each link's capacity.
  ConstraintParams params;
  r.delay_bound = sfc_delay(d.path, d.allocations, r, params.tau);
  r.reliability_bound = sfc_reliability(d.allocations, params.theta);
  const auto rep = check_feasible(ledger, r, d, params);
  EXPECT_TRUE(rep.feasible());
  EXPECT_EQ(rep.min_core_headroom, 0);
  EXPECT_DOUBLE_EQ(rep.min_bandwidth_headroom, 0.0);
  d.allocations[0].boost = 0;
  r.vnfs[0].base_cores = 3;
  d.allocations[0].base = 3;
  EXPECT_FALSE(check_feasible(ledger, r, d, params).compute);
}

TEST(CheckFeasible, SeesActiveReservations) {
  const NetworkGraph g = line_graph(4, 10.0, 1.0);
  ResourceLedger ledger(g);
  SfcRequest a = make_request(g, {2, 2});
  reserve(ledger, a, first_fit(g, a, base_allocations(a)));
  SfcRequest b = make_request(g, {1, 1});
  b.id = {0, 1};
  EXPECT_FALSE(check_feasible(ledger, b, first_fit(g, b, base_allocations(b)), ConstraintParams{}).compute);
  release(ledger, a.id);
  EXPECT_TRUE(check_feasible(ledger, b, first_fit(g, b, base_allocations(b)), ConstraintParams{}).compute);
}

TEST(CheckFeasible, StructuralErrors) {
  const NetworkGraph g = line_graph();
  const ResourceLedger ledger(g);
  const SfcRequest r = make_request(g, {1, 1});
  Deployment d = first_fit(g, r, base_allocations(r));
  d.allocations[0].boost = 1;  // boost flag is off
  EXPECT_THROW(check_feasible(ledger, r, d, ConstraintParams{}), ShapeError);
  d = first_fit(g, r, base_allocations(r));
  d.allocations.pop_back();
  EXPECT_THROW(check_feasible(ledger, r, d, ConstraintParams{}), ShapeError);
  d = first_fit(g, r, base_allocations(r));
  d.pattern.counts = {1, 0};
  EXPECT_THROW(check_feasible(ledger, r, d, ConstraintParams{}), ShapeError);
}

TEST(CheckFeasible, AgreesWithNaiveReevaluation) {
  Rng rng(99);
  ConstraintParams params;
  int feasible = 0;
  for (int i = 0; i < 1000; ++i) {
    const NetworkGraph g = default_topology(static_cast<std::uint64_t>(i % 5 + 1), 8);
    ResourceLedger ledger(g);
    verify::load_background(ledger, g, rng, static_cast<int>(rng.uniform_int(0, 10)));
    verify::NaiveAccountant acct(g);
    for (const auto& [id, h] : ledger.active()) {
      (void)id;
      for (const auto& [node, cores] : h.cores) acct.add_cores(node, cores);
      for (LinkIndex l : h.links) acct.add_bandwidth(l, from_units(h.bandwidth));
    }
    const SfcRequest r = verify::random_request(g, rng);
    const Deployment d = verify::random_deployment(g, r, rng);
    const auto rep = check_feasible(ledger, r, d, params);
    const auto naive = verify::naive_check(g, acct, r, d, params);
    ASSERT_EQ(rep.bandwidth, naive.bandwidth) << i;
    ASSERT_EQ(rep.compute, naive.compute) << i;
    ASSERT_EQ(rep.reliability, naive.reliability) << i;
    ASSERT_EQ(rep.delay, naive.delay) << i;
    ASSERT_NEAR(rep.reliability_value, naive.reliability_value, 1e-9);
    ASSERT_NEAR(rep.delay_value, naive.delay_value, 1e-9);
    feasible += rep.feasible();
  }
  EXPECT_GT(feasible, 0);
}

TEST(ConfigureVnfs, NoOpWhenBoundsHold) {
  const NetworkGraph g = line_graph();
  SfcRequest r = make_request(g, {1, 3});
  r.replica_flags = {true, true};
  r.boost_flags = {true, true};
  const auto path = candidate_paths(g, r.src, r.dst, 1).front();
  const auto allocs = configure_vnfs(r, path, ConstraintParams{});
  ASSERT_TRUE(allocs.has_value());
  EXPECT_EQ(*allocs, base_allocations(r));
}

TEST(ConfigureVnfs, SmallestReplicaCount) {
  const NetworkGraph g = line_graph();
  SfcRequest r = make_request(g, {1});
  r.replica_flags = {true};
  r.reliability_bound = 0.99;
  ConstraintParams params;
  params.theta = 0.9;
  const auto path = candidate_paths(g, r.src, r.dst, 1).front();
  // Oracle: linear scan for the smallest r meeting the bound.
  int expect = 0;
  while (sfc_reliability({{1, 0, expect}}, params.theta) < r.reliability_bound) ++expect;
  const auto allocs = configure_vnfs(r, path, params);
  ASSERT_TRUE(allocs.has_value());
  EXPECT_EQ((*allocs)[0].replicas, expect);
  EXPECT_EQ((*allocs)[0].boost, 0);
}

TEST(ConfigureVnfs, UnreachableDelayWithoutBoostFlags) {
  const NetworkGraph g = line_graph();
  SfcRequest r = make_request(g, {1, 1});
  r.delay_bound = 0.001;
  const auto path = candidate_paths(g, r.src, r.dst, 1).front();
  EXPECT_FALSE(configure_vnfs(r, path, ConstraintParams{}).has_value());
}

TEST(ConfigureVnfs, BudgetCap) {
  const NetworkGraph g = line_graph(8, 10.0, 1e-6);
  SfcRequest r = make_request(g, {1, 1});
  r.boost_flags = {true, true};
  r.vnfs = {{1, 1e7}, {1, 1e7}};
  r.delay_bound = 0.0001;  // needs far more than 4 added cores
  const auto path = candidate_paths(g, r.src, r.dst, 1).front();
  EXPECT_FALSE(configure_vnfs(r, path, ConstraintParams{}).has_value());
}

TEST(ConfigureVnfs, ChainOrderAndOutputPasses) {
  Rng rng(3);
  const NetworkGraph g = default_topology(kDefaultTopologySeed);
  const ResourceLedger ledger(g);
  ConstraintParams params;
  int configured = 0;
  for (int i = 0; i < 500; ++i) {
    const SfcRequest r = verify::random_request(g, rng);
    const auto path = candidate_paths(g, r.src, r.dst, 8).front();
    const auto allocs = configure_vnfs(r, path, params);
    EXPECT_EQ(allocs, configure_vnfs(r, path, params));
    if (!allocs) continue;
    ++configured;
    EXPECT_GE(sfc_reliability(*allocs, params.theta), r.reliability_bound);
    EXPECT_LE(sfc_delay(path, *allocs, r, params.tau), r.delay_bound);
    EXPECT_LE(extra_cores(*allocs), params.budget_factor * r.base_core_total());
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (!r.boost_flags[k]) EXPECT_EQ((*allocs)[k].boost, 0);
      if (!r.replica_flags[k]) EXPECT_EQ((*allocs)[k].replicas, 0);
    }
  }
  EXPECT_GT(configured, 100);
}

TEST(ConfigureVnfs, FirstEligibleVnfGetsTheCore) {
  const NetworkGraph g = line_graph(8, 10.0, 1e-6);
  SfcRequest r = make_request(g, {1, 1, 1});
  r.vnfs = {{1, 4e6}, {1, 4e6}, {1, 4e6}};
  r.boost_flags = {false, true, true};
  // 12 ms at one core each; 10.1 ms needs one boost core on VNF 2.
  r.delay_bound = 0.0101;
  const auto path = candidate_paths(g, r.src, r.dst, 1).front();
  const auto allocs = configure_vnfs(r, path, ConstraintParams{});
  ASSERT_TRUE(allocs.has_value());
  EXPECT_EQ((*allocs)[0].boost, 0);
  EXPECT_EQ((*allocs)[1].boost, 1);
  EXPECT_EQ((*allocs)[2].boost, 0);
}
