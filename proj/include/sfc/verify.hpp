#pragma once

// Brute-force oracles. These deliberately avoid the production code paths
// they are used to check: counts come from exhaustive recursion, constraint
// verdicts from direct arithmetic over the raw graph, and Q* from Bellman
// iteration.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sfc/error.hpp"
#include "sfc/feasibility.hpp"
#include "sfc/network.hpp"
#include "sfc/patterns.hpp"
#include "sfc/policy.hpp"
#include "sfc/workload.hpp"

namespace sfc::verify {

/// Non-negative integer vectors of length m summing to n, counted by
/// recursion over the first entry.
inline std::uint64_t oracle_pattern_count(int n, int m) {
  if (n < 1 || m < 1 || n > 8 || m > 8) throw DomainError("oracle_pattern_count is defined for n, m in [1,8]");
  auto count = [](auto&& self, int left, int slots) -> std::uint64_t {
    if (slots == 1) return 1;
    std::uint64_t total = 0;
    for (int c = 0; c <= left; ++c) total += self(self, left - c, slots - 1);
    return total;
  };
  return count(count, n, m);
}

/// Independent usage accountant: plain per-node / per-link usage sums in
/// floating point, rebuilt from raw deployment data.
class NaiveAccountant {
 public:
  explicit NaiveAccountant(const NetworkGraph& g)
      : g_(&g), node_used_(g.node_count(), 0), link_used_(g.link_count(), 0.0) {}

  int node_used(NodeIndex n) const { return node_used_[n]; }
  double link_used(LinkIndex l) const { return link_used_[l]; }
  double link_free(LinkIndex l) const { return g_->link(l).capacity - link_used_[l]; }
  int node_free(NodeIndex n) const { return g_->node(n).cores - node_used_[n]; }

  void add(const SfcRequest& r, const Deployment& d, int sign) {
    std::size_t k = 0;
    for (std::size_t slot = 0; slot < d.pattern.counts.size(); ++slot) {
      for (int c = 0; c < d.pattern.counts[slot]; ++c, ++k) {
        const VnfAllocation& a = d.allocations[k];
        node_used_[d.path.compute_nodes[slot]] += sign * (a.base + a.boost + a.replicas);
      }
    }
    for (LinkIndex l : d.path.links) link_used_[l] += sign * r.bandwidth;
  }

  void add_cores(NodeIndex n, int cores) { node_used_.at(n) += cores; }
  void add_bandwidth(LinkIndex l, double amount) { link_used_.at(l) += amount; }

  bool within_capacity(double tol = 1e-9) const {
    for (NodeIndex n = 0; n < node_used_.size(); ++n)
      if (node_used_[n] < 0 || node_used_[n] > g_->node(n).cores) return false;
    for (LinkIndex l = 0; l < link_used_.size(); ++l)
      if (link_used_[l] < -tol || link_used_[l] > g_->link(l).capacity + tol) return false;
    return true;
  }

  bool idle(double tol = 1e-9) const {
    for (int u : node_used_)
      if (u != 0) return false;
    for (double u : link_used_)
      if (std::abs(u) > tol) return false;
    return true;
  }

 private:
  const NetworkGraph* g_;
  std::vector<int> node_used_;
  std::vector<double> link_used_;
};

struct NaiveVerdict {
  bool bandwidth = false;
  bool compute = false;
  bool reliability = false;
  bool delay = false;
  double reliability_value = 0.0;
  double delay_value = 0.0;
  bool feasible() const { return bandwidth && compute && reliability && delay; }
};

/// Re-evaluates the four constraint families from first principles.
inline NaiveVerdict naive_check(const NetworkGraph& g, const NaiveAccountant& acct, const SfcRequest& r,
                                const Deployment& d, const ConstraintParams& params) {
  NaiveVerdict v;
  v.bandwidth = true;
  for (LinkIndex l : d.path.links)
    if (acct.link_free(l) < r.bandwidth - 1e-9) v.bandwidth = false;

  std::vector<int> demand(g.node_count(), 0);
  std::size_t k = 0;
  for (std::size_t slot = 0; slot < d.pattern.counts.size(); ++slot)
    for (int c = 0; c < d.pattern.counts[slot]; ++c, ++k) {
      const VnfAllocation& a = d.allocations[k];
      demand[d.path.compute_nodes[slot]] += a.base + a.boost + a.replicas;
    }
  v.compute = k == r.size();
  for (NodeIndex n = 0; n < g.node_count(); ++n)
    if (demand[n] > acct.node_free(n)) v.compute = false;

  double rel = 1.0;
  for (const VnfAllocation& a : d.allocations) {
    double fail = 1.0;
    for (int i = 0; i <= a.replicas; ++i) fail *= (1.0 - params.theta);
    rel *= 1.0 - fail;
  }
  v.reliability_value = rel;
  v.reliability = rel >= r.reliability_bound;

  double delay = 0.0;
  for (LinkIndex l : d.path.links) delay += g.link(l).delay_s;
  for (std::size_t i = 0; i < r.size(); ++i)
    delay += r.vnfs[i].workload_cycles / ((d.allocations[i].base + d.allocations[i].boost) * params.tau);
  v.delay_value = delay;
  v.delay = delay <= r.delay_bound;
  return v;
}

// ---------------------------------------------------------------------------
// Exact best placement of a single request

struct BestPlacement {
  Deployment deployment;
  double reward = 0.0;
  std::size_t path_index = 0;
};

namespace detail {

/// All vectors over `slots` eligible positions summing to `total`.
inline void compositions(int total, std::size_t slots, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(slots, 0);
  if (slots == 0) {
    if (total == 0) out.push_back(cur);
    return;
  }
  auto rec = [&](auto&& self, std::size_t pos, int left) -> void {
    if (pos + 1 == slots) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      cur[pos] = c;
      self(self, pos + 1, left - c);
    }
  };
  rec(rec, 0, total);
}

}  // namespace detail

/// Maximizes the request's profit over every candidate path, every pattern
/// and, per path, the allocations with the fewest added cores that admit a
/// feasible pattern (searched up to the same budget as configure_vnfs).
inline std::optional<BestPlacement> oracle_best_placement(const ResourceLedger& ledger, const NetworkGraph& g,
                                                          const SfcRequest& r, const ConstraintParams& params,
                                                          std::size_t k_paths = 8) {
  std::vector<CandidatePath> paths;
  try {
    paths = candidate_paths(g, r.src, r.dst, k_paths);
  } catch (const NoPathError&) {
    return std::nullopt;
  }
  std::vector<std::size_t> rep_slots, boost_slots;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (r.replica_flags[k]) rep_slots.push_back(k);
    if (r.boost_flags[k]) boost_slots.push_back(k);
  }
  const int budget = params.budget_factor * r.base_core_total();
  const auto base = base_allocations(r);

  // Replica vectors by total, filtered to those meeting reliability.
  std::vector<std::vector<std::vector<int>>> rep_by_total(static_cast<std::size_t>(budget) + 1);
  for (int t = 0; t <= budget; ++t) {
    std::vector<std::vector<int>> all;
    detail::compositions(t, rep_slots.size(), all);
    for (auto& v : all) {
      auto a = base;
      for (std::size_t i = 0; i < rep_slots.size(); ++i) a[rep_slots[i]].replicas = v[i];
      if (sfc_reliability(a, params.theta) >= r.reliability_bound) rep_by_total[static_cast<std::size_t>(t)].push_back(v);
    }
  }

  std::optional<BestPlacement> best;

  for (std::size_t pi = 0; pi < paths.size(); ++pi) {
    const CandidatePath& path = paths[pi];
    bool link_ok = true;
    for (LinkIndex l : path.links) link_ok = link_ok && ledger.residual_bandwidth_units(l) >= to_units(r.bandwidth);
    if (!link_ok) continue;
    int path_free = 0;
    for (NodeIndex n : path.compute_nodes) path_free += ledger.residual_cores(n);
    const auto pats = enumerate_patterns(static_cast<int>(r.size()), static_cast<int>(path.m()));

    // Boost vectors by total, filtered to those meeting the delay bound here.
    std::vector<std::vector<std::vector<int>>> boost_by_total(static_cast<std::size_t>(budget) + 1);
    for (int t = 0; t <= budget; ++t) {
      std::vector<std::vector<int>> all;
      detail::compositions(t, boost_slots.size(), all);
      for (auto& v : all) {
        auto a = base;
        for (std::size_t i = 0; i < boost_slots.size(); ++i) a[boost_slots[i]].boost = v[i];
        if (sfc_delay(path, a, r, params.tau) <= r.delay_bound) boost_by_total[static_cast<std::size_t>(t)].push_back(v);
      }
    }

    std::optional<BestPlacement> path_best;
    for (int level = 0; level <= budget && !path_best; ++level) {
      if (r.base_core_total() + level > path_free) break;  // demand only grows with level
      for (int rt = 0; rt <= level && !path_best; ++rt) {
        const auto& reps = rep_by_total[static_cast<std::size_t>(rt)];
        const auto& boosts = boost_by_total[static_cast<std::size_t>(level - rt)];
        for (std::size_t ri = 0; ri < reps.size() && !path_best; ++ri) {
          for (std::size_t bi = 0; bi < boosts.size() && !path_best; ++bi) {
            auto a = base;
            for (std::size_t i = 0; i < rep_slots.size(); ++i) a[rep_slots[i]].replicas = reps[ri][i];
            for (std::size_t i = 0; i < boost_slots.size(); ++i) a[boost_slots[i]].boost = boosts[bi][i];
            for (const Pattern& p : pats) {
              Deployment d{true, path, p, a};
              if (!check_feasible(ledger, r, d, params).feasible()) continue;
              path_best = BestPlacement{std::move(d), compute_reward(r, a), pi};
              break;
            }
          }
        }
      }
    }
    if (path_best && (!best || path_best->reward > best->reward)) best = std::move(path_best);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Finite MDP value iteration

struct MdpOutcome {
  double probability = 1.0;
  std::size_t next = 0;
  bool terminal = false;
};

struct MdpSpec {
  std::size_t states = 0;
  std::size_t actions = 0;
  // transitions[s][a] lists the outcomes of taking a in s.
  std::vector<std::vector<std::vector<MdpOutcome>>> transitions;
  std::vector<std::vector<double>> rewards;  // rewards[s][a]
  double gamma = 0.5;
};

/// Q* by Bellman iteration to a sup-norm residual below `tolerance`.
inline std::vector<std::vector<double>> oracle_value_iteration(const MdpSpec& mdp, double tolerance = 1e-10,
                                                               int max_sweeps = 100000) {
  if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0)) throw DomainError("value iteration requires 0 <= gamma < 1");
  std::vector<std::vector<double>> q(mdp.states, std::vector<double>(mdp.actions, 0.0));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double residual = 0.0;
    auto next_q = q;
    for (std::size_t s = 0; s < mdp.states; ++s) {
      for (std::size_t a = 0; a < mdp.actions; ++a) {
        double v = mdp.rewards[s][a];
        for (const MdpOutcome& o : mdp.transitions[s][a]) {
          if (o.terminal) continue;
          double best = -std::numeric_limits<double>::infinity();
          for (double x : q[o.next]) best = std::max(best, x);
          v += mdp.gamma * o.probability * best;
        }
        residual = std::max(residual, std::abs(v - q[s][a]));
        next_q[s][a] = v;
      }
    }
    q = std::move(next_q);
    if (residual < tolerance) return q;
  }
  throw NonConvergence("value iteration did not converge");
}

}  // namespace sfc::verify
