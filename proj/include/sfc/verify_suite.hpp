#pragma once

// Oracle battery behind `sfcsim verify`. Each check compares production
// code against an independent oracle and reports pass/fail with a detail
// string. Hooks allow a check's production side to be replaced, which is
// how fault injection is exercised.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "sfc/feasibility.hpp"
#include "sfc/learn.hpp"
#include "sfc/network.hpp"
#include "sfc/patterns.hpp"
#include "sfc/policy.hpp"
#include "sfc/rng.hpp"
#include "sfc/sim.hpp"
#include "sfc/verify.hpp"

namespace sfc::verify {

enum class Level { Fast, Full };

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteHooks {
  std::function<std::uint64_t(int, int)> pattern_count = [](int n, int m) { return sfc::pattern_count(n, m); };
};

// ---------------------------------------------------------------------------
// Random instances shared with the tests

/// A random request between a random source and destination AP.
inline SfcRequest random_request(const NetworkGraph& g, Rng& rng, int arrival = 0) {
  const auto src = g.nodes_of(NodeKind::Source);
  const auto dst = g.nodes_of(NodeKind::Destination);
  SfcRequest r;
  r.id = {0, static_cast<int>(rng.uniform_int(0, 1 << 20))};
  r.src = src[rng.index(src.size())];
  r.dst = dst[rng.index(dst.size())];
  static constexpr double kBw[] = {0.2, 0.5, 1.0, 2.0, 5.0};
  r.bandwidth = kBw[rng.index(5)];
  r.arrival = arrival;
  r.departure = arrival + static_cast<int>(rng.uniform_int(1, 60));
  const auto n = static_cast<std::size_t>(rng.uniform_int(2, 4));
  for (std::size_t k = 0; k < n; ++k) {
    r.vnfs.push_back({static_cast<int>(rng.uniform_int(1, 4)), rng.uniform(1e6, 1e7)});
    r.replica_flags.push_back(rng.bernoulli(0.5));
    r.boost_flags.push_back(rng.bernoulli(0.5));
  }
  static constexpr double kRel[] = {0.99, 0.999, 0.9999};
  static constexpr double kDelay[] = {0.015, 0.024, 0.05, 0.1};
  r.reliability_bound = kRel[rng.index(3)];
  r.delay_bound = kDelay[rng.index(4)];
  return r;
}

/// A random (possibly infeasible) deployment of `r` over one of its
/// candidate paths, with random extra cores on flagged VNFs.
inline Deployment random_deployment(const NetworkGraph& g, const SfcRequest& r, Rng& rng) {
  const auto paths = candidate_paths(g, r.src, r.dst, 8);
  Deployment d;
  d.path = paths[rng.index(paths.size())];
  const auto pats = enumerate_patterns(static_cast<int>(r.size()), static_cast<int>(d.path.m()));
  d.pattern = pats[rng.index(pats.size())];
  d.allocations = base_allocations(r);
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (r.boost_flags[k]) d.allocations[k].boost = static_cast<int>(rng.uniform_int(0, 3));
    if (r.replica_flags[k]) d.allocations[k].replicas = static_cast<int>(rng.uniform_int(0, 2));
  }
  return d;
}

/// Fills the ledger with random background reservations that fit.
inline void load_background(ResourceLedger& ledger, const NetworkGraph& g, Rng& rng, int count) {
  for (int i = 0; i < count; ++i) {
    SfcRequest r = random_request(g, rng);
    r.id = {1, i};
    const Deployment d = random_deployment(g, r, rng);
    Holding h = make_holding(r, d);
    bool fits = true;
    for (const auto& [node, cores] : h.cores) fits = fits && ledger.residual_cores(node) >= cores;
    for (LinkIndex l : h.links) fits = fits && ledger.residual_bandwidth_units(l) >= h.bandwidth;
    if (fits) ledger.reserve(r.id, h);
  }
}

// ---------------------------------------------------------------------------
// Checks

namespace detail {

template <typename F>
CheckResult timed(const std::string& name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult res{name, false, ""};
  try {
    body(res);
  } catch (const std::exception& e) {
    res.passed = false;
    res.detail = std::string("exception: ") + e.what();
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

/// Independent forward pass with explicit loops.
inline std::vector<double> naive_forward(const QNetwork& net, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& w = net.weight(l);
    const auto& b = net.bias(l);
    std::vector<double> z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double s = b(i);
      for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * a[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(i)] = (l + 1 < net.layer_count()) ? std::tanh(s) : s;
    }
    a = std::move(z);
  }
  return a;
}

}  // namespace detail

inline CheckResult check_pattern_counts(const SuiteHooks& hooks) {
  return detail::timed("pattern_count", [&](CheckResult& res) {
    const std::vector<std::tuple<int, int, std::uint64_t>> known{{3, 2, 4}, {2, 3, 6}, {3, 3, 10}};
    for (const auto& [n, m, want] : known) {
      if (hooks.pattern_count(n, m) != want) {
        res.detail = "P(" + std::to_string(n) + "," + std::to_string(m) + ") != " + std::to_string(want);
        return;
      }
    }
    for (int n = 1; n <= 8; ++n) {
      for (int m = 1; m <= 8; ++m) {
        const auto got = hooks.pattern_count(n, m);
        const auto oracle = oracle_pattern_count(n, m);
        const auto closed = binomial(n + m - 1, m - 1);
        const auto listed = enumerate_patterns(n, m).size();
        if (got != oracle || got != closed || listed != got) {
          res.detail = "mismatch at n=" + std::to_string(n) + " m=" + std::to_string(m);
          return;
        }
      }
    }
    res.passed = true;
    res.detail = "64 (n,m) pairs agree";
  });
}

inline CheckResult check_constraint_oracle(int instances, std::uint64_t seed = 17) {
  return detail::timed("constraint_oracle", [&](CheckResult& res) {
    Rng rng(seed);
    ConstraintParams params;
    int feasible = 0;
    for (int i = 0; i < instances; ++i) {
      const NetworkGraph g = default_topology(mix_seed(seed, static_cast<std::uint64_t>(i % 7)), 8);
      ResourceLedger ledger(g);
      load_background(ledger, g, rng, static_cast<int>(rng.uniform_int(0, 12)));
      NaiveAccountant acct(g);
      for (const auto& [id, h] : ledger.active()) {
        (void)id;
        for (const auto& [node, cores] : h.cores) acct.add_cores(node, cores);
        for (LinkIndex l : h.links) acct.add_bandwidth(l, from_units(h.bandwidth));
      }
      const SfcRequest r = random_request(g, rng);
      Deployment d = random_deployment(g, r, rng);
      // Odd instances use the heuristic deployment when one exists, so both
      // verdicts are well represented.
      if (i % 2 == 1) {
        if (auto allocs = configure_vnfs(r, d.path, params)) {
          if (auto pat = heuristic_pattern(d.path, *allocs, ledger)) {
            d.allocations = std::move(*allocs);
            d.pattern = std::move(*pat);
          }
        }
      }
      const FeasibilityReport rep = check_feasible(ledger, r, d, params);
      const NaiveVerdict v = naive_check(g, acct, r, d, params);
      const bool same = rep.bandwidth == v.bandwidth && rep.compute == v.compute &&
                        rep.reliability == v.reliability && rep.delay == v.delay &&
                        std::abs(rep.reliability_value - v.reliability_value) <= 1e-9 &&
                        std::abs(rep.delay_value - v.delay_value) <= 1e-9;
      if (!same) {
        res.detail = "instance " + std::to_string(i) + " disagrees";
        return;
      }
      feasible += rep.feasible();
    }
    res.passed = true;
    res.detail = std::to_string(instances) + " instances agree (" + std::to_string(feasible) + " feasible)";
  });
}

inline CheckResult check_ledger_conservation(int episodes) {
  return detail::timed("ledger_conservation", [&](CheckResult& res) {
    const NetworkGraph g = default_topology(kDefaultTopologySeed);
    SimConfig cfg;
    cfg.audit = true;
    AgentBundle hh(kHH, g, cfg.context());
    int accepted = 0;
    for (int e = 0; e < episodes; ++e) accepted += run_episode(g, hh, cfg, cfg.evaluation_seed(e), e).accepted;
    res.passed = true;
    res.detail = std::to_string(episodes) + " audited H+H episodes, " + std::to_string(accepted) + " accepted";
  });
}

inline CheckResult check_forward_oracle(int nets, std::uint64_t seed = 23) {
  return detail::timed("forward_oracle", [&](CheckResult& res) {
    Rng rng(seed);
    double worst = 0.0;
    for (int i = 0; i < nets; ++i) {
      QNetwork net({static_cast<int>(rng.uniform_int(1, 12)), static_cast<int>(rng.uniform_int(1, 16)),
                    static_cast<int>(rng.uniform_int(1, 16)), static_cast<int>(rng.uniform_int(1, 6))});
      auto p = net.parameters();
      for (double& v : p) v = rng.uniform(-1.0, 1.0);
      net.set_parameters(p);
      std::vector<double> x(static_cast<std::size_t>(net.inputs()));
      for (double& v : x) v = rng.uniform();
      const auto a = net.forward(x);
      const auto b = detail::naive_forward(net, x);
      for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    }
    res.passed = worst <= 1e-10;
    std::ostringstream os;
    os << nets << " nets, max deviation " << worst;
    res.detail = os.str();
  });
}

/// Central differences on `samples` randomly chosen parameters per layer
/// (all of them when the layer is smaller).
inline double gradient_check(const std::vector<int>& sizes, int samples, Rng& rng) {
  QNetwork net(sizes);
  net.initialize(rng);
  const int batch = 4;
  Eigen::MatrixXd x(net.inputs(), batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  std::vector<int> actions;
  std::vector<double> targets;
  for (int b = 0; b < batch; ++b) {
    actions.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(net.outputs()))));
    targets.push_back(rng.uniform(-2.0, 2.0));
  }
  const auto [loss, grad] = net.loss_and_gradient(x, actions, targets);
  (void)loss;
  std::vector<double> analytic;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (Eigen::Index i = 0; i < grad.weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < grad.weights[l].cols(); ++j) analytic.push_back(grad.weights[l](i, j));
    for (Eigen::Index i = 0; i < grad.biases[l].size(); ++i) analytic.push_back(grad.biases[l](i));
  }
  auto params = net.parameters();
  std::vector<std::size_t> picks;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto count = static_cast<std::size_t>(net.weight(l).size() + net.bias(l).size());
    if (count <= static_cast<std::size_t>(samples)) {
      for (std::size_t k = 0; k < count; ++k) picks.push_back(offset + k);
    } else {
      for (int s = 0; s < samples; ++s) picks.push_back(offset + rng.index(count));
    }
    offset += count;
  }
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t idx : picks) {
    const double keep = params[idx];
    params[idx] = keep + h;
    net.set_parameters(params);
    const double up = net.loss_and_gradient(x, actions, targets).first;
    params[idx] = keep - h;
    net.set_parameters(params);
    const double down = net.loss_and_gradient(x, actions, targets).first;
    params[idx] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[idx]), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic[idx]) / denom);
  }
  net.set_parameters(params);
  return worst;
}

/// Layer shapes of every agent in the default scenario.
inline std::vector<std::vector<int>> artifact_layer_shapes() {
  const NetworkGraph g = default_topology(kDefaultTopologySeed);
  SimConfig cfg;
  const auto norms = norms_for(cfg.workload);
  const int s = static_cast<int>(state_layout(g.node_count(), g.link_count(), norms.v_max).size());
  const int p = static_cast<int>(pattern_layout(g.node_count(), g.link_count(), norms.v_max).size());
  std::vector<std::vector<int>> shapes{layer_sizes(s, static_cast<int>(cfg.k_paths) + 1, cfg.dqn)};
  for (int m = 2; m <= 4; ++m)
    for (int n = 2; n <= 4; ++n) shapes.push_back(layer_sizes(p, static_cast<int>(pattern_count(n, m)), cfg.dqn));
  return shapes;
}

inline CheckResult check_gradients(Level level, std::uint64_t seed = 29) {
  return detail::timed("gradient_fd", [&](CheckResult& res) {
    Rng rng(seed);
    double worst = gradient_check({3, 5, 2}, 1000, rng);
    worst = std::max(worst, gradient_check({6, 8, 8, 8, 8, 4}, 1000, rng));
    if (level == Level::Full)
      for (const auto& shape : artifact_layer_shapes()) worst = std::max(worst, gradient_check(shape, 40, rng));
    res.passed = worst < 1e-4;
    std::ostringstream os;
    os << "max relative error " << worst;
    res.detail = os.str();
  });
}

/// On random ledgers, the exhaustive optimum never earns less than the
/// heuristic cascade, and every optimum passes both checkers.
inline CheckResult check_best_placement(int instances, std::uint64_t seed = 31) {
  return detail::timed("best_placement", [&](CheckResult& res) {
    Rng rng(seed);
    ConstraintParams params;
    const NetworkGraph g = default_topology(kDefaultTopologySeed, 12);
    PolicyContext ctx{EncodingNorms{}, params, 8};
    int improved = 0;
    for (int i = 0; i < instances; ++i) {
      ResourceLedger ledger(g);
      load_background(ledger, g, rng, static_cast<int>(rng.uniform_int(0, 10)));
      SfcRequest r = random_request(g, rng);
      r.bandwidth = std::min(r.bandwidth, 1.0);
      ResourceLedger scratch = ledger;
      AgentBundle hh(kHH, g, ctx);
      const PlacementOutcome h = decide(hh, scratch, g, r);
      const auto best = oracle_best_placement(ledger, g, r, params, 8);
      if (h.accepted() && (!best || best->reward + 1e-9 < h.reward)) {
        res.detail = "instance " + std::to_string(i) + ": heuristic beats the exhaustive optimum";
        return;
      }
      if (best) {
        if (!check_feasible(ledger, r, best->deployment, params).feasible()) {
          res.detail = "instance " + std::to_string(i) + ": optimum is infeasible";
          return;
        }
        improved += !h.accepted() || best->reward > h.reward + 1e-9;
      }
    }
    res.passed = true;
    res.detail = std::to_string(instances) + " instances, optimum strictly better on " + std::to_string(improved);
  });
}

/// Two-state, two-action deterministic MDP solved by value iteration and
/// by the DQN update; returns max |Q - Q*| over all state/action pairs.
inline double toy_mdp_gap(int steps, std::uint64_t seed, double gamma = 0.5) {
  MdpSpec mdp;
  mdp.states = 2;
  mdp.actions = 2;
  mdp.gamma = gamma;
  // Action 0 stays, action 1 switches. Rewards favour switching out of
  // state 0 and staying in state 1.
  mdp.transitions = {{{{1.0, 0, false}}, {{1.0, 1, false}}}, {{{1.0, 1, false}}, {{1.0, 0, false}}}};
  mdp.rewards = {{0.0, 1.0}, {0.5, 0.0}};
  const auto qstar = oracle_value_iteration(mdp);

  DqnConfig cfg;
  cfg.gamma = gamma;
  cfg.hidden_layers = 1;
  cfg.hidden_width = 16;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 32;
  cfg.warmup = 32;
  cfg.target_sync_period = 50;
  cfg.replay_capacity = 1000;
  Rng rng(seed);
  QNetwork eval(layer_sizes(2, 2, cfg));
  eval.initialize(rng);
  QNetwork target = eval;
  ReplayMemory memory(static_cast<std::size_t>(cfg.replay_capacity));
  auto onehot = [](std::size_t s) { return std::vector<double>{s == 0 ? 1.0 : 0.0, s == 1 ? 1.0 : 0.0}; };
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t a = 0; a < 2; ++a) {
      const auto& o = mdp.transitions[s][a].front();
      for (int k = 0; k < 16; ++k) memory.push({onehot(s), static_cast<int>(a), mdp.rewards[s][a], onehot(o.next), false, {}});
    }
  std::int64_t learn_steps = 0;
  for (int i = 0; i < steps; ++i) learn_step(eval, target, memory, cfg, rng, learn_steps);
  double gap = 0.0;
  for (std::size_t s = 0; s < 2; ++s) {
    const auto q = eval.forward(onehot(s));
    for (std::size_t a = 0; a < 2; ++a) gap = std::max(gap, std::abs(q[a] - qstar[s][a]));
  }
  return gap;
}

inline CheckResult check_toy_mdp(std::uint64_t seed = 37) {
  return detail::timed("toy_mdp_q", [&](CheckResult& res) {
    const double gap = toy_mdp_gap(5000, seed);
    res.passed = gap < 0.05;
    std::ostringstream os;
    os << "max |Q - Q*| = " << gap << " after 5000 steps";
    res.detail = os.str();
  });
}

inline std::vector<CheckResult> run_suite(Level level, const SuiteHooks& hooks = {}) {
  const bool full = level == Level::Full;
  std::vector<CheckResult> out;
  out.push_back(check_pattern_counts(hooks));
  out.push_back(check_constraint_oracle(full ? 1000 : 200));
  out.push_back(check_ledger_conservation(full ? 5 : 1));
  out.push_back(check_forward_oracle(full ? 100 : 20));
  out.push_back(check_gradients(level));
  out.push_back(check_best_placement(full ? 200 : 40));
  out.push_back(check_toy_mdp());
  return out;
}

inline std::string format_table(const std::vector<CheckResult>& results) {
  std::ostringstream os;
  std::size_t width = 5;
  for (const auto& r : results) width = std::max(width, r.name.size());
  for (const auto& r : results) {
    os << (r.passed ? "PASS  " : "FAIL  ") << r.name << std::string(width - r.name.size() + 2, ' ') << r.detail;
    char buf[32];
    std::snprintf(buf, sizeof buf, "  (%.2fs)", r.seconds);
    os << buf << '\n';
  }
  return os.str();
}

}  // namespace sfc::verify
