#pragma once

// Slot-based episode runner, training loop and evaluation.

#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sfc/encoding.hpp"
#include "sfc/error.hpp"
#include "sfc/feasibility.hpp"
#include "sfc/learn.hpp"
#include "sfc/network.hpp"
#include "sfc/policy.hpp"
#include "sfc/verify.hpp"
#include "sfc/workload.hpp"

namespace sfc {

struct SimConfig {
  int horizon = 200;
  int episodes = 700;
  std::size_t k_paths = 8;
  Masking masking = Masking::Feasible;
  ConstraintParams params;
  WorkloadConfig workload;
  DqnConfig dqn;
  std::uint64_t seed = 1;             // training stream + agent initialization
  std::uint64_t eval_seed_base = 1000003;
  int eval_seeds = 20;
  bool audit = true;

  void validate() const {
    if (horizon < 1) throw ConfigError("sim.horizon must be >= 1");
    if (episodes < 1) throw ConfigError("sim.episodes must be >= 1");
    if (k_paths < 1) throw ConfigError("sim.k_paths must be >= 1");
    if (!(params.tau > 0.0)) throw ConfigError("sim.tau must be positive");
    if (!(params.theta > 0.0 && params.theta < 1.0)) throw ConfigError("sim.theta must lie in (0,1)");
    if (params.budget_factor < 0) throw ConfigError("sim.budget_factor must be >= 0");
    if (eval_seeds < 1) throw ConfigError("sim.eval_seeds must be >= 1");
    WorkloadConfig w = workload;
    w.horizon = horizon;
    w.validate();
    dqn.validate();
  }

  WorkloadConfig workload_for(std::uint64_t stream_seed) const {
    WorkloadConfig w = workload;
    w.horizon = horizon;
    w.seed = stream_seed;
    return w;
  }

  PolicyContext context() const { return PolicyContext{norms_for(workload), params, k_paths, masking}; }

  std::uint64_t training_seed(int episode) const { return mix_seed(seed, static_cast<std::uint64_t>(episode)); }
  std::uint64_t evaluation_seed(int i) const { return mix_seed(eval_seed_base, static_cast<std::uint64_t>(i)); }
};

struct EpisodeMetrics {
  int episode = 0;
  std::uint64_t seed = 0;
  int offered = 0;
  int accepted = 0;
  std::map<RejectReason, int> rejected{{RejectReason::PolicyReject, 0},
                                       {RejectReason::ConfigInfeasible, 0},
                                       {RejectReason::PatternInfeasible, 0},
                                       {RejectReason::NoCandidatePath, 0}};
  double total_profit = 0.0;
  double path_loss_sum = 0.0;
  int path_loss_count = 0;
  double pattern_loss_sum = 0.0;
  int pattern_loss_count = 0;
  double runtime_s = 0.0;

  int rejected_total() const {
    int n = 0;
    for (const auto& [r, c] : rejected) n += c;
    return n;
  }
  double acceptance_ratio() const { return offered == 0 ? 0.0 : static_cast<double>(accepted) / offered; }
  double mean_loss_path() const {
    return path_loss_count ? path_loss_sum / path_loss_count : std::numeric_limits<double>::quiet_NaN();
  }
  double mean_loss_pattern() const {
    return pattern_loss_count ? pattern_loss_sum / pattern_loss_count : std::numeric_limits<double>::quiet_NaN();
  }
};

// ---------------------------------------------------------------------------
// CSV

/// Shortest round-trip decimal form; independent of the C locale.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline const char* kMetricsHeader =
    "episode,seed,offered,accepted,rejected_policy,rejected_config,rejected_pattern,rejected_nopath,"
    "acceptance_ratio,total_profit,mean_loss_path,mean_loss_pattern";

inline std::string metrics_row(const EpisodeMetrics& m) {
  std::string s = std::to_string(m.episode) + "," + std::to_string(m.seed) + "," + std::to_string(m.offered) + "," +
                  std::to_string(m.accepted) + "," + std::to_string(m.rejected.at(RejectReason::PolicyReject)) + "," +
                  std::to_string(m.rejected.at(RejectReason::ConfigInfeasible)) + "," +
                  std::to_string(m.rejected.at(RejectReason::PatternInfeasible)) + "," +
                  std::to_string(m.rejected.at(RejectReason::NoCandidatePath)) + ",";
  s += format_double(m.acceptance_ratio()) + "," + format_double(m.total_profit) + "," +
       format_double(m.mean_loss_path()) + "," + format_double(m.mean_loss_pattern());
  return s;
}

// ---------------------------------------------------------------------------
// Audit

struct DecisionRecord {
  SfcRequest request;
  std::optional<Deployment> deployment;
  double reward = 0.0;
};

/// Replays an episode's decision log through the naive accountant and
/// checker, then sweeps every slot of every accepted lifetime. Throws
/// SimulationInvariantError on any discrepancy.
inline void audit_episode(const NetworkGraph& g, const std::vector<DecisionRecord>& log, const ConstraintParams& params,
                          double reported_profit) {
  auto fail = [](const std::string& what) { throw SimulationInvariantError("audit: " + what); };

  verify::NaiveAccountant acct(g);
  std::vector<const DecisionRecord*> live;
  double profit = 0.0;
  int horizon_end = 0;
  for (const DecisionRecord& rec : log) {
    const int t = rec.request.arrival;
    std::erase_if(live, [&](const DecisionRecord* d) {
      if (d->request.departure > t) return false;
      acct.add(d->request, *d->deployment, -1);
      return true;
    });
    if (!rec.deployment) {
      if (rec.reward != 0.0) fail("rejected request " + to_string(rec.request.id) + " carries a reward");
      continue;
    }
    const auto verdict = verify::naive_check(g, acct, rec.request, *rec.deployment, params);
    if (!verdict.feasible()) fail("accepted request " + to_string(rec.request.id) + " violates a constraint");
    int base = 0, extra = 0;
    for (const VnfAllocation& a : rec.deployment->allocations) {
      base += a.base;
      extra += a.boost + a.replicas;
    }
    const double expected = rec.request.bandwidth * base * (rec.request.departure - rec.request.arrival) *
                            (static_cast<double>(base) / (base + extra));
    if (std::abs(expected - rec.reward) > 1e-9 * std::max(1.0, expected))
      fail("reward of " + to_string(rec.request.id) + " does not match its deployment");
    profit += rec.reward;
    acct.add(rec.request, *rec.deployment, +1);
    if (!acct.within_capacity()) fail("capacity exceeded after admitting " + to_string(rec.request.id));
    live.push_back(&rec);
    horizon_end = std::max(horizon_end, rec.request.departure);
  }
  for (const DecisionRecord* d : live) acct.add(d->request, *d->deployment, -1);
  if (!acct.idle()) fail("resources not restored after drain");
  if (std::abs(profit - reported_profit) > 1e-9 * std::max(1.0, profit)) fail("total profit mismatch");

  // Slot sweep over the half-open lifetimes [arrival, departure).
  std::vector<const DecisionRecord*> accepted;
  for (const DecisionRecord& rec : log)
    if (rec.deployment) accepted.push_back(&rec);
  for (int t = 0; t < horizon_end; ++t) {
    verify::NaiveAccountant at(g);
    for (const DecisionRecord* d : accepted)
      if (d->request.arrival <= t && t < d->request.departure) at.add(d->request, *d->deployment, +1);
    if (!at.within_capacity()) fail("capacity exceeded at slot " + std::to_string(t));
  }
}

// ---------------------------------------------------------------------------
// Episodes

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<DecisionRecord> log;
};

/// Runs one episode over the stream generated from `seed`. In train mode,
/// each agent's transitions are threaded so that s' is the next observation
/// that agent sees; the last one is terminal.
inline EpisodeResult run_episode_logged(const NetworkGraph& g, AgentBundle& bundle, const SimConfig& cfg,
                                        std::uint64_t seed, int episode = 0) {
  const auto started = std::chrono::steady_clock::now();
  const auto stream = generate_stream(cfg.workload_for(seed), g);
  ResourceLedger ledger(g);
  const bool training = bundle.mode() == Mode::Train;

  EpisodeResult res;
  EpisodeMetrics& m = res.metrics;
  m.episode = episode;
  m.seed = seed;
  m.offered = static_cast<int>(stream.size());

  std::map<std::string, AgentStep> pending;
  auto record_loss = [&](const std::string& agent, std::optional<double> loss) {
    if (!loss) return;
    if (agent == path_agent_id()) {
      m.path_loss_sum += *loss;
      ++m.path_loss_count;
    } else {
      m.pattern_loss_sum += *loss;
      ++m.pattern_loss_count;
    }
  };

  std::size_t next = 0;
  for (int t = 0; t < cfg.horizon; ++t) {
    ledger.release_expired(t);
    for (; next < stream.size() && stream[next].arrival == t; ++next) {
      const SfcRequest& r = stream[next];
      PlacementOutcome out = decide(bundle, ledger, g, r);
      if (out.accepted()) {
        ++m.accepted;
        m.total_profit += out.reward;
      } else {
        ++m.rejected[out.reason];
      }
      if (training) {
        for (AgentStep& step : out.steps) {
          auto it = pending.find(step.agent);
          if (it != pending.end()) {
            AgentStep& prev = it->second;
            DqnAgent* agent = bundle.agent(step.agent);
            record_loss(step.agent, agent->remember({std::move(prev.state), prev.action, prev.reward, step.state,
                                                     false, step.mask}));
            prev = std::move(step);
          } else {
            pending.emplace(step.agent, std::move(step));
          }
        }
      }
      if (cfg.audit) res.log.push_back({r, out.deployment, out.reward});
    }
  }
  if (training) {
    for (auto& [id, step] : pending) {
      DqnAgent* agent = bundle.agent(id);
      std::vector<double> s = step.state;
      record_loss(id, agent->remember({std::move(step.state), step.action, step.reward, std::move(s), true, {}}));
    }
  }
  ledger.release_expired(std::numeric_limits<int>::max());
  if (!ledger.active().empty() || !ledger.same_residuals(ResourceLedger(g)))
    throw SimulationInvariantError("ledger not restored after drain");
  if (m.accepted + m.rejected_total() != m.offered) throw SimulationInvariantError("request accounting mismatch");
  if (cfg.audit) audit_episode(g, res.log, cfg.params, m.total_profit);
  m.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return res;
}

inline EpisodeMetrics run_episode(const NetworkGraph& g, AgentBundle& bundle, const SimConfig& cfg, std::uint64_t seed,
                                  int episode = 0) {
  return run_episode_logged(g, bundle, cfg, seed, episode).metrics;
}

// ---------------------------------------------------------------------------
// Training and evaluation

struct TrainingResult {
  AgentBundle bundle;
  std::vector<EpisodeMetrics> episodes;
};

inline DqnConfig training_dqn_config(const SimConfig& cfg) {
  DqnConfig d = cfg.dqn;
  d.seed = mix_seed(cfg.seed, cfg.dqn.seed);
  return d;
}

/// Trains a fresh RL+RL bundle for cfg.episodes episodes.
inline TrainingResult run_training(const NetworkGraph& g, const SimConfig& cfg,
                                   const std::function<void(const EpisodeMetrics&)>& on_episode = {}) {
  cfg.validate();
  AgentBundle bundle(kRlRl, g, cfg.context());
  bundle.create_agents(training_dqn_config(cfg));
  bundle.set_mode(Mode::Train);
  TrainingResult result{bundle, {}};
  for (int e = 0; e < cfg.episodes; ++e) {
    result.bundle.set_epsilon(cfg.dqn.epsilon(e));
    result.episodes.push_back(run_episode(g, result.bundle, cfg, cfg.training_seed(e), e));
    if (on_episode) on_episode(result.episodes.back());
  }
  result.bundle.set_mode(Mode::Eval);
  result.bundle.set_epsilon(0.0);
  return result;
}

struct EvaluationSummary {
  std::string bundle;
  int seeds = 0;
  double mean_profit = 0.0;
  double std_profit = 0.0;
  double mean_acceptance = 0.0;
  double std_acceptance = 0.0;
  std::vector<EpisodeMetrics> per_seed;
};

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

/// Greedy (no exploration, no learning) runs over n_seeds evaluation
/// streams. Sample standard deviations.
inline EvaluationSummary run_evaluation(const NetworkGraph& g, const AgentBundle& bundle, const SimConfig& cfg,
                                        int n_seeds) {
  if (n_seeds < 1) throw ConfigError("evaluation needs at least one seed");
  if (bundle.kind().path == Role::RL && !bundle.path_agent())
    throw CheckpointMissingError("bundle " + bundle_name(bundle.kind()) + " has no path agent weights");
  if (bundle.kind().pattern == Role::RL && !bundle.pattern_agent(2, 2))
    throw CheckpointMissingError("bundle " + bundle_name(bundle.kind()) + " has no pattern agent weights");
  AgentBundle eval = bundle;
  eval.set_mode(Mode::Eval);
  eval.set_epsilon(0.0);
  EvaluationSummary s;
  s.bundle = bundle_name(bundle.kind());
  s.seeds = n_seeds;
  std::vector<double> profits, ratios;
  for (int i = 0; i < n_seeds; ++i) {
    s.per_seed.push_back(run_episode(g, eval, cfg, cfg.evaluation_seed(i), i));
    profits.push_back(s.per_seed.back().total_profit);
    ratios.push_back(s.per_seed.back().acceptance_ratio());
  }
  std::tie(s.mean_profit, s.std_profit) = mean_std(profits);
  std::tie(s.mean_acceptance, s.std_acceptance) = mean_std(ratios);
  return s;
}

}  // namespace sfc
