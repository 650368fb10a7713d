#pragma once

// The cascading decision pipeline: path agent -> VNF configuration ->
// pattern agent. Path and pattern roles are either DQN agents or the
// baseline heuristics.

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfc/encoding.hpp"
#include "sfc/error.hpp"
#include "sfc/feasibility.hpp"
#include "sfc/learn.hpp"
#include "sfc/network.hpp"
#include "sfc/patterns.hpp"
#include "sfc/workload.hpp"

namespace sfc {

enum class Role { Heuristic, RL };
enum class Mode { Train, Eval };

struct BundleKind {
  Role path = Role::Heuristic;
  Role pattern = Role::Heuristic;
  bool operator==(const BundleKind&) const = default;
};

inline constexpr BundleKind kRlRl{Role::RL, Role::RL};
inline constexpr BundleKind kRlH{Role::RL, Role::Heuristic};
inline constexpr BundleKind kHRl{Role::Heuristic, Role::RL};
inline constexpr BundleKind kHH{Role::Heuristic, Role::Heuristic};

inline std::string bundle_name(BundleKind k) {
  return std::string(k.path == Role::RL ? "RL" : "H") + "+" + (k.pattern == Role::RL ? "RL" : "H");
}

/// Accepts "RL+RL", "RL+H", "H+RL" and "H+H" (spaces around '+' ignored).
inline std::optional<BundleKind> parse_bundle(std::string name) {
  std::erase(name, ' ');
  for (BundleKind k : {kRlRl, kRlH, kHRl, kHH})
    if (bundle_name(k) == name) return k;
  return std::nullopt;
}

enum class RejectReason { PolicyReject, NoCandidatePath, ConfigInfeasible, PatternInfeasible };

inline std::string to_string(RejectReason r) {
  switch (r) {
    case RejectReason::PolicyReject: return "policy_reject";
    case RejectReason::NoCandidatePath: return "no_candidate_path";
    case RejectReason::ConfigInfeasible: return "config_infeasible";
    case RejectReason::PatternInfeasible: return "pattern_infeasible";
  }
  return "?";
}

inline std::string path_agent_id() { return "path"; }
inline std::string pattern_agent_id(int m, int n) {
  return "pattern_m" + std::to_string(m) + "_n" + std::to_string(n);
}

/// One agent decision awaiting its successor state.
struct AgentStep {
  std::string agent;
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  ActionMask mask;  // actions that were allowed in `state`
};

struct PlacementOutcome {
  std::optional<Deployment> deployment;  // set on Accept
  RejectReason reason = RejectReason::PolicyReject;
  double reward = 0.0;
  std::vector<AgentStep> steps;

  bool accepted() const { return deployment.has_value(); }
};

/// Profit of one accepted request: b * C * T_dur * eta, where
/// eta = C / (C + extra cores).
inline double penalty_factor(const std::vector<VnfAllocation>& allocs) {
  int base = 0;
  for (const VnfAllocation& a : allocs) base += a.base;
  return static_cast<double>(base) / static_cast<double>(base + extra_cores(allocs));
}

inline double compute_reward(const SfcRequest& r, const std::vector<VnfAllocation>& allocs) {
  int base = 0;
  for (const VnfAllocation& a : allocs) base += a.base;
  return r.bandwidth * base * r.duration() * penalty_factor(allocs);
}

/// Path baseline: among candidates whose every link can carry the request,
/// the one with the most residual cores on its compute nodes. Returns the
/// 1-based candidate index, or 0 (reject) if none fits.
inline std::size_t heuristic_path(const std::vector<CandidatePath>& candidates, const ResourceLedger& ledger,
                                  const SfcRequest& r) {
  const BandwidthUnits need = to_units(r.bandwidth);
  std::size_t best = 0;
  long best_cores = -1;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    bool fits = true;
    for (LinkIndex l : candidates[i].links) fits = fits && ledger.residual_bandwidth_units(l) >= need;
    if (!fits) continue;
    long cores = 0;
    for (NodeIndex n : candidates[i].compute_nodes) cores += ledger.residual_cores(n);
    if (cores > best_cores) {
      best_cores = cores;
      best = i + 1;
    }
  }
  return best;
}

/// Pattern baseline: first fit along the path with a cursor that never
/// moves back, so chain order is preserved.
inline std::optional<Pattern> heuristic_pattern(const CandidatePath& path, const std::vector<VnfAllocation>& allocs,
                                                const ResourceLedger& ledger) {
  std::vector<int> residual;
  for (NodeIndex n : path.compute_nodes) residual.push_back(ledger.residual_cores(n));
  Pattern p{std::vector<int>(path.m(), 0)};
  std::size_t cursor = 0;
  for (const VnfAllocation& a : allocs) {
    while (cursor < residual.size() && residual[cursor] < a.total()) ++cursor;
    if (cursor == residual.size()) return std::nullopt;
    residual[cursor] -= a.total();
    ++p.counts[cursor];
  }
  return p;
}

inline std::string path_action_space(std::size_t k) { return "path:reject+" + std::to_string(k); }
inline std::string pattern_action_space(int m, int n) {
  return "pattern:m=" + std::to_string(m) + ",n=" + std::to_string(n) + ",count=" + std::to_string(pattern_count(n, m));
}

/// Which actions an RL agent may pick. Structural allows every existing
/// candidate path and every pattern; Feasible additionally drops paths with
/// no feasible completion and patterns that fail check_feasible.
enum class Masking { Structural, Feasible };

inline std::string to_string(Masking m) { return m == Masking::Feasible ? "feasible" : "structural"; }

inline std::optional<Masking> parse_masking(const std::string& s) {
  if (s == "structural") return Masking::Structural;
  if (s == "feasible") return Masking::Feasible;
  return std::nullopt;
}

/// Everything a bundle needs to know about the scenario it runs in.
struct PolicyContext {
  EncodingNorms norms;
  ConstraintParams params;
  std::size_t k_paths = 8;
  Masking masking = Masking::Feasible;
};

class AgentBundle {
 public:
  AgentBundle(BundleKind kind, const NetworkGraph& g, PolicyContext ctx) : kind_(kind), ctx_(std::move(ctx)) {
    if (ctx_.k_paths < 1) throw ConfigError("k_paths must be >= 1");
    for (NodeIndex s : g.nodes_of(NodeKind::Source)) {
      for (NodeIndex d : g.nodes_of(NodeKind::Destination)) {
        try {
          paths_[{s, d}] = candidate_paths(g, s, d, ctx_.k_paths);
        } catch (const NoPathError&) {
          paths_[{s, d}] = {};
        }
      }
    }
    state_layout_ = state_layout(g.node_count(), g.link_count(), ctx_.norms.v_max);
    pattern_layout_ = pattern_layout(g.node_count(), g.link_count(), ctx_.norms.v_max);
  }

  BundleKind kind() const { return kind_; }
  const PolicyContext& context() const { return ctx_; }
  Mode mode() const { return mode_; }
  double epsilon() const { return epsilon_; }
  void set_mode(Mode m) { mode_ = m; }
  void set_epsilon(double e) { epsilon_ = e; }

  const std::vector<CandidatePath>& paths(NodeIndex src, NodeIndex dst) const {
    auto it = paths_.find({src, dst});
    static const std::vector<CandidatePath> none;
    return it == paths_.end() ? none : it->second;
  }

  const ObservationLayout& state_layout_desc() const { return state_layout_; }
  const ObservationLayout& pattern_layout_desc() const { return pattern_layout_; }

  /// Creates fresh (untrained) agents for every RL role.
  void create_agents(const DqnConfig& cfg) {
    if (kind_.path == Role::RL)
      path_agent_ = std::make_shared<DqnAgent>(path_agent_id(), path_action_space(ctx_.k_paths), state_layout_.hash(),
                                               static_cast<int>(state_layout_.size()),
                                               static_cast<int>(ctx_.k_paths + 1), cfg);
    if (kind_.pattern == Role::RL) {
      for (int m = static_cast<int>(kMinPathCompute); m <= static_cast<int>(kMaxPathCompute); ++m)
        for (int n = static_cast<int>(kMinChainLength); n <= static_cast<int>(kMaxChainLength); ++n)
          pattern_agents_[{m, n}] = std::make_shared<DqnAgent>(
              pattern_agent_id(m, n), pattern_action_space(m, n), pattern_layout_.hash(),
              static_cast<int>(pattern_layout_.size()), static_cast<int>(pattern_count(n, m)), cfg);
    }
  }

  /// Loads every RL role from `dir`; CheckpointMissingError if any is absent.
  void load_agents(const DqnConfig& cfg, const std::filesystem::path& dir) {
    create_agents(cfg);
    for (auto& agent : agents()) agent->load(dir / (agent->id() + ".ckpt"));
  }

  void save_agents(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& agent : agents()) agent->save(dir / (agent->id() + ".ckpt"));
  }

  /// A bundle of another kind reusing this bundle's trained agents.
  AgentBundle with_kind(BundleKind kind) const {
    AgentBundle b = *this;
    b.kind_ = kind;
    if (kind.path == Role::Heuristic) b.path_agent_.reset();
    else if (!path_agent_) throw CheckpointMissingError("no trained path agent available");
    if (kind.pattern == Role::Heuristic) b.pattern_agents_.clear();
    else if (pattern_agents_.empty()) throw CheckpointMissingError("no trained pattern agents available");
    return b;
  }

  std::vector<std::shared_ptr<DqnAgent>> agents() const {
    std::vector<std::shared_ptr<DqnAgent>> out;
    if (path_agent_) out.push_back(path_agent_);
    for (const auto& [key, a] : pattern_agents_) out.push_back(a);
    return out;
  }

  DqnAgent* agent(const std::string& id) const {
    for (const auto& a : agents())
      if (a->id() == id) return a.get();
    return nullptr;
  }

  DqnAgent* path_agent() const { return path_agent_.get(); }
  DqnAgent* pattern_agent(int m, int n) const {
    auto it = pattern_agents_.find({m, n});
    return it == pattern_agents_.end() ? nullptr : it->second.get();
  }

 private:
  BundleKind kind_;
  PolicyContext ctx_;
  Mode mode_ = Mode::Eval;
  double epsilon_ = 0.0;
  std::map<std::pair<NodeIndex, NodeIndex>, std::vector<CandidatePath>> paths_;
  ObservationLayout state_layout_;
  ObservationLayout pattern_layout_;
  std::shared_ptr<DqnAgent> path_agent_;
  std::map<std::pair<int, int>, std::shared_ptr<DqnAgent>> pattern_agents_;
};

namespace detail {
inline std::size_t choose(DqnAgent& agent, const AgentBundle& bundle, const std::vector<double>& state,
                          const ActionMask& mask) {
  if (bundle.mode() == Mode::Train) return agent.act(state, bundle.epsilon(), mask);
  return agent.greedy(state, mask);
}
}  // namespace detail

/// True when the path carries the request's bandwidth, the configuration
/// heuristic succeeds on it, and some pattern passes check_feasible.
inline bool has_feasible_completion(const ResourceLedger& ledger, const SfcRequest& r, const CandidatePath& path,
                                    const ConstraintParams& params) {
  const BandwidthUnits need = to_units(r.bandwidth);
  for (LinkIndex l : path.links)
    if (ledger.residual_bandwidth_units(l) < need) return false;
  const auto allocs = configure_vnfs(r, path, params);
  if (!allocs) return false;
  for (const Pattern& p : enumerate_patterns(static_cast<int>(r.size()), static_cast<int>(path.m())))
    if (check_feasible(ledger, r, Deployment{true, path, p, *allocs}, params).feasible()) return true;
  return false;
}

/// Runs the cascade for one arriving request. On Accept the deployment is
/// reserved in `ledger`. Rejections carry reward 0.
inline PlacementOutcome decide(AgentBundle& bundle, ResourceLedger& ledger, const NetworkGraph& g,
                               const SfcRequest& r) {
  PlacementOutcome out;
  const auto& candidates = bundle.paths(r.src, r.dst);
  if (candidates.empty()) {
    out.reason = RejectReason::NoCandidatePath;
    return out;
  }
  const auto& ctx = bundle.context();
  Observation state = encode_state(ledger, g, r, ctx.norms);

  std::size_t action;
  if (DqnAgent* agent = bundle.path_agent()) {
    ActionMask mask = prefix_mask(ctx.k_paths + 1, candidates.size() + 1);
    if (ctx.masking == Masking::Feasible)
      for (std::size_t i = 0; i < candidates.size(); ++i)
        mask[i + 1] = has_feasible_completion(ledger, r, candidates[i], ctx.params);
    action = detail::choose(*agent, bundle, state.values, mask);
    out.steps.push_back({agent->id(), std::move(state.values), static_cast<int>(action), 0.0, std::move(mask)});
  } else {
    action = heuristic_path(candidates, ledger, r);
  }
  if (action == 0) {
    out.reason = RejectReason::PolicyReject;
    return out;
  }
  const CandidatePath& path = candidates[action - 1];

  auto allocs = configure_vnfs(r, path, ctx.params);
  if (!allocs) {
    out.reason = RejectReason::ConfigInfeasible;
    return out;
  }

  const int m = static_cast<int>(path.m());
  const int n = static_cast<int>(r.size());
  std::optional<Pattern> pattern;
  if (DqnAgent* agent = bundle.pattern_agent(m, n)) {
    const auto patterns = enumerate_patterns(n, m);
    ActionMask mask;
    if (ctx.masking == Masking::Feasible) {
      mask.assign(patterns.size(), 0);
      for (std::size_t p = 0; p < patterns.size(); ++p)
        mask[p] = check_feasible(ledger, r, Deployment{true, path, patterns[p], *allocs}, ctx.params).feasible();
      if (std::find(mask.begin(), mask.end(), 1) == mask.end()) {
        out.reason = RejectReason::PatternInfeasible;
        return out;
      }
    }
    Observation pobs = encode_pattern_observation(ledger, g, r, path, *allocs, ctx.norms);
    const std::size_t idx = detail::choose(*agent, bundle, pobs.values, mask);
    out.steps.push_back({agent->id(), std::move(pobs.values), static_cast<int>(idx), 0.0, std::move(mask)});
    pattern = patterns.at(idx);
  } else {
    pattern = heuristic_pattern(path, *allocs, ledger);
  }
  if (!pattern) {
    out.reason = RejectReason::PatternInfeasible;
    return out;
  }

  Deployment d{true, path, *pattern, *allocs};
  if (!check_feasible(ledger, r, d, ctx.params).feasible()) {
    out.reason = RejectReason::PatternInfeasible;
    return out;
  }
  reserve(ledger, r, d);
  out.reward = compute_reward(r, d.allocations);
  for (AgentStep& s : out.steps) s.reward = out.reward;
  out.deployment = std::move(d);
  return out;
}

}  // namespace sfc
