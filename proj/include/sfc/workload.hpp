#pragma once

// SFC request model and the stochastic request stream generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sfc/error.hpp"
#include "sfc/network.hpp"
#include "sfc/rng.hpp"

namespace sfc {

struct VnfSpec {
  int base_cores = 1;
  double workload_cycles = 1e6;
  bool operator==(const VnfSpec&) const = default;
};

struct SfcRequest {
  SfcId id;
  NodeIndex src = 0;
  NodeIndex dst = 0;
  double bandwidth = 0.0;  // data-rate units
  int arrival = 0;         // slot T^alpha
  int departure = 0;       // slot T^beta
  std::vector<VnfSpec> vnfs;
  std::vector<bool> replica_flags;
  std::vector<bool> boost_flags;
  double reliability_bound = 0.0;  // Theta
  double delay_bound = 0.0;        // Phi, seconds

  int duration() const { return departure - arrival; }
  std::size_t size() const { return vnfs.size(); }
  int base_core_total() const {
    int c = 0;
    for (const VnfSpec& v : vnfs) c += v.base_cores;
    return c;
  }
  bool operator==(const SfcRequest&) const = default;
};

inline constexpr std::size_t kMinChainLength = 2;
inline constexpr std::size_t kMaxChainLength = 4;

/// Throws ValidationError when a request breaks the data-model invariants.
inline void validate(const SfcRequest& r) {
  const std::string who = "request " + to_string(r.id);
  if (r.departure <= r.arrival) throw ValidationError(who + ": departure must follow arrival");
  if (!(r.bandwidth > 0.0)) throw ValidationError(who + ": bandwidth must be positive");
  if (r.vnfs.size() < kMinChainLength || r.vnfs.size() > kMaxChainLength)
    throw ValidationError(who + ": chain length must be in [2,4]");
  for (const VnfSpec& v : r.vnfs) {
    if (v.base_cores < 1 || v.base_cores > 4) throw ValidationError(who + ": base cores must be in [1,4]");
    if (!(v.workload_cycles > 0.0)) throw ValidationError(who + ": workload must be positive");
  }
  if (r.replica_flags.size() != r.vnfs.size() || r.boost_flags.size() != r.vnfs.size())
    throw ValidationError(who + ": flag vectors must match the chain length");
  if (!(r.reliability_bound > 0.0 && r.reliability_bound <= 1.0))
    throw ValidationError(who + ": reliability bound must be in (0,1]");
  if (!(r.delay_bound > 0.0)) throw ValidationError(who + ": delay bound must be positive");
}

struct WorkloadConfig {
  double lambda = 1.0 / 3.0;  // aggregate arrivals per slot
  double mu = 0.0125;         // departure rate; mean holding 1/mu slots
  int horizon = 200;
  std::vector<double> bandwidth_menu{0.2, 0.5, 1.0};
  int min_vnfs = 2;
  int max_vnfs = 4;
  int min_base_cores = 1;
  int max_base_cores = 4;
  std::vector<double> reliability_menu{0.99, 0.999};
  std::vector<double> delay_menu_ms{24.0, 50.0, 100.0};
  double min_workload_cycles = 1e6;
  double max_workload_cycles = 1e7;
  double flag_probability = 0.5;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(lambda > 0.0)) throw ConfigError("workload.lambda must be positive");
    if (!(mu > 0.0)) throw ConfigError("workload.mu must be positive");
    if (horizon < 1) throw ConfigError("workload.horizon must be >= 1");
    auto positive_menu = [](const std::vector<double>& menu, const char* name) {
      if (menu.empty()) throw ConfigError(std::string("workload.") + name + " must not be empty");
      for (double v : menu)
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("workload.") + name + " must be positive");
    };
    positive_menu(bandwidth_menu, "bandwidth_menu");
    positive_menu(reliability_menu, "reliability_menu");
    positive_menu(delay_menu_ms, "delay_menu_ms");
    for (double v : reliability_menu)
      if (v > 1.0) throw ConfigError("workload.reliability_menu values must be <= 1");
    if (min_vnfs < static_cast<int>(kMinChainLength) || max_vnfs > static_cast<int>(kMaxChainLength) ||
        min_vnfs > max_vnfs)
      throw ConfigError("workload VNF count range must lie within [2,4]");
    if (min_base_cores < 1 || max_base_cores > 4 || min_base_cores > max_base_cores)
      throw ConfigError("workload base core range must lie within [1,4]");
    if (!(min_workload_cycles > 0.0) || min_workload_cycles > max_workload_cycles)
      throw ConfigError("workload cycle range is invalid");
    if (!(flag_probability >= 0.0 && flag_probability <= 1.0))
      throw ConfigError("workload.flag_probability must be in [0,1]");
  }
};

/// Time-ordered request stream. Arrival counts per slot are Poisson(lambda),
/// holding times exponential(mu) rounded up to at least one slot.
inline std::vector<SfcRequest> generate_stream(const WorkloadConfig& cfg, const NetworkGraph& g) {
  cfg.validate();
  const auto sources = g.nodes_of(NodeKind::Source);
  const auto dests = g.nodes_of(NodeKind::Destination);
  if (sources.empty() || dests.empty()) throw ConfigError("topology needs at least one source and one destination AP");

  Rng rng(cfg.seed);
  std::vector<int> next_seq(sources.size(), 0);
  std::vector<SfcRequest> out;
  for (int t = 0; t < cfg.horizon; ++t) {
    const int arrivals = rng.poisson(cfg.lambda);
    for (int a = 0; a < arrivals; ++a) {
      SfcRequest r;
      const std::size_t ap = rng.index(sources.size());
      r.id = SfcId{static_cast<int>(ap), next_seq[ap]++};
      r.src = sources[ap];
      r.dst = dests[rng.index(dests.size())];
      r.bandwidth = cfg.bandwidth_menu[rng.index(cfg.bandwidth_menu.size())];
      r.arrival = t;
      const int hold = std::max(1, static_cast<int>(std::ceil(rng.exponential(cfg.mu))));
      r.departure = t + hold;
      const auto n = static_cast<std::size_t>(rng.uniform_int(cfg.min_vnfs, cfg.max_vnfs));
      for (std::size_t k = 0; k < n; ++k) {
        VnfSpec v;
        v.base_cores = static_cast<int>(rng.uniform_int(cfg.min_base_cores, cfg.max_base_cores));
        v.workload_cycles = rng.uniform(cfg.min_workload_cycles, cfg.max_workload_cycles);
        r.vnfs.push_back(v);
      }
      for (std::size_t k = 0; k < n; ++k) r.replica_flags.push_back(rng.bernoulli(cfg.flag_probability));
      for (std::size_t k = 0; k < n; ++k) r.boost_flags.push_back(rng.bernoulli(cfg.flag_probability));
      r.reliability_bound = cfg.reliability_menu[rng.index(cfg.reliability_menu.size())];
      r.delay_bound = cfg.delay_menu_ms[rng.index(cfg.delay_menu_ms.size())] / 1000.0;
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace sfc
