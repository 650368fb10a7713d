#pragma once

// Constraint engine: bandwidth, compute, reliability and end-to-end delay
// checks for a concrete deployment, plus the greedy VNF configuration
// heuristic that adds replica and boost cores until the bounds hold.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sfc/error.hpp"
#include "sfc/network.hpp"
#include "sfc/patterns.hpp"
#include "sfc/workload.hpp"

namespace sfc {

struct VnfAllocation {
  int base = 1;      // c^k
  int boost = 0;     // sigma^k
  int replicas = 0;  // r^k, one core each

  int total() const { return base + boost + replicas; }
  int processing_cores() const { return base + boost; }
  bool operator==(const VnfAllocation&) const = default;
};

/// Per-VNF instance reliability and per-core speed.
struct ConstraintParams {
  double tau = 1e9;      // cycles per second per core
  double theta = 0.9997; // reliability of one VNF instance
  int budget_factor = 2; // added cores per SFC <= budget_factor * sum of base cores
};

struct Deployment {
  bool accepted = false;
  CandidatePath path;
  Pattern pattern;
  std::vector<VnfAllocation> allocations;
};

inline std::vector<VnfAllocation> base_allocations(const SfcRequest& r) {
  std::vector<VnfAllocation> out;
  for (const VnfSpec& v : r.vnfs) out.push_back(VnfAllocation{v.base_cores, 0, 0});
  return out;
}

inline int extra_cores(const std::vector<VnfAllocation>& allocs) {
  int e = 0;
  for (const VnfAllocation& a : allocs) e += a.boost + a.replicas;
  return e;
}

/// Product over VNFs of 1 - (1 - theta)^(1 + r).
inline double sfc_reliability(const std::vector<VnfAllocation>& allocs, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("VNF reliability must lie in (0,1)");
  double rel = 1.0;
  for (const VnfAllocation& a : allocs) rel *= 1.0 - std::pow(1.0 - theta, 1 + a.replicas);
  return rel;
}

/// Transmission delay of the path plus w / ((c + sigma) tau) per VNF.
/// Replica cores do not speed up processing.
inline double sfc_delay(const CandidatePath& path, const std::vector<VnfAllocation>& allocs,
                        const std::vector<double>& workloads, double tau) {
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  if (workloads.size() != allocs.size()) throw ShapeError("one workload per VNF allocation is required");
  double d = path.total_delay;
  for (std::size_t k = 0; k < allocs.size(); ++k) {
    if (allocs[k].processing_cores() < 1) throw DomainError("each VNF needs at least one processing core");
    d += workloads[k] / (allocs[k].processing_cores() * tau);
  }
  return d;
}

inline std::vector<double> workloads_of(const SfcRequest& r) {
  std::vector<double> w;
  for (const VnfSpec& v : r.vnfs) w.push_back(v.workload_cycles);
  return w;
}

inline double sfc_delay(const CandidatePath& path, const std::vector<VnfAllocation>& allocs, const SfcRequest& r,
                        double tau) {
  return sfc_delay(path, allocs, workloads_of(r), tau);
}

struct FeasibilityReport {
  bool bandwidth = false;
  bool compute = false;
  bool reliability = false;
  bool delay = false;
  double reliability_value = 0.0;
  double delay_value = 0.0;
  double min_bandwidth_headroom = 0.0;  // min over path links of residual - b
  int min_core_headroom = 0;            // min over hosts of residual - demand

  bool feasible() const { return bandwidth && compute && reliability && delay; }
};

/// Cores demanded per host node by a deployment.
inline std::map<NodeIndex, int> host_demand(const Deployment& d, std::size_t chain_length) {
  std::map<NodeIndex, int> demand;
  const auto placement = pattern_to_placement(d.pattern, d.path, chain_length);
  for (std::size_t k = 0; k < placement.size(); ++k) demand[placement[k]] += d.allocations[k].total();
  return demand;
}

inline void check_structure(const SfcRequest& r, const Deployment& d) {
  if (d.allocations.size() != r.size()) throw ShapeError("deployment needs one allocation per VNF");
  for (std::size_t k = 0; k < r.size(); ++k) {
    const VnfAllocation& a = d.allocations[k];
    if (a.base != r.vnfs[k].base_cores) throw ShapeError("allocation base cores differ from the request");
    if (a.boost < 0 || a.replicas < 0) throw ShapeError("negative extra cores");
    if (a.boost > 0 && !r.boost_flags[k]) throw ShapeError("boost cores on a VNF without the boost flag");
    if (a.replicas > 0 && !r.replica_flags[k]) throw ShapeError("replicas on a VNF without the replica flag");
  }
  if (d.path.nodes.empty() || d.path.nodes.front() != r.src || d.path.nodes.back() != r.dst)
    throw ShapeError("deployment path does not join the request's APs");
}

/// Evaluates the bandwidth, compute, reliability and delay constraints of a
/// deployment against the residuals currently held in the ledger.
inline FeasibilityReport check_feasible(const ResourceLedger& ledger, const SfcRequest& r, const Deployment& d,
                                        const ConstraintParams& params) {
  check_structure(r, d);
  FeasibilityReport rep;

  const BandwidthUnits need = to_units(r.bandwidth);
  BandwidthUnits headroom = INT64_MAX;
  for (LinkIndex l : d.path.links) headroom = std::min(headroom, ledger.residual_bandwidth_units(l) - need);
  rep.min_bandwidth_headroom = from_units(headroom);
  rep.bandwidth = headroom >= 0;

  int core_headroom = INT32_MAX;
  for (const auto& [node, cores] : host_demand(d, r.size()))
    core_headroom = std::min(core_headroom, ledger.residual_cores(node) - cores);
  rep.min_core_headroom = core_headroom;
  rep.compute = core_headroom >= 0;

  rep.reliability_value = sfc_reliability(d.allocations, params.theta);
  rep.reliability = rep.reliability_value >= r.reliability_bound;
  rep.delay_value = sfc_delay(d.path, d.allocations, r, params.tau);
  rep.delay = rep.delay_value <= r.delay_bound;
  return rep;
}

/// Greedy core addition. Starting from base cores, adds one replica core
/// (while reliability is unmet) or one boost core (while delay is unmet) to
/// the current eligible VNF, moving on to the next eligible VNF in chain
/// order whenever an addition leaves the violated bound unmet. Reliability
/// deficits are handled first. Returns nullopt when no VNF is eligible or
/// the addition budget runs out.
inline std::optional<std::vector<VnfAllocation>> configure_vnfs(const SfcRequest& r, const CandidatePath& path,
                                                                const ConstraintParams& params) {
  std::vector<VnfAllocation> allocs = base_allocations(r);
  const auto workloads = workloads_of(r);
  const int budget = params.budget_factor * r.base_core_total();

  std::vector<std::size_t> rep_eligible, boost_eligible;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (r.replica_flags[k]) rep_eligible.push_back(k);
    if (r.boost_flags[k]) boost_eligible.push_back(k);
  }
  std::size_t rep_cursor = 0, boost_cursor = 0;
  int added = 0;
  for (;;) {
    const bool rel_ok = sfc_reliability(allocs, params.theta) >= r.reliability_bound;
    const bool delay_ok = sfc_delay(path, allocs, workloads, params.tau) <= r.delay_bound;
    if (rel_ok && delay_ok) return allocs;
    if (added >= budget) return std::nullopt;
    if (!rel_ok) {
      if (rep_eligible.empty()) return std::nullopt;
      const std::size_t k = rep_eligible[rep_cursor];
      ++allocs[k].replicas;
      ++added;
      if (sfc_reliability(allocs, params.theta) < r.reliability_bound)
        rep_cursor = (rep_cursor + 1) % rep_eligible.size();
    } else {
      if (boost_eligible.empty()) return std::nullopt;
      const std::size_t k = boost_eligible[boost_cursor];
      ++allocs[k].boost;
      ++added;
      if (sfc_delay(path, allocs, workloads, params.tau) > r.delay_bound)
        boost_cursor = (boost_cursor + 1) % boost_eligible.size();
    }
  }
}

inline Holding make_holding(const SfcRequest& r, const Deployment& d) {
  Holding h;
  for (const auto& [node, cores] : host_demand(d, r.size())) h.cores.emplace_back(node, cores);
  h.links = d.path.links;
  h.bandwidth = to_units(r.bandwidth);
  h.start = r.arrival;
  h.expires = r.departure;
  return h;
}

inline void reserve(ResourceLedger& ledger, const SfcRequest& r, const Deployment& d) {
  ledger.reserve(r.id, make_holding(r, d));
}

inline void release(ResourceLedger& ledger, const SfcId& id) { ledger.release(id); }

}  // namespace sfc
