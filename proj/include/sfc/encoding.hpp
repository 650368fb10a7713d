#pragma once

// Observation vectors fed to the path and pattern agents.
//
// State layout (length 2|N| + |E| + 3 + 3 V_max):
//   residual   |N|+|E|  residual cores / capacity per node (APs fixed at 0),
//                       then residual bandwidth / capacity per link
//   endpoints  |N|      one-hot source and destination
//   scalars    3        bandwidth, duration, delay bound (min-max normalized)
//   cores      V_max    cores per VNF / core_scale, zero padded
//   replicas   V_max    replica flags
//   boosts     V_max    boost flags
// The pattern observation appends a |N| one-hot of the chosen path.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "sfc/error.hpp"
#include "sfc/feasibility.hpp"
#include "sfc/network.hpp"
#include "sfc/workload.hpp"

namespace sfc {

inline constexpr std::size_t kDefaultVmax = 4;

struct EncodingNorms {
  double bandwidth_min = 0.2;
  double bandwidth_max = 1.0;
  double duration_min = 1.0;
  double duration_max = 400.0;
  double delay_bound_min = 0.024;
  double delay_bound_max = 0.100;
  double core_scale = 16.0;
  std::size_t v_max = kDefaultVmax;
};

inline EncodingNorms norms_for(const WorkloadConfig& w) {
  EncodingNorms n;
  n.bandwidth_min = *std::min_element(w.bandwidth_menu.begin(), w.bandwidth_menu.end());
  n.bandwidth_max = *std::max_element(w.bandwidth_menu.begin(), w.bandwidth_menu.end());
  n.delay_bound_min = *std::min_element(w.delay_menu_ms.begin(), w.delay_menu_ms.end()) / 1000.0;
  n.delay_bound_max = *std::max_element(w.delay_menu_ms.begin(), w.delay_menu_ms.end()) / 1000.0;
  n.duration_max = 5.0 / w.mu;
  n.v_max = static_cast<std::size_t>(w.max_vnfs);
  return n;
}

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct ObservationLayout {
  std::vector<Segment> segments;

  std::size_t size() const { return segments.empty() ? 0 : segments.back().offset + segments.back().size; }

  const Segment& segment(const std::string& name) const {
    for (const Segment& s : segments)
      if (s.name == name) return s;
    throw ShapeError("no segment named '" + name + "'");
  }

  std::string describe() const {
    std::string s;
    for (const Segment& seg : segments) s += seg.name + ":" + std::to_string(seg.offset) + "+" + std::to_string(seg.size) + ";";
    return s;
  }

  /// FNV-1a of describe(); stored in checkpoints.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : describe()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }
};

inline ObservationLayout state_layout(std::size_t nodes, std::size_t links, std::size_t v_max) {
  ObservationLayout layout;
  std::size_t off = 0;
  auto add = [&](const char* name, std::size_t n) {
    layout.segments.push_back({name, off, n});
    off += n;
  };
  add("residual", nodes + links);
  add("endpoints", nodes);
  add("scalars", 3);
  add("cores", v_max);
  add("replicas", v_max);
  add("boosts", v_max);
  return layout;
}

inline ObservationLayout pattern_layout(std::size_t nodes, std::size_t links, std::size_t v_max) {
  ObservationLayout layout = state_layout(nodes, links, v_max);
  layout.segments.push_back({"path", layout.size(), nodes});
  return layout;
}

struct Observation {
  std::vector<double> values;
  ObservationLayout layout;
};

namespace detail {
inline double min_max(double v, double lo, double hi) {
  if (hi <= lo) return v >= hi ? 1.0 : 0.0;
  return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}
}  // namespace detail

/// Encodes network residuals and request features. `cores` gives the per-VNF
/// core counts to report (base cores before configuration, c+sigma+r after).
inline Observation encode_state(const ResourceLedger& ledger, const NetworkGraph& g, const SfcRequest& r,
                                const std::vector<int>& cores, const EncodingNorms& norms) {
  if (r.size() > norms.v_max)
    throw ShapeError("request has " + std::to_string(r.size()) + " VNFs but V_max is " + std::to_string(norms.v_max));
  if (cores.size() != r.size()) throw ShapeError("one core count per VNF is required");
  Observation obs{{}, state_layout(g.node_count(), g.link_count(), norms.v_max)};
  auto& v = obs.values;
  v.assign(obs.layout.size(), 0.0);
  std::size_t i = 0;
  for (NodeIndex n = 0; n < g.node_count(); ++n, ++i)
    if (g.node(n).is_compute()) v[i] = static_cast<double>(ledger.residual_cores(n)) / g.node(n).cores;
  for (LinkIndex l = 0; l < g.link_count(); ++l, ++i)
    v[i] = ledger.residual_bandwidth(l) / ledger.capacity_bandwidth(l);
  v[i + r.src] = 1.0;
  v[i + r.dst] = 1.0;
  i += g.node_count();
  v[i++] = detail::min_max(r.bandwidth, norms.bandwidth_min, norms.bandwidth_max);
  v[i++] = detail::min_max(r.duration(), norms.duration_min, norms.duration_max);
  v[i++] = detail::min_max(r.delay_bound, norms.delay_bound_min, norms.delay_bound_max);
  for (std::size_t k = 0; k < r.size(); ++k) {
    v[i + k] = std::min(1.0, cores[k] / norms.core_scale);
    v[i + norms.v_max + k] = r.replica_flags[k] ? 1.0 : 0.0;
    v[i + 2 * norms.v_max + k] = r.boost_flags[k] ? 1.0 : 0.0;
  }
  return obs;
}

inline Observation encode_state(const ResourceLedger& ledger, const NetworkGraph& g, const SfcRequest& r,
                                const EncodingNorms& norms) {
  std::vector<int> cores;
  for (const VnfSpec& s : r.vnfs) cores.push_back(s.base_cores);
  return encode_state(ledger, g, r, cores, norms);
}

inline std::vector<double> encode_path(const CandidatePath& path, const NetworkGraph& g) {
  std::vector<double> v(g.node_count(), 0.0);
  for (NodeIndex n : path.nodes) v.at(n) = 1.0;
  return v;
}

/// State encoded with the configured core counts, followed by the path one-hot.
inline Observation encode_pattern_observation(const ResourceLedger& ledger, const NetworkGraph& g, const SfcRequest& r,
                                              const CandidatePath& path, const std::vector<VnfAllocation>& allocs,
                                              const EncodingNorms& norms) {
  std::vector<int> cores;
  for (const VnfAllocation& a : allocs) cores.push_back(a.total());
  Observation obs = encode_state(ledger, g, r, cores, norms);
  const auto onehot = encode_path(path, g);
  obs.values.insert(obs.values.end(), onehot.begin(), onehot.end());
  obs.layout = pattern_layout(g.node_count(), g.link_count(), norms.v_max);
  return obs;
}

}  // namespace sfc
