#pragma once

// Edge network graph, candidate path enumeration and the residual
// resource ledger.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sfc/error.hpp"
#include "sfc/rng.hpp"

namespace sfc {

using NodeIndex = std::size_t;
using LinkIndex = std::size_t;

enum class NodeKind { Source, Destination, Compute };

inline std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Source: return "source";
    case NodeKind::Destination: return "destination";
    case NodeKind::Compute: return "compute";
  }
  return "?";
}

struct Node {
  std::string id;
  NodeKind kind = NodeKind::Compute;
  int cores = 0;  // zero for access points

  bool is_compute() const { return kind == NodeKind::Compute; }
  bool is_access_point() const { return kind != NodeKind::Compute; }
};

/// Undirected link as written in a topology file.
struct LinkSpec {
  std::string a;
  std::string b;
  double capacity = 0.0;  // data-rate units (GB/s)
  double delay_ms = 0.0;
};

struct Link {
  NodeIndex a = 0;
  NodeIndex b = 0;
  double capacity = 0.0;
  double delay_s = 0.0;

  NodeIndex other(NodeIndex n) const { return n == a ? b : a; }
};

enum class Connectivity { Require, Allow };

/// Immutable after construction; safe to share read-only between runs.
class NetworkGraph {
 public:
  NetworkGraph(std::vector<Node> nodes, const std::vector<LinkSpec>& links,
               Connectivity connectivity = Connectivity::Require)
      : nodes_(std::move(nodes)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      if (n.id.empty()) throw ValidationError("node #" + std::to_string(i) + " has an empty id");
      if (!index_.emplace(n.id, i).second) throw ValidationError("duplicate node id '" + n.id + "'");
      if (n.is_compute() && n.cores < 1)
        throw ValidationError("compute node '" + n.id + "' must have at least one core");
      if (n.is_access_point() && n.cores != 0)
        throw ValidationError("access point '" + n.id + "' cannot have cores");
    }
    adjacency_.resize(nodes_.size());
    for (const LinkSpec& spec : links) {
      const std::string name = spec.a + "-" + spec.b;
      auto a = find(spec.a);
      auto b = find(spec.b);
      if (!a) throw ValidationError("link " + name + " references unknown node '" + spec.a + "'");
      if (!b) throw ValidationError("link " + name + " references unknown node '" + spec.b + "'");
      if (*a == *b) throw ValidationError("link " + name + " is a self loop");
      if (!(spec.capacity > 0.0) || !std::isfinite(spec.capacity))
        throw ValidationError("link " + name + " has nonpositive capacity");
      if (!(spec.delay_ms > 0.0) || !std::isfinite(spec.delay_ms))
        throw ValidationError("link " + name + " has nonpositive delay");
      for (const auto& [nbr, l] : adjacency_[*a])
        if (nbr == *b) throw ValidationError("duplicate link " + name);
      const LinkIndex li = links_.size();
      links_.push_back(Link{*a, *b, spec.capacity, spec.delay_ms / 1000.0});
      adjacency_[*a].emplace_back(*b, li);
      adjacency_[*b].emplace_back(*a, li);
    }
    for (auto& adj : adjacency_)
      std::sort(adj.begin(), adj.end(), [this](const auto& x, const auto& y) {
        return nodes_[x.first].id < nodes_[y.first].id;
      });
    if (connectivity == Connectivity::Require && !connected())
      throw ValidationError("topology is not connected");
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const Node& node(NodeIndex i) const { return nodes_.at(i); }
  const Link& link(LinkIndex i) const { return links_.at(i); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return links_.size(); }

  /// Neighbours sorted by node id: (neighbour, link) pairs.
  const std::vector<std::pair<NodeIndex, LinkIndex>>& neighbors(NodeIndex n) const { return adjacency_.at(n); }

  std::optional<NodeIndex> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  NodeIndex index_of(std::string_view id) const {
    auto i = find(id);
    if (!i) throw ValidationError("unknown node '" + std::string(id) + "'");
    return *i;
  }

  std::vector<NodeIndex> nodes_of(NodeKind kind) const {
    std::vector<NodeIndex> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].kind == kind) out.push_back(i);
    return out;
  }

  std::vector<LinkSpec> link_specs() const {
    std::vector<LinkSpec> out;
    for (const Link& l : links_) out.push_back({nodes_[l.a].id, nodes_[l.b].id, l.capacity, l.delay_s * 1000.0});
    return out;
  }

 private:
  bool connected() const {
    if (nodes_.empty()) return true;
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<NodeIndex> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
      NodeIndex n = stack.back();
      stack.pop_back();
      for (const auto& [nbr, l] : adjacency_[n]) {
        if (!seen[nbr]) {
          seen[nbr] = true;
          ++count;
          stack.push_back(nbr);
        }
      }
    }
    return count == nodes_.size();
  }

  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<std::pair<NodeIndex, LinkIndex>>> adjacency_;
  std::unordered_map<std::string, NodeIndex> index_;
};

// ---------------------------------------------------------------------------
// Topology files
//
//   {
//     "nodes": [ {"id": "S1", "kind": "source"},
//                {"id": "D1", "kind": "destination"},
//                {"id": "C1", "kind": "compute", "cores": 32} ],
//     "links": [ {"a": "S1", "b": "C1", "capacity": 10, "delay_ms": 2.5} ]
//   }

inline NodeKind parse_node_kind(const std::string& s, const std::string& id) {
  if (s == "source") return NodeKind::Source;
  if (s == "destination") return NodeKind::Destination;
  if (s == "compute") return NodeKind::Compute;
  throw ValidationError("node '" + id + "' has unknown kind '" + s + "'");
}

inline NetworkGraph topology_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("links"))
      throw ParseError("topology must be an object with 'nodes' and 'links'");
    std::vector<Node> nodes;
    for (const auto& jn : doc.at("nodes")) {
      Node n;
      n.id = jn.at("id").get<std::string>();
      n.kind = parse_node_kind(jn.at("kind").get<std::string>(), n.id);
      n.cores = jn.value("cores", 0);
      nodes.push_back(std::move(n));
    }
    std::vector<LinkSpec> links;
    for (const auto& jl : doc.at("links")) {
      links.push_back({jl.at("a").get<std::string>(), jl.at("b").get<std::string>(), jl.at("capacity").get<double>(),
                       jl.at("delay_ms").get<double>()});
    }
    return NetworkGraph(std::move(nodes), links);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("topology: ") + e.what());
  }
}

inline NetworkGraph load_topology(std::string_view config_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(config_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("topology: ") + e.what());
  }
  return topology_from_json(doc);
}

inline NetworkGraph load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open topology file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_topology(ss.str());
}

inline nlohmann::json topology_to_json(const NetworkGraph& g) {
  nlohmann::json doc;
  doc["nodes"] = nlohmann::json::array();
  for (const Node& n : g.nodes()) {
    nlohmann::json jn{{"id", n.id}, {"kind", std::string(to_string(n.kind))}};
    if (n.is_compute()) jn["cores"] = n.cores;
    doc["nodes"].push_back(jn);
  }
  doc["links"] = nlohmann::json::array();
  for (const LinkSpec& l : g.link_specs())
    doc["links"].push_back({{"a", l.a}, {"b", l.b}, {"capacity", l.capacity}, {"delay_ms", l.delay_ms}});
  return doc;
}

inline constexpr std::uint64_t kDefaultTopologySeed = 11;

/// Three-tier topology with 2 source APs, 2 destination APs and ten
/// 32-core compute nodes. Capacities are drawn from {10, 15, 20} and
/// delays uniformly from [1, 5] ms using `seed`.
inline NetworkGraph default_topology(std::uint64_t seed, int cores_per_node = 32) {
  std::vector<Node> nodes{{"S1", NodeKind::Source, 0}, {"S2", NodeKind::Source, 0},
                          {"D1", NodeKind::Destination, 0}, {"D2", NodeKind::Destination, 0}};
  for (int i = 1; i <= 10; ++i) nodes.push_back({"C" + std::to_string(i), NodeKind::Compute, cores_per_node});
  static constexpr std::array<std::pair<const char*, const char*>, 25> kEdges{{
      {"S1", "C1"}, {"S1", "C2"}, {"S2", "C2"}, {"S2", "C3"},
      {"C1", "C4"}, {"C1", "C5"}, {"C2", "C5"}, {"C2", "C6"}, {"C3", "C6"}, {"C3", "C7"},
      {"C4", "C5"}, {"C6", "C7"},
      {"C4", "C8"}, {"C5", "C8"}, {"C5", "C9"}, {"C6", "C9"}, {"C6", "C10"}, {"C7", "C10"},
      {"C8", "D1"}, {"C9", "D1"}, {"C9", "D2"}, {"C10", "D2"},
      {"C1", "C8"}, {"C2", "C9"}, {"C3", "C10"},
  }};
  static constexpr std::array<double, 3> kCapacities{10.0, 15.0, 20.0};
  Rng rng(seed);
  std::vector<LinkSpec> links;
  for (const auto& [a, b] : kEdges) {
    const double cap = kCapacities[rng.index(kCapacities.size())];
    // Rounded to whole microseconds so the file form round-trips exactly.
    const double delay = std::round(rng.uniform(1.0, 5.0) * 1000.0) / 1000.0;
    links.push_back({a, b, cap, delay});
  }
  return NetworkGraph(std::move(nodes), links);
}

// ---------------------------------------------------------------------------
// Candidate paths

struct CandidatePath {
  std::vector<NodeIndex> nodes;          // source AP ... destination AP
  std::vector<LinkIndex> links;
  std::vector<NodeIndex> compute_nodes;  // ordered, length m
  double total_delay = 0.0;              // seconds

  std::size_t m() const { return compute_nodes.size(); }
  std::size_t hops() const { return links.size(); }
  bool operator==(const CandidatePath&) const = default;
};

inline constexpr std::size_t kMinPathCompute = 2;
inline constexpr std::size_t kMaxPathCompute = 4;

inline std::string describe(const NetworkGraph& g, const CandidatePath& p) {
  std::string s;
  for (NodeIndex n : p.nodes) {
    if (!s.empty()) s += '-';
    s += g.node(n).id;
  }
  return s;
}

/// Up to `k` simple paths from `src` to `dst` whose interior consists of
/// 2..4 compute nodes, shortest hop count first, ties broken by the
/// lexicographic sequence of node ids.
inline std::vector<CandidatePath> candidate_paths(const NetworkGraph& g, NodeIndex src, NodeIndex dst,
                                                  std::size_t k) {
  if (k < 1) throw DomainError("candidate_paths: k must be >= 1");
  if (g.node(src).kind != NodeKind::Source) throw DomainError("'" + g.node(src).id + "' is not a source AP");
  if (g.node(dst).kind != NodeKind::Destination)
    throw DomainError("'" + g.node(dst).id + "' is not a destination AP");

  std::vector<CandidatePath> found;
  std::vector<bool> on_path(g.node_count(), false);
  CandidatePath cur;
  cur.nodes.push_back(src);
  on_path[src] = true;

  // Interior nodes must be compute nodes, so depth is bounded by the
  // compute-node limit.
  auto dfs = [&](auto&& self, NodeIndex at) -> void {
    for (const auto& [nbr, li] : g.neighbors(at)) {
      if (on_path[nbr]) continue;
      if (nbr == dst) {
        if (cur.compute_nodes.size() >= kMinPathCompute) {
          CandidatePath p = cur;
          p.nodes.push_back(dst);
          p.links.push_back(li);
          found.push_back(std::move(p));
        }
        continue;
      }
      if (!g.node(nbr).is_compute() || cur.compute_nodes.size() == kMaxPathCompute) continue;
      on_path[nbr] = true;
      cur.nodes.push_back(nbr);
      cur.links.push_back(li);
      cur.compute_nodes.push_back(nbr);
      self(self, nbr);
      cur.compute_nodes.pop_back();
      cur.links.pop_back();
      cur.nodes.pop_back();
      on_path[nbr] = false;
    }
  };
  dfs(dfs, src);

  if (found.empty())
    throw NoPathError("no candidate path from '" + g.node(src).id + "' to '" + g.node(dst).id + "'");

  auto key = [&g](const CandidatePath& p) {
    std::vector<std::string_view> ids;
    for (NodeIndex n : p.nodes) ids.push_back(g.node(n).id);
    return ids;
  };
  std::sort(found.begin(), found.end(), [&](const CandidatePath& x, const CandidatePath& y) {
    if (x.hops() != y.hops()) return x.hops() < y.hops();
    return key(x) < key(y);
  });
  if (found.size() > k) found.resize(k);
  for (CandidatePath& p : found) {
    p.total_delay = 0.0;
    for (LinkIndex li : p.links) p.total_delay += g.link(li).delay_s;
  }
  return found;
}

// ---------------------------------------------------------------------------
// Resource ledger

/// Identifies a request: (source AP index, per-AP sequence number).
struct SfcId {
  int ap = 0;
  int seq = 0;
  auto operator<=>(const SfcId&) const = default;
};

inline std::string to_string(const SfcId& id) {
  return "(" + std::to_string(id.ap) + "," + std::to_string(id.seq) + ")";
}

/// Bandwidth is accounted in integer thousandths of a data-rate unit so
/// that reserve and release are exact inverses.
using BandwidthUnits = std::int64_t;
inline constexpr double kBandwidthScale = 1000.0;

inline BandwidthUnits to_units(double bandwidth) {
  return static_cast<BandwidthUnits>(std::llround(bandwidth * kBandwidthScale));
}
inline double from_units(BandwidthUnits u) { return static_cast<double>(u) / kBandwidthScale; }

struct Holding {
  std::vector<std::pair<NodeIndex, int>> cores;  // per host node
  std::vector<LinkIndex> links;
  BandwidthUnits bandwidth = 0;
  int start = 0;
  int expires = 0;  // departure slot T^beta
};

class ResourceLedger {
 public:
  explicit ResourceLedger(const NetworkGraph& g) {
    for (const Node& n : g.nodes()) {
      capacity_cores_.push_back(n.cores);
      residual_cores_.push_back(n.cores);
    }
    for (const Link& l : g.links()) {
      capacity_bw_.push_back(to_units(l.capacity));
      residual_bw_.push_back(to_units(l.capacity));
    }
  }

  int residual_cores(NodeIndex n) const { return residual_cores_.at(n); }
  int capacity_cores(NodeIndex n) const { return capacity_cores_.at(n); }
  double residual_bandwidth(LinkIndex l) const { return from_units(residual_bw_.at(l)); }
  BandwidthUnits residual_bandwidth_units(LinkIndex l) const { return residual_bw_.at(l); }
  double capacity_bandwidth(LinkIndex l) const { return from_units(capacity_bw_.at(l)); }
  std::size_t node_count() const { return residual_cores_.size(); }
  std::size_t link_count() const { return residual_bw_.size(); }

  const std::map<SfcId, Holding>& active() const { return active_; }
  bool is_active(const SfcId& id) const { return active_.contains(id); }

  /// Throws CapacityError (leaving the ledger untouched) if any residual
  /// would go negative.
  void reserve(const SfcId& id, Holding h) {
    if (active_.contains(id)) throw CapacityError("SFC " + to_string(id) + " is already active");
    std::vector<int> cores = residual_cores_;
    for (const auto& [n, c] : h.cores) {
      if (c < 0) throw CapacityError("negative core demand");
      cores.at(n) -= c;
      if (cores[n] < 0) throw CapacityError("node #" + std::to_string(n) + " over-committed by " + to_string(id));
    }
    for (LinkIndex l : h.links) {
      if (residual_bw_.at(l) - h.bandwidth < 0)
        throw CapacityError("link #" + std::to_string(l) + " over-committed by " + to_string(id));
    }
    residual_cores_ = std::move(cores);
    for (LinkIndex l : h.links) residual_bw_[l] -= h.bandwidth;
    active_.emplace(id, std::move(h));
  }

  void release(const SfcId& id) {
    auto it = active_.find(id);
    if (it == active_.end()) throw CapacityError("SFC " + to_string(id) + " is not active");
    for (const auto& [n, c] : it->second.cores) residual_cores_[n] += c;
    for (LinkIndex l : it->second.links) residual_bw_[l] += it->second.bandwidth;
    active_.erase(it);
  }

  /// Releases every reservation whose departure slot is <= t, in
  /// (departure, id) order. Returns the released ids.
  std::vector<SfcId> release_expired(int t) {
    std::vector<std::pair<int, SfcId>> due;
    for (const auto& [id, h] : active_)
      if (h.expires <= t) due.emplace_back(h.expires, id);
    std::sort(due.begin(), due.end());
    std::vector<SfcId> out;
    for (const auto& [when, id] : due) {
      release(id);
      out.push_back(id);
    }
    return out;
  }

  /// Residual state only; reservation bookkeeping is not compared.
  bool same_residuals(const ResourceLedger& o) const {
    return residual_cores_ == o.residual_cores_ && residual_bw_ == o.residual_bw_;
  }

 private:
  std::vector<int> capacity_cores_;
  std::vector<int> residual_cores_;
  std::vector<BandwidthUnits> capacity_bw_;
  std::vector<BandwidthUnits> residual_bw_;
  std::map<SfcId, Holding> active_;
};

}  // namespace sfc
