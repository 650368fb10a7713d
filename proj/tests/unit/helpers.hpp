#pragma once

#include <string>
#include <vector>

#include "sfc/network.hpp"
#include "sfc/workload.hpp"

namespace testing_helpers {

using namespace sfc;

/// S - A - B - C - D with optional shortcut A - C.
inline NetworkGraph line_graph(int cores = 8, double capacity = 10.0, double delay_ms = 1.0, bool shortcut = false) {
  std::vector<Node> nodes{{"S", NodeKind::Source, 0},
                          {"A", NodeKind::Compute, cores},
                          {"B", NodeKind::Compute, cores},
                          {"C", NodeKind::Compute, cores},
                          {"D", NodeKind::Destination, 0}};
  std::vector<LinkSpec> links{{"S", "A", capacity, delay_ms},
                              {"A", "B", capacity, delay_ms},
                              {"B", "C", capacity, delay_ms},
                              {"C", "D", capacity, delay_ms}};
  if (shortcut) links.push_back({"A", "C", capacity, delay_ms});
  return NetworkGraph(std::move(nodes), links);
}

inline SfcRequest make_request(const NetworkGraph& g, std::vector<int> cores, double bandwidth = 1.0,
                               int arrival = 0, int departure = 10, double reliability = 0.9,
                               double delay_bound = 1.0) {
  SfcRequest r;
  r.id = {0, 0};
  r.src = g.nodes_of(NodeKind::Source).front();
  r.dst = g.nodes_of(NodeKind::Destination).front();
  r.bandwidth = bandwidth;
  r.arrival = arrival;
  r.departure = departure;
  for (int c : cores) r.vnfs.push_back({c, 1e6});
  r.replica_flags.assign(cores.size(), false);
  r.boost_flags.assign(cores.size(), false);
  r.reliability_bound = reliability;
  r.delay_bound = delay_bound;
  return r;
}

}  // namespace testing_helpers
