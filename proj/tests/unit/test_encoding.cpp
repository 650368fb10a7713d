#include <gtest/gtest.h>

#include "helpers.hpp"
#include "sfc/encoding.hpp"
#include "sfc/rng.hpp"
#include "sfc/verify_suite.hpp"

using namespace sfc;
using namespace testing_helpers;

namespace {

// A..F with A a source AP and F a destination AP; seven links.
NetworkGraph six_node_graph() {
  std::vector<Node> nodes{{"A", NodeKind::Source, 0},  {"B", NodeKind::Compute, 8}, {"C", NodeKind::Compute, 8},
                          {"D", NodeKind::Compute, 8}, {"E", NodeKind::Compute, 8}, {"F", NodeKind::Destination, 0}};
  std::vector<LinkSpec> links{{"A", "B", 10, 1}, {"A", "C", 10, 1}, {"B", "C", 10, 1}, {"C", "D", 10, 1},
                              {"B", "E", 10, 1}, {"D", "E", 10, 1}, {"D", "F", 10, 1}};
  return NetworkGraph(std::move(nodes), links);
}

}  // namespace

TEST(Encoding, LengthFormula) {
  const NetworkGraph g = six_node_graph();
  EncodingNorms norms;
  norms.v_max = 3;
  const SfcRequest r = make_request(g, {1, 2});
  const Observation obs = encode_state(ResourceLedger(g), g, r, norms);
  EXPECT_EQ(obs.values.size(), 2u * 6 + 7 + 3 + 3 * 3);
  EXPECT_EQ(obs.values.size(), 31u);
  EXPECT_EQ(obs.layout.size(), 31u);
  EXPECT_EQ(obs.layout.segment("boosts").offset, 28u);
}

TEST(Encoding, LayoutOrder) {
  const ObservationLayout l = state_layout(6, 7, 4);
  const std::vector<std::string> names{"residual", "endpoints", "scalars", "cores", "replicas", "boosts"};
  ASSERT_EQ(l.segments.size(), names.size());
  std::size_t off = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    EXPECT_EQ(l.segments[i].name, names[i]);
    EXPECT_EQ(l.segments[i].offset, off);
    off += l.segments[i].size;
  }
  EXPECT_THROW(l.segment("nope"), ShapeError);
  EXPECT_NE(l.hash(), state_layout(6, 7, 3).hash());
}

TEST(Encoding, EmptyNetworkResidualsAreFull) {
  const NetworkGraph g = six_node_graph();
  const Observation obs = encode_state(ResourceLedger(g), g, make_request(g, {1, 1}), EncodingNorms{});
  const Segment& res = obs.layout.segment("residual");
  for (NodeIndex n = 0; n < g.node_count(); ++n)
    EXPECT_EQ(obs.values[res.offset + n], g.node(n).is_compute() ? 1.0 : 0.0) << g.node(n).id;
  for (LinkIndex l = 0; l < g.link_count(); ++l) EXPECT_EQ(obs.values[res.offset + g.node_count() + l], 1.0);
}

TEST(Encoding, EndpointsScalarsAndFlags) {
  const NetworkGraph g = six_node_graph();
  SfcRequest r = make_request(g, {2, 3}, 1.0, 5, 6);
  r.replica_flags = {true, false};
  r.boost_flags = {false, true};
  r.delay_bound = 0.024;
  EncodingNorms norms;
  const Observation obs = encode_state(ResourceLedger(g), g, r, norms);
  const auto at = [&](const char* seg, std::size_t i) { return obs.values[obs.layout.segment(seg).offset + i]; };
  double ones = 0;
  for (std::size_t i = 0; i < g.node_count(); ++i) ones += at("endpoints", i);
  EXPECT_EQ(ones, 2.0);
  EXPECT_EQ(at("endpoints", r.src), 1.0);
  EXPECT_EQ(at("endpoints", r.dst), 1.0);
  EXPECT_EQ(at("scalars", 0), 1.0);
  EXPECT_EQ(at("scalars", 1), 0.0);
  EXPECT_EQ(at("scalars", 2), 0.0);
  EXPECT_EQ(at("cores", 0), 2.0 / norms.core_scale);
  EXPECT_EQ(at("cores", 1), 3.0 / norms.core_scale);
  EXPECT_EQ(at("cores", 2), 0.0);
  EXPECT_EQ(at("replicas", 0), 1.0);
  EXPECT_EQ(at("replicas", 1), 0.0);
  EXPECT_EQ(at("boosts", 0), 0.0);
  EXPECT_EQ(at("boosts", 1), 1.0);
  EXPECT_EQ(at("boosts", 3), 0.0);
}

TEST(Encoding, TooManyVnfs) {
  const NetworkGraph g = six_node_graph();
  EncodingNorms norms;
  norms.v_max = 2;
  EXPECT_THROW(encode_state(ResourceLedger(g), g, make_request(g, {1, 1, 1}), norms), ShapeError);
}

TEST(Encoding, ReserveReleaseRestoresEncoding) {
  Rng rng(8);
  const NetworkGraph g = default_topology(kDefaultTopologySeed);
  ResourceLedger ledger(g);
  verify::load_background(ledger, g, rng, 6);
  const SfcRequest probe = verify::random_request(g, rng);
  const EncodingNorms norms;
  const auto before = encode_state(ledger, g, probe, norms).values;
  int changed = 0;
  for (int i = 0; i < 50; ++i) {
    SfcRequest r = verify::random_request(g, rng);
    r.id = {5, i};
    const Deployment d = verify::random_deployment(g, r, rng);
    const Holding h = make_holding(r, d);
    bool fits = true;
    for (const auto& [node, cores] : h.cores) fits = fits && ledger.residual_cores(node) >= cores;
    for (LinkIndex l : h.links) fits = fits && ledger.residual_bandwidth_units(l) >= h.bandwidth;
    if (!fits) continue;
    reserve(ledger, r, d);
    changed += encode_state(ledger, g, probe, norms).values != before;
    release(ledger, r.id);
    EXPECT_EQ(encode_state(ledger, g, probe, norms).values, before);
  }
  EXPECT_GT(changed, 0);
}

TEST(Encoding, ValuesInUnitInterval) {
  Rng rng(12);
  const NetworkGraph g = default_topology(kDefaultTopologySeed);
  for (int i = 0; i < 100; ++i) {
    ResourceLedger ledger(g);
    verify::load_background(ledger, g, rng, 10);
    const SfcRequest r = verify::random_request(g, rng);
    for (double v : encode_state(ledger, g, r, EncodingNorms{}).values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(EncodePath, SixNodeExample) {
  const NetworkGraph g = six_node_graph();
  CandidatePath p;
  p.nodes = {0, 2, 3, 5};  // A-C-D-F
  EXPECT_EQ(encode_path(p, g), (std::vector<double>{1, 0, 1, 1, 0, 1}));
  CandidatePath direct;
  direct.nodes = {0, 5};
  EXPECT_EQ(encode_path(direct, g), (std::vector<double>{1, 0, 0, 0, 0, 1}));
}

TEST(EncodePath, OnesCountEqualsPathLength) {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const NetworkGraph g = default_topology(static_cast<std::uint64_t>(i % 10 + 1));
    const auto src = g.nodes_of(NodeKind::Source);
    const auto dst = g.nodes_of(NodeKind::Destination);
    const auto paths = candidate_paths(g, src[rng.index(src.size())], dst[rng.index(dst.size())], 8);
    const CandidatePath& p = paths[rng.index(paths.size())];
    double ones = 0;
    for (double v : encode_path(p, g)) ones += v;
    EXPECT_EQ(ones, static_cast<double>(p.nodes.size()));
  }
}

TEST(PatternObservation, ConcatenatesPathAndConfiguredCores) {
  const NetworkGraph g = six_node_graph();
  SfcRequest r = make_request(g, {1, 2});
  r.replica_flags = {true, true};
  const auto path = candidate_paths(g, r.src, r.dst, 1).front();
  std::vector<VnfAllocation> allocs = base_allocations(r);
  allocs[1].replicas = 2;
  EncodingNorms norms;
  const Observation obs = encode_pattern_observation(ResourceLedger(g), g, r, path, allocs, norms);
  EXPECT_EQ(obs.values.size(), obs.layout.size());
  const Segment& seg = obs.layout.segment("path");
  EXPECT_EQ(seg.offset + seg.size, obs.values.size());
  double ones = 0;
  for (std::size_t i = 0; i < seg.size; ++i) ones += obs.values[seg.offset + i];
  EXPECT_EQ(ones, static_cast<double>(path.nodes.size()));
  EXPECT_EQ(obs.values[obs.layout.segment("cores").offset + 1], 4.0 / norms.core_scale);
}
