#pragma once

// Order-preserving deployment patterns: a pattern assigns the n VNFs of a
// chain to the m compute nodes of a path as a count vector.

#include <cstdint>
#include <string>
#include <vector>

#include "sfc/error.hpp"
#include "sfc/network.hpp"
#include "sfc/workload.hpp"

namespace sfc {

struct Pattern {
  std::vector<int> counts;

  std::size_t m() const { return counts.size(); }
  int n() const {
    int s = 0;
    for (int c : counts) s += c;
    return s;
  }
  auto operator<=>(const Pattern&) const = default;
};

inline std::string to_string(const Pattern& p) {
  std::string s = "[";
  for (std::size_t i = 0; i < p.counts.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(p.counts[i]);
  }
  return s + "]";
}

inline std::uint64_t binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (std::int64_t i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

/// Number of deployment patterns of n VNFs over m path nodes: choose the
/// i occupied nodes, then split the chain into i non-empty runs.
inline std::uint64_t pattern_count(int n, int m) {
  if (n < 1 || m < 1) throw DomainError("pattern_count requires n >= 1 and m >= 1");
  std::uint64_t total = 0;
  for (int i = 1; i <= std::min(m, n); ++i) total += binomial(m, i) * binomial(n - 1, i - 1);
  return total;
}

/// All count vectors of length m summing to n, in lexicographic order.
/// The position in this list is the pattern agent's action index.
inline std::vector<Pattern> enumerate_patterns(int n, int m) {
  if (n < 1 || m < 1) throw DomainError("enumerate_patterns requires n >= 1 and m >= 1");
  std::vector<Pattern> out;
  std::vector<int> counts(static_cast<std::size_t>(m), 0);
  auto fill = [&](auto&& self, std::size_t pos, int left) -> void {
    if (pos + 1 == counts.size()) {
      counts[pos] = left;
      out.push_back(Pattern{counts});
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[pos] = c;
      self(self, pos + 1, left - c);
    }
  };
  fill(fill, 0, n);
  return out;
}

/// Lexicographic index of `p` within enumerate_patterns(p.n(), p.m()).
inline std::size_t pattern_index(const Pattern& p) {
  // Count the patterns that precede p position by position.
  std::size_t index = 0;
  int left = p.n();
  for (std::size_t pos = 0; pos + 1 < p.counts.size(); ++pos) {
    const int slots_after = static_cast<int>(p.counts.size() - pos - 1);
    for (int c = 0; c < p.counts[pos]; ++c) index += binomial(left - c + slots_after - 1, slots_after - 1);
    left -= p.counts[pos];
  }
  return index;
}

/// VNF k -> hosting compute node (the y variables), preserving chain order.
inline std::vector<NodeIndex> pattern_to_placement(const Pattern& p, const CandidatePath& path,
                                                   std::size_t chain_length) {
  if (p.m() != path.m())
    throw ShapeError("pattern " + to_string(p) + " has " + std::to_string(p.m()) + " slots but path has " +
                     std::to_string(path.m()) + " compute nodes");
  for (int c : p.counts)
    if (c < 0) throw ShapeError("pattern " + to_string(p) + " has a negative count");
  if (p.n() != static_cast<int>(chain_length))
    throw ShapeError("pattern " + to_string(p) + " places " + std::to_string(p.n()) + " VNFs, chain has " +
                     std::to_string(chain_length));
  std::vector<NodeIndex> placement;
  placement.reserve(chain_length);
  for (std::size_t slot = 0; slot < p.m(); ++slot)
    for (int c = 0; c < p.counts[slot]; ++c) placement.push_back(path.compute_nodes[slot]);
  return placement;
}

inline std::vector<NodeIndex> pattern_to_placement(const Pattern& p, const CandidatePath& path,
                                                   const SfcRequest& request) {
  return pattern_to_placement(p, path, request.size());
}

/// Inverse of pattern_to_placement.
inline Pattern placement_to_pattern(const std::vector<NodeIndex>& placement, const CandidatePath& path) {
  Pattern p{std::vector<int>(path.m(), 0)};
  std::size_t slot = 0;
  for (NodeIndex host : placement) {
    while (slot < path.m() && path.compute_nodes[slot] != host) ++slot;
    if (slot == path.m()) throw ShapeError("placement is not order-preserving along the path");
    ++p.counts[slot];
  }
  return p;
}

}  // namespace sfc
