#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace brw {

// Directed graph on 0..n-1 in compressed row form.
struct Digraph {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> targets;

  std::size_t size() const { return offsets.size() - 1; }
  std::size_t degree(std::size_t u) const { return offsets[u + 1] - offsets[u]; }
  const std::uint32_t* begin(std::size_t u) const { return targets.data() + offsets[u]; }
  const std::uint32_t* end(std::size_t u) const { return targets.data() + offsets[u + 1]; }
};

// Strongly connected components, numbered in reverse topological order of
// the condensation (a component only reaches components with smaller ids).
struct Components {
  std::vector<std::uint32_t> component;  // per vertex
  std::vector<std::vector<std::uint32_t>> members;
};

Components strongly_connected_components(const Digraph& g);

// Period of the component containing `root`: gcd of the cycle lengths inside
// it. Returns 0 when the component has no cycle (a single vertex without a
// self-loop).
std::size_t component_period(const Digraph& g, const Components& c,
                             std::uint32_t root);

// Vertices reachable from `source` (including itself), as a mask.
std::vector<char> reachable_from(const Digraph& g, std::uint32_t source);

}  // namespace brw
