#include "brwlab/graph.hpp"

#include <numeric>
#include <utility>

namespace brw {

Components strongly_connected_components(const Digraph& g) {
  // Iterative Tarjan.
  const std::size_t n = g.size();
  constexpr std::uint32_t kUnset = ~std::uint32_t{0};
  std::vector<std::uint32_t> index(n, kUnset), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<std::uint32_t> stack;
  std::vector<std::pair<std::uint32_t, std::size_t>> call;
  Components out;
  out.component.assign(n, kUnset);
  std::uint32_t counter = 0;

  for (std::uint32_t s = 0; s < n; ++s) {
    if (index[s] != kUnset) continue;
    call.emplace_back(s, g.offsets[s]);
    index[s] = low[s] = counter++;
    stack.push_back(s);
    on_stack[s] = 1;
    while (!call.empty()) {
      auto& [u, pos] = call.back();
      if (pos < g.offsets[u + 1]) {
        std::uint32_t v = g.targets[pos++];
        if (index[v] == kUnset) {
          index[v] = low[v] = counter++;
          stack.push_back(v);
          on_stack[v] = 1;
          call.emplace_back(v, g.offsets[v]);
        } else if (on_stack[v]) {
          low[u] = std::min(low[u], index[v]);
        }
        continue;
      }
      std::uint32_t done = u;
      call.pop_back();
      if (!call.empty()) {
        std::uint32_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
      if (low[done] == index[done]) {
        auto id = static_cast<std::uint32_t>(out.members.size());
        out.members.emplace_back();
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          out.component[w] = id;
          out.members.back().push_back(w);
        } while (w != done);
      }
    }
  }
  return out;
}

std::size_t component_period(const Digraph& g, const Components& c,
                             std::uint32_t root) {
  // BFS levels inside the component; the period is the gcd over internal
  // edges u->v of level(u) + 1 - level(v).
  const std::uint32_t comp = c.component[root];
  std::vector<long long> level(g.size(), -1);
  std::vector<std::uint32_t> queue{root};
  level[root] = 0;
  std::size_t period = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    std::uint32_t u = queue[head];
    for (const std::uint32_t* it = g.begin(u); it != g.end(u); ++it) {
      std::uint32_t v = *it;
      if (c.component[v] != comp) continue;
      if (level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      } else {
        long long d = level[u] + 1 - level[v];
        period = std::gcd(period, static_cast<std::size_t>(d < 0 ? -d : d));
      }
    }
  }
  return period;
}

std::vector<char> reachable_from(const Digraph& g, std::uint32_t source) {
  std::vector<char> seen(g.size(), 0);
  std::vector<std::uint32_t> queue{source};
  seen[source] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    std::uint32_t u = queue[head];
    for (const std::uint32_t* it = g.begin(u); it != g.end(u); ++it)
      if (!seen[*it]) {
        seen[*it] = 1;
        queue.push_back(*it);
      }
  }
  return seen;
}

}  // namespace brw
