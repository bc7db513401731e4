#ifndef BON_GRAPH_METRICS_HPP
#define BON_GRAPH_METRICS_HPP

// Structural measurements over the overlay: weak/strong components, a BFS
// double-sweep diameter estimate, and degree histograms. These run every
// metrics tick, so everything here is linear in nodes + edges.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "bon/graph.hpp"
#include "bon/rng.hpp"

namespace bon {

struct ComponentLabels {
  std::vector<std::uint32_t> label;  // per node, components numbered from 0
  std::uint32_t count = 0;
};

// Weak connectivity: BFS over the union of out- and in-adjacency. Parallel
// edges do not affect the result.
inline ComponentLabels weakly_connected_components(const OverlayGraph& g) {
  const NodeId n = g.node_count();
  ComponentLabels out;
  out.label.assign(n, UINT32_MAX);
  std::vector<NodeId> queue;
  for (NodeId s = 0; s < n; ++s) {
    if (out.label[s] != UINT32_MAX) continue;
    std::uint32_t comp = out.count++;
    out.label[s] = comp;
    queue.clear();
    queue.push_back(s);
    while (!queue.empty()) {
      NodeId v = queue.back();
      queue.pop_back();
      for (const auto& h : g.out_edges(v))
        if (out.label[h.peer] == UINT32_MAX) {
          out.label[h.peer] = comp;
          queue.push_back(h.peer);
        }
      for (const auto& h : g.in_edges(v))
        if (out.label[h.peer] == UINT32_MAX) {
          out.label[h.peer] = comp;
          queue.push_back(h.peer);
        }
    }
  }
  return out;
}

// Strong connectivity via iterative Tarjan (explicit stack; recursion would
// blow the call stack on path-shaped graphs of a few thousand nodes).
inline ComponentLabels strongly_connected_components(const OverlayGraph& g) {
  const NodeId n = g.node_count();
  ComponentLabels out;
  out.label.assign(n, UINT32_MAX);

  std::vector<std::uint32_t> index(n, UINT32_MAX), lowlink(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<NodeId> stack;
  std::uint32_t next_index = 0;

  struct Frame {
    NodeId v;
    std::uint32_t edge_pos;
  };
  std::vector<Frame> call;

  for (NodeId root = 0; root < n; ++root) {
    if (index[root] != UINT32_MAX) continue;
    call.push_back({root, 0});
    while (!call.empty()) {
      Frame& f = call.back();
      NodeId v = f.v;
      if (f.edge_pos == 0) {
        index[v] = lowlink[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      bool descended = false;
      const auto& outs = g.out_edges(v);
      while (f.edge_pos < outs.size()) {
        NodeId w = outs[f.edge_pos].peer;
        ++f.edge_pos;
        if (index[w] == UINT32_MAX) {
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) lowlink[v] = std::min(lowlink[v], index[w]);
      }
      if (descended) continue;
      if (lowlink[v] == index[v]) {
        std::uint32_t comp = out.count++;
        NodeId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          out.label[w] = comp;
        } while (w != v);
      }
      call.pop_back();
      if (!call.empty()) {
        NodeId parent = call.back().v;
        lowlink[parent] = std::min(lowlink[parent], lowlink[v]);
      }
    }
  }
  return out;
}

struct DiameterEstimate {
  std::uint32_t hops = 0;
  // Set when the graph is not (weakly) connected and the value covers only the
  // largest component.
  bool largest_component_only = false;
};

namespace detail {

// BFS over the undirected projection; returns (farthest node, eccentricity of
// start). The search cannot leave the weak component of its start node.
inline std::pair<NodeId, std::uint32_t> undirected_bfs_far(
    const OverlayGraph& g, NodeId start, std::vector<std::uint32_t>& dist) {
  dist.assign(g.node_count(), UINT32_MAX);
  std::vector<NodeId> frontier{start}, next;
  dist[start] = 0;
  NodeId far = start;
  std::uint32_t ecc = 0;
  while (!frontier.empty()) {
    next.clear();
    for (NodeId v : frontier) {
      auto visit = [&](NodeId w) {
        if (dist[w] == UINT32_MAX) {
          dist[w] = dist[v] + 1;
          if (dist[w] > ecc) {
            ecc = dist[w];
            far = w;
          }
          next.push_back(w);
        }
      };
      for (const auto& h : g.out_edges(v)) visit(h.peer);
      for (const auto& h : g.in_edges(v)) visit(h.peer);
    }
    frontier.swap(next);
  }
  return {far, ecc};
}

}  // namespace detail

// Heuristic diameter of the undirected projection: from each of `samples`
// distinct seeds, BFS, then BFS again from the farthest node found (double
// sweep); the estimate is the max eccentricity seen. Always a lower bound on
// the true diameter; with samples >= node_count it sweeps every node and the
// bound is exact. On a disconnected graph only the largest weak component is
// measured and the result is flagged.
inline DiameterEstimate estimate_diameter(const OverlayGraph& g, std::uint32_t samples,
                                          RandomSource& rng) {
  DiameterEstimate est;
  const NodeId n = g.node_count();
  if (n == 0 || samples == 0) return est;

  ComponentLabels wcc = weakly_connected_components(g);
  std::vector<NodeId> pool;
  if (wcc.count <= 1) {
    pool.resize(n);
    for (NodeId v = 0; v < n; ++v) pool[v] = v;
  } else {
    est.largest_component_only = true;
    std::vector<std::uint32_t> size(wcc.count, 0);
    for (NodeId v = 0; v < n; ++v) ++size[wcc.label[v]];
    std::uint32_t big = static_cast<std::uint32_t>(
        std::max_element(size.begin(), size.end()) - size.begin());
    for (NodeId v = 0; v < n; ++v)
      if (wcc.label[v] == big) pool.push_back(v);
  }

  // Partial Fisher-Yates: distinct seeds so samples >= n degenerates to a
  // full sweep rather than sampling with replacement.
  std::uint32_t want = std::min<std::uint32_t>(samples, static_cast<std::uint32_t>(pool.size()));
  for (std::uint32_t i = 0; i < want; ++i) {
    auto j = i + static_cast<std::uint32_t>(rng.uniform_below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }

  std::vector<std::uint32_t> dist;
  for (std::uint32_t i = 0; i < want; ++i) {
    auto [far, ecc1] = detail::undirected_bfs_far(g, pool[i], dist);
    est.hops = std::max(est.hops, ecc1);
    auto [far2, ecc2] = detail::undirected_bfs_far(g, far, dist);
    (void)far2;
    est.hops = std::max(est.hops, ecc2);
  }
  return est;
}

enum class DegreeSide { In, Out };

inline std::map<std::uint32_t, std::uint32_t> degree_histogram(const OverlayGraph& g,
                                                               DegreeSide side) {
  std::map<std::uint32_t, std::uint32_t> hist;
  for (NodeId v = 0; v < g.node_count(); ++v)
    ++hist[side == DegreeSide::In ? g.in_degree(v) : g.out_degree(v)];
  return hist;
}

}  // namespace bon

#endif  // BON_GRAPH_METRICS_HPP
