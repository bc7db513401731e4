#ifndef BON_PROTOCOL_HPP
#define BON_PROTOCOL_HPP

// Decentralized placement and capacity advertisement.
//
// Placement: a bounded random walk along out-edges. Because nodes keep one
// in-edge per free capacity unit, the walk drifts toward spare capacity; the
// greedy variant additionally tracks argmax power/(load+1) over everything it
// visited, the last_node variant simply takes the node where the walk stopped.
//
// Advertisement: after load changes, a node repairs its in-degree toward
// target_in_degree. Shedding capacity deletes uniformly random in-edges.
// Gaining capacity sends a walk out and asks the node where it ended to open
// an edge back (so better-connected regions donate edges at the rate the walk
// visits them). A walk that ends back at its own initiator would create a
// self-loop; it is extended hop by hop up to kSelfLoopRetries times, then the
// deficit unit is deferred to a later step.
//
// Walk ttl is ceil(c * ln N), natural log, identical for placement and
// acquisition. The starting node is inspected before any hop and does not
// consume ttl. Each hop consumes exactly one uniform draw from the walks
// stream; tests replay that discipline.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "bon/graph.hpp"
#include "bon/node.hpp"
#include "bon/ratio.hpp"
#include "bon/rng.hpp"

namespace bon {

inline constexpr std::uint32_t kSelfLoopRetries = 3;

enum class WalkVariant { Greedy, LastNode };

struct WalkParams {
  double c = 2.0;
  WalkVariant variant = WalkVariant::Greedy;

  std::uint32_t ttl(NodeId node_count) const {
    if (node_count <= 1) return 1;
    double raw = std::ceil(c * std::log(static_cast<double>(node_count)));
    return raw < 1.0 ? 1u : static_cast<std::uint32_t>(raw);
  }
};

struct ProtocolParams {
  WalkParams walk;
  bool greedy_acquisition = false;  // acquisition picks argmax instead of last node
  bool distinct_sources = false;    // refuse duplicate (src, dst) pairs on acquisition
};

struct WalkOutcome {
  NodeId target = 0;
  std::uint32_t hops_taken = 0;
  Ratio best_objective;
  std::uint32_t visited = 0;  // distinct nodes seen, start included
};

namespace detail {

inline void note_visit(std::vector<NodeId>& seen, NodeId v) {
  for (NodeId s : seen)
    if (s == v) return;
  seen.push_back(v);
}

}  // namespace detail

// Greedy walk: inspect the source, take up to ttl uniform out-hops, keep the
// strict argmax of power/(load+1). Ties keep the earlier visit, so the source
// wins against any equal-valued node downstream. A dead end (out-degree 0)
// ends the walk early with the best so far. The last_node variant ignores the
// argmax and returns wherever the walk stopped.
inline WalkOutcome pick_target(const OverlayGraph& g, const std::vector<NodeState>& nodes,
                               NodeId source, const WalkParams& params, RandomSource& rng) {
  const std::uint32_t ttl = params.ttl(g.node_count());
  std::vector<NodeId> seen;
  seen.reserve(ttl + 1);
  seen.push_back(source);

  NodeId v = source;
  NodeId best = source;
  Ratio best_obj = objective(nodes[source]);
  std::uint32_t hops = 0;
  while (hops < ttl) {
    std::optional<NodeId> next = g.random_out_neighbor(v, rng);
    if (!next) break;
    v = *next;
    ++hops;
    detail::note_visit(seen, v);
    if (params.variant == WalkVariant::Greedy) {
      Ratio obj = objective(nodes[v]);
      if (obj > best_obj) {
        best = v;
        best_obj = obj;
      }
    }
  }

  WalkOutcome out;
  out.hops_taken = hops;
  out.visited = static_cast<std::uint32_t>(seen.size());
  if (params.variant == WalkVariant::Greedy) {
    out.target = best;
    out.best_objective = best_obj;
  } else {
    out.target = v;
    out.best_objective = objective(nodes[v]);
  }
  return out;
}

struct AcquireResult {
  std::optional<NodeId> source;  // empty: deferred, retry on a later step
  std::uint32_t hops = 0;
};

// One attempt to raise `beneficiary`'s in-degree by one. Walks ttl hops from
// the beneficiary; the node where the walk ends opens an edge to the
// beneficiary. Ending at the beneficiary itself (or at an existing source
// when distinct_sources is set) extends the walk, at most kSelfLoopRetries
// extra hops, after which the attempt reports failure. With out-degree 0 no
// walk is possible at all.
inline AcquireResult acquire_edge(OverlayGraph& g, const std::vector<NodeState>& nodes,
                                  NodeId beneficiary, const ProtocolParams& params,
                                  RandomSource& rng) {
  AcquireResult res;
  if (g.out_degree(beneficiary) == 0) return res;

  const std::uint32_t ttl = params.walk.ttl(g.node_count());
  NodeId v = beneficiary;
  NodeId best = beneficiary;  // sentinel: "no candidate yet" in greedy mode
  Ratio best_obj(0, 1);
  for (std::uint32_t hop = 0; hop < ttl; ++hop) {
    std::optional<NodeId> next = g.random_out_neighbor(v, rng);
    if (!next) break;
    v = *next;
    ++res.hops;
    if (params.greedy_acquisition && v != beneficiary) {
      Ratio obj = objective(nodes[v]);
      if (best == beneficiary || obj > best_obj) {
        best = v;
        best_obj = obj;
      }
    }
  }

  NodeId candidate = params.greedy_acquisition ? best : v;
  auto unsuitable = [&](NodeId c) {
    return c == beneficiary ||
           (params.distinct_sources && g.edge_multiplicity(c, beneficiary) > 0);
  };
  std::uint32_t retries = 0;
  while (unsuitable(candidate) && retries < kSelfLoopRetries) {
    std::optional<NodeId> next = g.random_out_neighbor(v, rng);
    if (!next) return res;
    v = *next;
    ++res.hops;
    ++retries;
    candidate = v;
  }
  if (unsuitable(candidate)) return res;

  g.add_edge(candidate, beneficiary);
  res.source = candidate;
  return res;
}

// Per-step cap on acquisition attempts: each unit of deficit gets at most one
// walk per step. A unit whose walk failed must wait for the next step; units
// satisfied or newly created (another job finished meanwhile) get fresh
// attempts. The engine resets this between steps.
struct AcquisitionBudget {
  std::vector<std::uint32_t> failed;

  void reset(std::size_t node_count) { failed.assign(node_count, 0); }

  std::uint32_t grant(NodeId v, std::uint32_t deficit) const {
    std::uint32_t f = v < failed.size() ? failed[v] : 0;
    return deficit > f ? deficit - f : 0;
  }

  void record_failure(NodeId v) {
    if (failed.size() <= v) failed.resize(v + 1, 0);
    ++failed[v];
  }
};

struct RebalanceResult {
  std::uint32_t removed = 0;    // in-edges deleted
  std::uint32_t acquired = 0;   // in-edges gained
  std::uint32_t attempts = 0;   // acquisition walks sent
  std::uint32_t walk_hops = 0;  // hops those walks consumed
  std::uint32_t deficit = 0;    // unmet units left for later steps

  std::uint32_t changed() const { return removed + acquired; }
};

// Repair a node's advertised capacity: delete uniformly random in-edges while
// above target, then spend budgeted acquisition attempts while below. Unmet
// deficit is reported so the engine can retry it next step.
inline RebalanceResult rebalance(OverlayGraph& g, const std::vector<NodeState>& nodes, NodeId v,
                                 const ProtocolParams& params, RandomSource& rng,
                                 AcquisitionBudget& budget) {
  RebalanceResult r;
  const std::uint32_t target = target_in_degree(nodes[v]);
  while (g.in_degree(v) > target) {
    g.remove_random_in_edge(v, rng);
    ++r.removed;
  }
  if (g.in_degree(v) < target) {
    std::uint32_t allow = budget.grant(v, target - g.in_degree(v));
    for (std::uint32_t i = 0; i < allow && g.in_degree(v) < target; ++i) {
      AcquireResult a = acquire_edge(g, nodes, v, params, rng);
      ++r.attempts;
      r.walk_hops += a.hops;
      if (a.source)
        ++r.acquired;
      else
        budget.record_failure(v);
    }
  }
  std::uint32_t deg = g.in_degree(v);
  r.deficit = deg < target ? target - deg : 0;
  return r;
}

struct PlacementResult {
  WalkOutcome walk;
  RebalanceResult rebalance;
};

// Full arrival handling: walk from the origin, hand the job to the chosen
// host, then let the host re-advertise (typically deleting one in-edge).
inline PlacementResult place_job(OverlayGraph& g, std::vector<NodeState>& nodes, JobTable& jobs,
                                 JobId job, const ProtocolParams& params, RandomSource& rng,
                                 AcquisitionBudget& budget) {
  PlacementResult res;
  res.walk = pick_target(g, nodes, jobs[job].origin, params.walk, rng);
  NodeId host = res.walk.target;
  jobs[job].host = host;
  nodes[host].running.push_back(job);
  res.rebalance = rebalance(g, nodes, host, params, rng, budget);
  return res;
}

}  // namespace bon

#endif  // BON_PROTOCOL_HPP
