#ifndef BON_GRAPH_HPP
#define BON_GRAPH_HPP

// Directed multigraph used as the overlay. A node's in-degree is the protocol's
// advertisement of free capacity, so edge mutation and uniform sampling must be
// cheap: adjacency is stored twice (out and in), each half-edge carrying the
// index of its twin in the opposite list. Swap-remove plus twin-index patching
// keeps add/remove/sample O(1) regardless of parallel-edge multiplicity.
//
// Parallel edges are legal (the protocol may acquire several edges between the
// same pair). Self-loops are structurally meaningless here and are rejected
// with their own error type so callers can tell them apart from range errors.

#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bon/rng.hpp"

namespace bon {

using NodeId = std::uint32_t;

class SelfLoopError : public std::invalid_argument {
 public:
  explicit SelfLoopError(const std::string& what) : std::invalid_argument(what) {}
};

class NoSuchNodeError : public std::out_of_range {
 public:
  explicit NoSuchNodeError(const std::string& what) : std::out_of_range(what) {}
};

class EmptyAdjacencyError : public std::logic_error {
 public:
  explicit EmptyAdjacencyError(const std::string& what) : std::logic_error(what) {}
};

class OverlayGraph {
 public:
  struct HalfEdge {
    NodeId peer;
    std::uint32_t twin;  // index of the matching entry in peer's opposite list
  };

  OverlayGraph() = default;
  explicit OverlayGraph(NodeId node_count) : out_(node_count), in_(node_count) {}

  NodeId node_count() const { return static_cast<NodeId>(out_.size()); }
  std::uint64_t edge_count() const { return edge_count_; }

  std::uint32_t out_degree(NodeId v) const { return static_cast<std::uint32_t>(out_at_(v).size()); }
  std::uint32_t in_degree(NodeId v) const { return static_cast<std::uint32_t>(in_at_(v).size()); }

  const std::vector<HalfEdge>& out_edges(NodeId v) const { return out_at_(v); }
  const std::vector<HalfEdge>& in_edges(NodeId v) const { return in_at_(v); }

  void add_edge(NodeId src, NodeId dst) {
    check_node_(src);
    check_node_(dst);
    if (src == dst)
      throw SelfLoopError("add_edge: self-loop " + std::to_string(src) + " rejected");
    out_[src].push_back({dst, static_cast<std::uint32_t>(in_[dst].size())});
    in_[dst].push_back({src, static_cast<std::uint32_t>(out_[src].size() - 1)});
    ++edge_count_;
  }

  // Multiplicity of src -> dst. Linear in min(out, in) degree; used only by
  // optional duplicate-suppression modes and tests.
  std::uint32_t edge_multiplicity(NodeId src, NodeId dst) const {
    check_node_(src);
    check_node_(dst);
    std::uint32_t m = 0;
    if (out_[src].size() <= in_[dst].size()) {
      for (const auto& h : out_[src]) m += (h.peer == dst);
    } else {
      for (const auto& h : in_[dst]) m += (h.peer == src);
    }
    return m;
  }

  // Removes the in-edge of dst stored at slot, in O(1). Both adjacency lists
  // are patched: the entry swapped into a vacated position gets its twin's
  // back-index rewritten.
  void remove_in_slot(NodeId dst, std::uint32_t slot) {
    check_node_(dst);
    auto& ins = in_[dst];
    if (slot >= ins.size())
      throw std::out_of_range("remove_in_slot: slot out of range");
    const HalfEdge entry = ins[slot];
    auto& outs = out_[entry.peer];

    std::uint32_t last = static_cast<std::uint32_t>(outs.size()) - 1;
    if (entry.twin != last) {
      HalfEdge moved = outs[last];
      outs[entry.twin] = moved;
      in_[moved.peer][moved.twin].twin = entry.twin;
    }
    outs.pop_back();

    std::uint32_t lastj = static_cast<std::uint32_t>(ins.size()) - 1;
    if (slot != lastj) {
      HalfEdge moved = ins[lastj];
      ins[slot] = moved;
      out_[moved.peer][moved.twin].twin = slot;
    }
    ins.pop_back();
    --edge_count_;
  }

  // Deletes one in-edge of dst chosen uniformly over the multiset and returns
  // the source it pointed from. Consumes exactly one uniform_below draw.
  NodeId remove_random_in_edge(NodeId dst, RandomSource& rng) {
    check_node_(dst);
    if (in_[dst].empty())
      throw EmptyAdjacencyError("remove_random_in_edge: node " + std::to_string(dst) +
                                " has no in-edges");
    auto slot = static_cast<std::uint32_t>(rng.uniform_below(in_[dst].size()));
    NodeId src = in_[dst][slot].peer;
    remove_in_slot(dst, slot);
    return src;
  }

  // Uniform over the out-edge multiset; parallel edges weight their head
  // accordingly. Empty adjacency yields nullopt (a walk dead end), not an error.
  std::optional<NodeId> random_out_neighbor(NodeId v, RandomSource& rng) const {
    check_node_(v);
    const auto& outs = out_[v];
    if (outs.empty()) return std::nullopt;
    return outs[rng.uniform_below(outs.size())].peer;
  }

  // True when every out entry has a matching in entry and vice versa, with
  // consistent twin indices. O(E); meant for tests and debug sweeps.
  bool mirror_consistent() const {
    std::uint64_t seen = 0;
    for (NodeId u = 0; u < node_count(); ++u) {
      for (std::uint32_t i = 0; i < out_[u].size(); ++i) {
        const HalfEdge& h = out_[u][i];
        if (h.peer >= node_count()) return false;
        if (h.twin >= in_[h.peer].size()) return false;
        const HalfEdge& t = in_[h.peer][h.twin];
        if (t.peer != u || t.twin != i) return false;
        ++seen;
      }
    }
    std::uint64_t seen_in = 0;
    for (NodeId v = 0; v < node_count(); ++v) seen_in += in_[v].size();
    return seen == edge_count_ && seen_in == edge_count_;
  }

  // Plain edge list, one (src, dst) per out slot in adjacency order.
  std::vector<std::pair<NodeId, NodeId>> edge_list() const {
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(edge_count_);
    for (NodeId u = 0; u < node_count(); ++u)
      for (const auto& h : out_[u]) edges.emplace_back(u, h.peer);
    return edges;
  }

  // Snapshot format consumed by the analyze command:
  //   # nodes=N edges=E step=T
  //   (optional further '#' comment lines)
  //   src dst        one line per edge
  void write_snapshot(std::ostream& os, std::int64_t step,
                      const std::vector<std::string>& comments = {}) const {
    os << "# nodes=" << node_count() << " edges=" << edge_count_ << " step=" << step << "\n";
    for (const auto& c : comments) os << "# " << c << "\n";
    for (NodeId u = 0; u < node_count(); ++u)
      for (const auto& h : out_[u]) os << u << " " << h.peer << "\n";
  }

  struct Snapshot;
  static Snapshot read_snapshot(std::istream& is);

 private:
  void check_node_(NodeId v) const {
    if (v >= node_count())
      throw NoSuchNodeError("node " + std::to_string(v) + " out of range");
  }
  const std::vector<HalfEdge>& out_at_(NodeId v) const {
    check_node_(v);
    return out_[v];
  }
  const std::vector<HalfEdge>& in_at_(NodeId v) const {
    check_node_(v);
    return in_[v];
  }

  std::vector<std::vector<HalfEdge>> out_;
  std::vector<std::vector<HalfEdge>> in_;
  std::uint64_t edge_count_ = 0;
};

struct OverlayGraph::Snapshot {
  OverlayGraph graph{0};
  std::int64_t step = 0;
};

inline OverlayGraph::Snapshot OverlayGraph::read_snapshot(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("snapshot: empty stream");
  unsigned long long n = 0, e = 0;
  long long step = 0;
  if (std::sscanf(line.c_str(), "# nodes=%llu edges=%llu step=%lld", &n, &e, &step) != 3)
    throw std::runtime_error("snapshot: bad header line: " + line);
  Snapshot snap;
  snap.graph = OverlayGraph(static_cast<NodeId>(n));
  snap.step = step;
  std::uint64_t read = 0;
  while (read < e && std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    std::istringstream ls(line);
    std::uint64_t a = 0, b = 0;
    if (!(ls >> a >> b))
      throw std::runtime_error("snapshot: bad edge line: " + line);
    snap.graph.add_edge(static_cast<NodeId>(a), static_cast<NodeId>(b));
    ++read;
  }
  if (read != e)
    throw std::runtime_error("snapshot: expected " + std::to_string(e) + " edges, got " +
                             std::to_string(read));
  return snap;
}

}  // namespace bon

#endif  // BON_GRAPH_HPP
