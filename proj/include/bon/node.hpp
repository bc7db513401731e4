#ifndef BON_NODE_HPP
#define BON_NODE_HPP

// Per-node compute model. A node advertises k_max in-edges when idle and aims
// for k_max - load edges as jobs occupy it, never dropping below the k_min
// floor that keeps it reachable. Power is defined as k_max - k_min: one unit
// of deliverable work per step per unit of advertised capacity.
//
// Work is time-shared: each step a node spreads its power evenly over the jobs
// it hosts, so every running job receives power/load units. Work delivered
// past a job's end is discarded, not banked.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bon/ratio.hpp"

namespace bon {

using JobId = std::uint32_t;

struct Job {
  JobId id = 0;
  std::uint32_t origin = 0;  // node where the request entered the system
  std::uint32_t host = 0;    // node executing it
  std::uint32_t size = 1;    // total work units
  double remaining = 0.0;
  std::int64_t arrival_step = 0;
  std::int64_t completion_step = -1;  // -1 while running
};

using JobTable = std::vector<Job>;

struct NodeState {
  std::uint32_t id = 0;
  std::uint32_t k_min = 1;
  std::uint32_t k_max = 2;
  std::vector<JobId> running;

  NodeState() = default;
  NodeState(std::uint32_t id_, std::uint32_t k_min_, std::uint32_t k_max_)
      : id(id_), k_min(k_min_), k_max(k_max_) {
    if (k_min_ < 1) throw std::invalid_argument("NodeState: k_min must be >= 1");
    if (k_max_ <= k_min_) throw std::invalid_argument("NodeState: k_max must exceed k_min");
  }

  std::uint32_t power() const { return k_max - k_min; }
  std::uint32_t load() const { return static_cast<std::uint32_t>(running.size()); }
};

// Scheduling objective power/(load+1): the work rate a new job would get if
// placed here. Exact ratio so that argmax ties are decided by visit order and
// node id, never by rounding.
inline Ratio objective(const NodeState& node) {
  return Ratio(node.power(), static_cast<std::int64_t>(node.load()) + 1);
}

// In-degree a node wants: free capacity k_max - load, clamped to the
// [k_min, k_max] band. The k_min floor keeps saturated nodes reachable by
// walks; the k_max cap applies while load is zero.
inline std::uint32_t target_in_degree(const NodeState& node) {
  std::int64_t want = static_cast<std::int64_t>(node.k_max) - node.load();
  return static_cast<std::uint32_t>(
      std::clamp<std::int64_t>(want, node.k_min, node.k_max));
}

// One step of time-shared execution: every hosted job receives power/load
// units. Jobs that reach zero remaining work are recorded as completed at
// `step`, removed from the running list (stable order), and returned in
// hosting order. Overshoot on the final quantum is discarded.
inline std::vector<JobId> deliver_work(NodeState& node, JobTable& jobs, std::int64_t step) {
  std::vector<JobId> completed;
  const std::uint32_t load = node.load();
  if (load == 0) return completed;
  const double quantum = static_cast<double>(node.power()) / static_cast<double>(load);
  for (JobId id : node.running) {
    Job& job = jobs[id];
    job.remaining -= quantum;
    if (job.remaining <= 0.0) {
      job.remaining = 0.0;
      job.completion_step = step;
      completed.push_back(id);
    }
  }
  if (!completed.empty()) {
    auto keep = std::remove_if(node.running.begin(), node.running.end(),
                               [&](JobId id) { return jobs[id].completion_step == step; });
    node.running.erase(keep, node.running.end());
  }
  return completed;
}

struct LoadMetrics {
  double mean_norm_load = 0.0;        // mean of load/power over nodes
  double std_norm_load = 0.0;         // population std of load/power
  std::optional<double> r2;           // squared Pearson corr of (power, load)
};

}  // namespace bon

#endif  // BON_NODE_HPP
