#ifndef BON_ENGINE_HPP
#define BON_ENGINE_HPP

// Discrete-time simulation driver. Each step runs a fixed phase order so that
// a (config, seed) pair fully determines every output byte:
//
//   1. deliver_work on every node in id order, collecting completions
//   2. for each completion, rebalance its host (capacity freed -> acquire)
//   3. retry acquisition deficits left over from earlier steps, in id order
//   4. apply this step's arrivals in trace order
//   5. record a metrics snapshot
//
// The central baseline shares phases 1/4/5 but never touches the graph: it
// places arrivals by exhaustive argmax of power/(load+1), ties to the lowest
// node id, over a frozen overlay.
//
// Closed-loop arrival modes hold total load constant instead of replaying a
// trace: an initial batch of alpha * sum(power) jobs is injected before step
// 1 and every completion is replaced one for one. With the random_termination
// service model there is no work delivery at all; each churn event terminates
// a uniformly random running job and places a replacement, which is the
// constant-population process whose stationary free-capacity law is the
// binomial the analytics module predicts.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bon/analytics.hpp"
#include "bon/graph.hpp"
#include "bon/graph_metrics.hpp"
#include "bon/node.hpp"
#include "bon/protocol.hpp"
#include "bon/rng.hpp"
#include "bon/workload.hpp"

namespace bon {

enum class SchedulerKind { Bon, Central };

struct Counters {
  std::uint64_t jobs_arrived = 0;
  std::uint64_t jobs_completed = 0;
  std::uint64_t walk_hops_total = 0;
  std::uint64_t brdm_messages = 0;  // walks initiated, placement and acquisition
  std::uint64_t edge_ops = 0;       // additions + deletions after graph init
  std::uint64_t bytes_sent = 0;
};

struct MetricsSnapshot {
  std::int64_t step = 0;
  double load_norm = 0.0;  // sum(load) / sum(power)
  double mean_k = 0.0;     // mean in-degree
  double std_load = 0.0;   // population std of load/power
  std::optional<double> r2_power_load;
  std::uint32_t wcc = 0;
  std::uint32_t scc = 0;
  std::uint32_t diameter_est = 0;
  std::uint64_t jobs_running = 0;
  std::uint64_t jobs_completed = 0;  // cumulative
  std::uint64_t brdm_hops = 0;       // cumulative
  std::uint64_t edges = 0;
};

struct BandwidthUsage {
  std::uint64_t total = 0;
  std::uint64_t max_per_node = 0;
};

struct RunReport {
  ScenarioConfig config;
  SchedulerKind kind = SchedulerKind::Bon;
  Counters counters;
  std::vector<MetricsSnapshot> metrics;
  BandwidthUsage bandwidth;
  BandwidthModel bandwidth_prediction;  // evaluated at the realized arrival rate
  LoadMetrics final_load;
  std::uint32_t walk_ttl = 0;

  // Free-capacity histogram accumulated over the trailing fit window, uniform
  // populations only (support 0..power); empty otherwise.
  std::vector<std::uint64_t> free_capacity_hist;
  std::uint64_t fit_window_steps = 0;
  double fit_window_mean_jobs = 0.0;
};

// Streaming hook for graph snapshots: called after each step with
// step % every == 0 (and after the final step).
struct SnapshotSink {
  std::int64_t every = 0;
  std::function<void(std::int64_t step, const OverlayGraph&)> emit;
};

class Engine {
 public:
  Engine(const ScenarioConfig& cfg, SchedulerKind kind)
      : cfg_(cfg),
        kind_(kind),
        params_(cfg.protocol()),
        walks_(RandomSource::substream(cfg.seed, "walks")),
        churn_(RandomSource::substream(cfg.seed, "churn")),
        metrics_rng_(RandomSource::substream(cfg.seed, "metrics")) {
    RandomSource pop_rng = RandomSource::substream(cfg.seed, "population");
    nodes_ = build_population(cfg, pop_rng);
    RandomSource graph_rng = RandomSource::substream(cfg.seed, "graph-init");
    graph_ = build_initial_graph(nodes_, graph_rng, cfg.distinct_sources);
    RandomSource trace_rng = RandomSource::substream(cfg.seed, "trace");
    trace_ = generate_trace(cfg, trace_rng);

    pending_.assign(cfg.n_nodes, 0);
    per_node_walk_hops_.assign(cfg.n_nodes, 0);
    per_node_jobs_initiated_.assign(cfg.n_nodes, 0);
    per_node_jobs_accepted_.assign(cfg.n_nodes, 0);
    for (const NodeState& v : nodes_) capacity_total_ += v.power();
    if (cfg.size_kind == SizeDistKind::PowerLaw)
      size_law_.emplace(cfg.size_min, cfg.size_max, cfg.size_exponent);

    if (cfg.arrival_kind == ArrivalKind::Closed) inject_initial_jobs_();
  }

  void step() {
    ++step_;
    budget_.reset(cfg_.n_nodes);
    if (cfg_.service_model == ServiceModel::RandomTermination)
      churn_step_();
    else
      work_step_();
    if (check_invariants) verify_invariants_();
    record_metrics_();
  }

  RunReport run(const SnapshotSink* sink = nullptr) {
    for (std::int64_t s = 0; s < cfg_.steps; ++s) {
      step();
      if (sink && sink->every > 0 && (step_ % sink->every == 0 || s + 1 == cfg_.steps))
        sink->emit(step_, graph_);
    }
    return report();
  }

  RunReport report() const {
    RunReport rep;
    rep.config = cfg_;
    rep.kind = kind_;
    rep.counters = counters_;
    rep.metrics = metrics_;
    rep.final_load = load_statistics(nodes_);
    rep.walk_ttl = params_.walk.ttl(cfg_.n_nodes);
    rep.free_capacity_hist = fit_hist_;
    rep.fit_window_steps = fit_hist_steps_;
    rep.fit_window_mean_jobs =
        fit_hist_steps_ ? fit_jobs_sum_ / static_cast<double>(fit_hist_steps_) : 0.0;

    rep.bandwidth = account_bandwidth();
    rep.counters.bytes_sent = rep.bandwidth.total;
    double beta_realized =
        (cfg_.steps > 0 && cfg_.n_nodes > 0)
            ? static_cast<double>(counters_.jobs_arrived) / cfg_.steps / cfg_.n_nodes
            : 0.0;
    rep.bandwidth_prediction =
        bandwidth_model(cfg_.n_nodes, beta_realized, static_cast<double>(cfg_.bytes_A),
                        static_cast<double>(cfg_.bytes_L), rep.walk_ttl);
    return rep;
  }

  // Measured traffic. BON attributes the walk bytes and handshake to the walk
  // initiator and the payload to the accepting host; the central baseline
  // routes everything through one coordinator, so its per-node maximum is the
  // whole total.
  BandwidthUsage account_bandwidth() const {
    const std::uint64_t A = cfg_.bytes_A, L = cfg_.bytes_L;
    BandwidthUsage u;
    if (kind_ == SchedulerKind::Central) {
      u.total = counters_.jobs_arrived * (A + L);
      u.max_per_node = u.total;
      return u;
    }
    u.total = counters_.jobs_arrived * A + counters_.walk_hops_total * L +
              2 * L * counters_.jobs_arrived;
    for (std::uint32_t v = 0; v < cfg_.n_nodes; ++v) {
      std::uint64_t b = per_node_jobs_accepted_[v] * A + per_node_walk_hops_[v] * L +
                        2 * L * per_node_jobs_initiated_[v];
      u.max_per_node = std::max(u.max_per_node, b);
    }
    return u;
  }

  // Exhaustive scheduler: argmax of power/(load+1), ties to the lowest id.
  NodeId central_place(JobId job) {
    NodeId best = 0;
    Ratio best_obj = objective(nodes_[0]);
    for (NodeId v = 1; v < nodes_.size(); ++v) {
      Ratio obj = objective(nodes_[v]);
      if (obj > best_obj) {
        best = v;
        best_obj = obj;
      }
    }
    jobs_[job].host = best;
    nodes_[best].running.push_back(job);
    return best;
  }

  const OverlayGraph& graph() const { return graph_; }
  const std::vector<NodeState>& nodes() const { return nodes_; }
  const JobTable& jobs() const { return jobs_; }
  const Counters& counters() const { return counters_; }
  const std::vector<std::uint32_t>& pending() const { return pending_; }
  std::int64_t current_step() const { return step_; }
  std::uint64_t capacity_total() const { return capacity_total_; }
  const ArrivalTrace& trace() const { return trace_; }

  bool check_invariants = false;

 private:
  JobId new_job_(std::uint32_t origin, std::uint32_t size) {
    Job j;
    j.id = static_cast<JobId>(jobs_.size());
    j.origin = origin;
    j.size = size;
    j.remaining = static_cast<double>(size);
    j.arrival_step = step_;
    jobs_.push_back(j);
    ++counters_.jobs_arrived;
    ++per_node_jobs_initiated_[origin];
    return j.id;
  }

  void absorb_rebalance_(NodeId v, const RebalanceResult& rb) {
    counters_.edge_ops += rb.changed();
    counters_.walk_hops_total += rb.walk_hops;
    counters_.brdm_messages += rb.attempts;
    per_node_walk_hops_[v] += rb.walk_hops;
    pending_[v] = rb.deficit;
  }

  void place_bon_(JobId job) {
    PlacementResult pr = place_job(graph_, nodes_, jobs_, job, params_, walks_, budget_);
    counters_.walk_hops_total += pr.walk.hops_taken;
    ++counters_.brdm_messages;
    per_node_walk_hops_[jobs_[job].origin] += pr.walk.hops_taken;
    ++per_node_jobs_accepted_[pr.walk.target];
    absorb_rebalance_(pr.walk.target, pr.rebalance);
  }

  void place_(JobId job) {
    if (kind_ == SchedulerKind::Bon) {
      place_bon_(job);
    } else {
      NodeId host = central_place(job);
      ++per_node_jobs_accepted_[host];
    }
    if (cfg_.service_model == ServiceModel::RandomTermination)
      running_list_.push_back(job);
  }

  std::uint32_t draw_size_(RandomSource& rng) {
    return detail::draw_size(cfg_, size_law_ ? &*size_law_ : nullptr, rng);
  }

  void inject_initial_jobs_() {
    budget_.reset(cfg_.n_nodes);
    const bool rt = cfg_.service_model == ServiceModel::RandomTermination;
    auto j0 = static_cast<std::uint64_t>(
        std::llround(cfg_.closed_alpha * static_cast<double>(capacity_total_)));
    for (std::uint64_t i = 0; i < j0; ++i) {
      auto origin = static_cast<std::uint32_t>(churn_.uniform_below(cfg_.n_nodes));
      place_(new_job_(origin, rt ? 1 : draw_size_(churn_)));
    }
  }

  void work_step_() {
    // 1: execution
    std::vector<JobId> done;
    for (NodeState& v : nodes_) {
      std::vector<JobId> d = deliver_work(v, jobs_, step_);
      done.insert(done.end(), d.begin(), d.end());
    }
    counters_.jobs_completed += done.size();

    if (kind_ == SchedulerKind::Bon) {
      // 2: freed capacity re-advertises
      for (JobId id : done) {
        NodeId host = jobs_[id].host;
        absorb_rebalance_(host, rebalance(graph_, nodes_, host, params_, walks_, budget_));
      }
      // 3: deficits deferred by earlier steps
      for (NodeId v = 0; v < cfg_.n_nodes; ++v)
        if (pending_[v] > 0)
          absorb_rebalance_(v, rebalance(graph_, nodes_, v, params_, walks_, budget_));
    }

    // 4: arrivals
    if (cfg_.arrival_kind == ArrivalKind::Closed) {
      for (std::size_t i = 0; i < done.size(); ++i) {
        auto origin = static_cast<std::uint32_t>(churn_.uniform_below(cfg_.n_nodes));
        place_(new_job_(origin, draw_size_(churn_)));
      }
    } else if (step_ <= static_cast<std::int64_t>(trace_.steps.size())) {
      for (const Arrival& a : trace_.steps[step_ - 1])
        place_(new_job_(a.origin, a.size));
    }
  }

  void churn_step_() {
    // Stale deficits first, then the churn events.
    for (NodeId v = 0; v < cfg_.n_nodes; ++v)
      if (pending_[v] > 0)
        absorb_rebalance_(v, rebalance(graph_, nodes_, v, params_, walks_, budget_));

    std::uint32_t churn = cfg_.closed_churn;
    if (churn == 0)
      churn = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(running_list_.size() / 40));
    for (std::uint32_t e = 0; e < churn && !running_list_.empty(); ++e) {
      // terminate a uniformly random running job
      auto idx = static_cast<std::size_t>(churn_.uniform_below(running_list_.size()));
      JobId id = running_list_[idx];
      running_list_[idx] = running_list_.back();
      running_list_.pop_back();
      NodeId host = jobs_[id].host;
      Job& job = jobs_[id];
      job.remaining = 0.0;
      job.completion_step = step_;
      auto& running = nodes_[host].running;
      running.erase(std::find(running.begin(), running.end(), id));
      ++counters_.jobs_completed;
      absorb_rebalance_(host, rebalance(graph_, nodes_, host, params_, walks_, budget_));

      // replacement keeps the population constant
      auto origin = static_cast<std::uint32_t>(churn_.uniform_below(cfg_.n_nodes));
      place_(new_job_(origin, 1));
    }
  }

  void record_metrics_() {
    MetricsSnapshot m;
    m.step = step_;
    std::uint64_t running = 0;
    for (const NodeState& v : nodes_) running += v.load();
    m.jobs_running = running;
    m.load_norm = capacity_total_ ? static_cast<double>(running) / capacity_total_ : 0.0;
    m.mean_k = cfg_.n_nodes ? static_cast<double>(graph_.edge_count()) / cfg_.n_nodes : 0.0;
    LoadMetrics lm = load_statistics(nodes_);
    m.std_load = lm.std_norm_load;
    m.r2_power_load = lm.r2;
    m.wcc = weakly_connected_components(graph_).count;
    m.scc = strongly_connected_components(graph_).count;
    m.diameter_est = estimate_diameter(graph_, cfg_.diameter_samples, metrics_rng_).hops;
    m.jobs_completed = counters_.jobs_completed;
    m.brdm_hops = counters_.walk_hops_total;
    m.edges = graph_.edge_count();
    metrics_.push_back(m);

    if (cfg_.power_kind == PowerDistKind::Constant && step_ > cfg_.steps - cfg_.fit_window) {
      if (fit_hist_.empty()) fit_hist_.assign(cfg_.power_value + 1, 0);
      for (NodeId v = 0; v < cfg_.n_nodes; ++v) {
        std::int64_t free = static_cast<std::int64_t>(graph_.in_degree(v)) - cfg_.k_min;
        free = std::clamp<std::int64_t>(free, 0, cfg_.power_value);
        ++fit_hist_[static_cast<std::size_t>(free)];
      }
      ++fit_hist_steps_;
      fit_jobs_sum_ += static_cast<double>(running);
    }
  }

  void verify_invariants_() {
    std::uint64_t running = 0;
    for (const NodeState& v : nodes_) running += v.load();
    if (counters_.jobs_arrived != counters_.jobs_completed + running)
      throw std::logic_error("invariant: job conservation violated");
    if (kind_ != SchedulerKind::Bon) return;
    if (!graph_.mirror_consistent())
      throw std::logic_error("invariant: adjacency mirror inconsistent");
    bool all_repaired = true;
    for (NodeId v = 0; v < cfg_.n_nodes; ++v)
      if (pending_[v] > 0) all_repaired = false;
    for (NodeId v = 0; v < cfg_.n_nodes; ++v) {
      std::uint32_t deg = graph_.in_degree(v);
      if (deg > nodes_[v].k_max)
        throw std::logic_error("invariant: in-degree above k_max");
      if (deg < nodes_[v].k_min && pending_[v] == 0)
        throw std::logic_error("invariant: in-degree below k_min without pending deficit");
      if (all_repaired && deg != target_in_degree(nodes_[v]))
        throw std::logic_error("invariant: quiescent in-degree does not encode load");
    }
  }

  ScenarioConfig cfg_;
  SchedulerKind kind_;
  ProtocolParams params_;
  RandomSource walks_, churn_, metrics_rng_;

  std::vector<NodeState> nodes_;
  OverlayGraph graph_;
  JobTable jobs_;
  ArrivalTrace trace_;
  std::vector<std::uint32_t> pending_;
  AcquisitionBudget budget_;
  std::vector<JobId> running_list_;  // random_termination only
  std::optional<DiscretePowerLaw> size_law_;

  std::int64_t step_ = 0;
  Counters counters_;
  std::uint64_t capacity_total_ = 0;
  std::vector<MetricsSnapshot> metrics_;
  std::vector<std::uint64_t> per_node_walk_hops_;
  std::vector<std::uint64_t> per_node_jobs_initiated_;
  std::vector<std::uint64_t> per_node_jobs_accepted_;

  std::vector<std::uint64_t> fit_hist_;
  std::uint64_t fit_hist_steps_ = 0;
  double fit_jobs_sum_ = 0.0;
};

inline RunReport run_simulation(const ScenarioConfig& cfg, SchedulerKind kind,
                                const SnapshotSink* sink = nullptr) {
  Engine engine(cfg, kind);
  return engine.run(sink);
}

}  // namespace bon

#endif  // BON_ENGINE_HPP
