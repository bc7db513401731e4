#ifndef BON_WORKLOAD_HPP
#define BON_WORKLOAD_HPP

// Scenario generation: node populations, arrival traces, and the initial
// overlay. Everything here is a pure function of (config, named substream), so
// a BON run and a central run can be fed byte-identical inputs, and reruns
// reproduce exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bon/graph.hpp"
#include "bon/node.hpp"
#include "bon/protocol.hpp"
#include "bon/rng.hpp"

namespace bon {

enum class PowerDistKind { Constant, PowerLaw };
enum class SizeDistKind { Poisson, PowerLaw };
enum class ArrivalKind { Constant, PowerLaw, Closed };
enum class ServiceModel { Work, RandomTermination };

// Flat scenario description; config.hpp maps these fields one-to-one onto
// key=value lines. Zeros on arrival_value / arrival_max / closed_churn mean
// "derive the documented default from n_nodes at build time".
struct ScenarioConfig {
  std::uint32_t n_nodes = 1024;
  std::uint32_t k_min = 4;

  PowerDistKind power_kind = PowerDistKind::Constant;
  std::uint32_t power_value = 67;   // constant: capacity units, k_max = k_min + value
  double power_exponent = 1.0;      // powerlaw: weight k_max^-exponent
  std::uint32_t power_min = 1;      // powerlaw: capacity range [min, max]
  std::uint32_t power_max = 300;

  SizeDistKind size_kind = SizeDistKind::Poisson;
  double size_nu = 64.0;            // poisson mean; draws of 0 become 1
  double size_exponent = 1.0;       // powerlaw on [size_min, size_max]
  std::uint32_t size_min = 32;
  std::uint32_t size_max = 1024;

  ArrivalKind arrival_kind = ArrivalKind::Constant;
  double arrival_value = 0.0;       // constant rate; 0 -> n_nodes/100
  double arrival_exponent = 1.0;    // powerlaw burst sizes on [1, arrival_max]
  std::uint32_t arrival_max = 0;    // 0 -> n_nodes/64
  double closed_alpha = 0.5;        // closed: hold sum(load) at alpha * sum(power)
  std::uint32_t closed_churn = 0;   // closed+random_termination events/step; 0 -> J0/40

  ServiceModel service_model = ServiceModel::Work;

  double walk_c = 2.0;
  WalkVariant walk_variant = WalkVariant::Greedy;
  bool acquisition_greedy = false;
  bool distinct_sources = false;

  std::int64_t steps = 1000;
  std::int64_t arrival_steps = -1;  // arrivals only in steps [1, arrival_steps]; -1 = all
  std::uint64_t seed = 42;

  std::uint64_t bytes_A = 10000;    // job payload bytes
  std::uint64_t bytes_L = 16;       // walk message bytes

  std::uint32_t fit_window = 500;   // trailing steps used for degree-law fits
  std::uint32_t diameter_samples = 2;

  double effective_beta() const {
    return arrival_value > 0.0 ? arrival_value : std::max(1.0, n_nodes / 100.0);
  }
  std::uint32_t effective_burst_max() const {
    return arrival_max > 0 ? arrival_max : std::max<std::uint32_t>(1, n_nodes / 64);
  }
  ProtocolParams protocol() const {
    ProtocolParams p;
    p.walk.c = walk_c;
    p.walk.variant = walk_variant;
    p.greedy_acquisition = acquisition_greedy;
    p.distinct_sources = distinct_sources;
    return p;
  }
};

// Discrete power law on [lo, hi] with weight k^-exponent, sampled by inverse
// CDF over a cumulative table. exponent 0 degenerates to uniform.
class DiscretePowerLaw {
 public:
  DiscretePowerLaw(std::uint32_t lo, std::uint32_t hi, double exponent)
      : lo_(lo) {
    if (lo < 1) throw std::invalid_argument("DiscretePowerLaw: support must start >= 1");
    if (hi < lo) throw std::invalid_argument("DiscretePowerLaw: empty support");
    if (exponent < 0.0) throw std::invalid_argument("DiscretePowerLaw: negative exponent");
    cumulative_.reserve(hi - lo + 1);
    long double total = 0.0L;
    for (std::uint32_t k = lo; k <= hi; ++k)
      total += std::pow(static_cast<long double>(k), -static_cast<long double>(exponent));
    long double acc = 0.0L;
    for (std::uint32_t k = lo; k <= hi; ++k) {
      acc += std::pow(static_cast<long double>(k), -static_cast<long double>(exponent));
      cumulative_.push_back(static_cast<double>(acc / total));
    }
    cumulative_.back() = 1.0;
  }

  std::uint32_t sample(RandomSource& rng) const {
    double u = rng.uniform_double();
    auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return lo_ + static_cast<std::uint32_t>(it - cumulative_.begin());
  }

  double probability(std::uint32_t k) const {
    std::size_t i = k - lo_;
    return i == 0 ? cumulative_[0] : cumulative_[i] - cumulative_[i - 1];
  }

  std::uint32_t lo() const { return lo_; }
  std::uint32_t hi() const { return lo_ + static_cast<std::uint32_t>(cumulative_.size()) - 1; }

 private:
  std::uint32_t lo_;
  std::vector<double> cumulative_;
};

// Convenience one-shot form; hot paths keep a DiscretePowerLaw instead.
inline std::uint32_t sample_discrete_powerlaw(std::uint32_t lo, std::uint32_t hi,
                                              double exponent, RandomSource& rng) {
  return DiscretePowerLaw(lo, hi, exponent).sample(rng);
}

// Node population from the "population" substream. Constant kind gives every
// node the same k_max; power-law kind draws k_max with weight k_max^-exponent
// over [k_min+power_min, k_min+power_max] (the power-law applies to the
// advertised maximum degree, which is what heavy-tailed capacity means here).
inline std::vector<NodeState> build_population(const ScenarioConfig& cfg, RandomSource& rng) {
  std::vector<NodeState> nodes;
  nodes.reserve(cfg.n_nodes);
  if (cfg.power_kind == PowerDistKind::Constant) {
    for (std::uint32_t v = 0; v < cfg.n_nodes; ++v)
      nodes.emplace_back(v, cfg.k_min, cfg.k_min + cfg.power_value);
  } else {
    DiscretePowerLaw law(cfg.k_min + cfg.power_min, cfg.k_min + cfg.power_max,
                         cfg.power_exponent);
    for (std::uint32_t v = 0; v < cfg.n_nodes; ++v)
      nodes.emplace_back(v, cfg.k_min, law.sample(rng));
  }
  return nodes;
}

struct Arrival {
  std::uint32_t origin = 0;
  std::uint32_t size = 1;
};

// Pre-generated arrivals, one bucket per step (index 0 = step 1). The same
// trace drives both scheduler kinds in a comparison run. Closed-mode arrivals
// are reactive (they replace completions) and are generated by the engine
// instead; for closed configs the trace is empty.
struct ArrivalTrace {
  std::vector<std::vector<Arrival>> steps;

  std::uint64_t total_jobs() const {
    std::uint64_t n = 0;
    for (const auto& s : steps) n += s.size();
    return n;
  }

  void write_csv(std::ostream& os) const {
    os << "step,origin,size\n";
    for (std::size_t i = 0; i < steps.size(); ++i)
      for (const Arrival& a : steps[i])
        os << (i + 1) << "," << a.origin << "," << a.size << "\n";
  }

  static ArrivalTrace read_csv(std::istream& is, std::int64_t n_steps) {
    ArrivalTrace t;
    t.steps.resize(n_steps);
    std::string line;
    if (!std::getline(is, line) || line != "step,origin,size")
      throw std::runtime_error("trace: missing step,origin,size header");
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string f;
      std::int64_t step;
      Arrival a;
      std::getline(ls, f, ',');
      step = std::stoll(f);
      std::getline(ls, f, ',');
      a.origin = static_cast<std::uint32_t>(std::stoul(f));
      std::getline(ls, f, ',');
      a.size = static_cast<std::uint32_t>(std::stoul(f));
      if (step < 1 || step > n_steps) throw std::runtime_error("trace: step out of range");
      t.steps[step - 1].push_back(a);
    }
    return t;
  }
};

namespace detail {

inline std::uint32_t draw_size(const ScenarioConfig& cfg, const DiscretePowerLaw* size_law,
                               RandomSource& rng) {
  if (cfg.size_kind == SizeDistKind::Poisson) {
    std::uint64_t s = rng.poisson(cfg.size_nu);
    return s == 0 ? 1u : static_cast<std::uint32_t>(s);
  }
  return size_law->sample(rng);
}

}  // namespace detail

// Open-loop trace from the "trace" substream. Constant rates may be
// fractional: the generator carries the remainder forward so long-run
// arrivals per step average exactly beta. Draw order per step: count first,
// then per arrival origin then size.
inline ArrivalTrace generate_trace(const ScenarioConfig& cfg, RandomSource& rng) {
  ArrivalTrace trace;
  trace.steps.resize(static_cast<std::size_t>(std::max<std::int64_t>(cfg.steps, 0)));
  if (cfg.arrival_kind == ArrivalKind::Closed) return trace;

  std::optional<DiscretePowerLaw> burst_law;
  if (cfg.arrival_kind == ArrivalKind::PowerLaw)
    burst_law.emplace(1, cfg.effective_burst_max(), cfg.arrival_exponent);
  std::optional<DiscretePowerLaw> size_law;
  if (cfg.size_kind == SizeDistKind::PowerLaw)
    size_law.emplace(cfg.size_min, cfg.size_max, cfg.size_exponent);

  const std::int64_t last_arrival_step =
      cfg.arrival_steps < 0 ? cfg.steps : std::min(cfg.arrival_steps, cfg.steps);
  double carry = 0.0;
  for (std::int64_t step = 1; step <= cfg.steps; ++step) {
    if (step > last_arrival_step) break;
    std::uint64_t count;
    if (cfg.arrival_kind == ArrivalKind::Constant) {
      carry += cfg.effective_beta();
      count = static_cast<std::uint64_t>(carry);
      carry -= static_cast<double>(count);
    } else {
      count = burst_law->sample(rng);
    }
    auto& bucket = trace.steps[step - 1];
    bucket.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      Arrival a;
      a.origin = static_cast<std::uint32_t>(rng.uniform_below(cfg.n_nodes));
      a.size = detail::draw_size(cfg, size_law ? &*size_law : nullptr, rng);
      bucket.push_back(a);
    }
  }
  return trace;
}

// Quiescent overlay from the "graph-init" substream: every node starts idle
// and fully advertised, with k_max in-edges from uniformly random other nodes
// (with replacement unless distinct_sources). A single-node network has no
// legal sources and starts empty.
inline OverlayGraph build_initial_graph(const std::vector<NodeState>& nodes, RandomSource& rng,
                                        bool distinct_sources = false) {
  const auto n = static_cast<NodeId>(nodes.size());
  OverlayGraph g(n);
  if (n <= 1) return g;
  std::vector<NodeId> scratch;
  for (NodeId v = 0; v < n; ++v) {
    const std::uint32_t want = nodes[v].k_max;
    if (!distinct_sources) {
      for (std::uint32_t i = 0; i < want; ++i) {
        auto src = static_cast<NodeId>(rng.uniform_below(n - 1));
        if (src >= v) ++src;  // uniform over nodes != v
        g.add_edge(src, v);
      }
    } else {
      if (want > n - 1)
        throw std::invalid_argument("build_initial_graph: k_max exceeds distinct sources");
      scratch.clear();
      for (NodeId u = 0; u < n; ++u)
        if (u != v) scratch.push_back(u);
      for (std::uint32_t i = 0; i < want; ++i) {
        auto j = i + static_cast<std::uint32_t>(rng.uniform_below(scratch.size() - i));
        std::swap(scratch[i], scratch[j]);
        g.add_edge(scratch[i], v);
      }
    }
  }
  return g;
}

}  // namespace bon

#endif  // BON_WORKLOAD_HPP
