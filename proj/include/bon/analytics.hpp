#ifndef BON_ANALYTICS_HPP
#define BON_ANALYTICS_HPP

// Closed-form predictions and fit statistics for simulation output.
//
// The degree model: treat each of a node's C capacity units as occupied
// independently with probability alpha = J/(N*C). Free units (in-degree above
// the k_min floor) are then binomial,
//     p_n = choose(C, n) * (1-alpha)^n * alpha^(C-n),
// which is also the stationary law of the matching birth-death chain with
// arrival rate i/(N*C - J) and departure rate (C - i)/J at free-degree i.
// With C = N-1 and E = N*(N-1) - J this reduces to the classical random-graph
// degree law, which is what ties overlay diameter to ln N / ln <k>.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "bon/node.hpp"

namespace bon {

struct AnalyticModel {
  std::uint32_t n_nodes = 0;
  std::uint32_t capacity = 0;  // free-capacity units per node (C)
  double total_jobs = 0.0;     // J; may be a window average

  double alpha() const {
    double denom = static_cast<double>(n_nodes) * capacity;
    if (denom <= 0.0) throw std::invalid_argument("AnalyticModel: empty system");
    double a = total_jobs / denom;
    if (a < 0.0 || a > 1.0) throw std::invalid_argument("AnalyticModel: alpha outside [0,1]");
    return a;
  }
};

// p_0..p_C of free capacity units under independent occupancy.
inline std::vector<double> binomial_degree_dist(const AnalyticModel& model) {
  const std::uint32_t C = model.capacity;
  const double a = model.alpha();
  std::vector<double> p(C + 1, 0.0);
  if (a == 0.0) {
    p[C] = 1.0;
    return p;
  }
  if (a == 1.0) {
    p[0] = 1.0;
    return p;
  }
  const double la = std::log(a), lb = std::log1p(-a);
  for (std::uint32_t n = 0; n <= C; ++n) {
    double lchoose = std::lgamma(C + 1.0) - std::lgamma(n + 1.0) - std::lgamma(C - n + 1.0);
    p[n] = std::exp(lchoose + n * lb + (C - n) * la);
  }
  return p;
}

// Random-graph limit: same law with every other node a potential capacity
// unit. E is the surviving edge count N*(N-1) - J.
inline std::vector<double> er_degree_dist(std::uint32_t n_nodes, double edges) {
  AnalyticModel m;
  m.n_nodes = n_nodes;
  m.capacity = n_nodes - 1;
  m.total_jobs = static_cast<double>(n_nodes) * (n_nodes - 1) - edges;
  return binomial_degree_dist(m);
}

struct TransitionRates {
  double arrival = 0.0;    // rate the chain leaves free-degree i downward
  double departure = 0.0;  // rate it leaves upward (a hosted job finishing)
};

inline TransitionRates predicted_arrival_departure(const AnalyticModel& model, std::uint32_t i) {
  if (i > model.capacity)
    throw std::invalid_argument("predicted_arrival_departure: state beyond capacity");
  const double nc = static_cast<double>(model.n_nodes) * model.capacity;
  if (model.total_jobs <= 0.0)
    throw std::invalid_argument("predicted_arrival_departure: J must be positive");
  if (model.total_jobs >= nc)
    throw std::invalid_argument("predicted_arrival_departure: J must leave free capacity");
  TransitionRates r;
  r.arrival = i / (nc - model.total_jobs);
  r.departure = (model.capacity - i) / model.total_jobs;
  return r;
}

struct BandwidthModel {
  double central_total = 0.0;    // N*beta*(A + L)
  double bon_total = 0.0;        // N*beta*(A + L*(ttl + 2))
  double central_max_node = 0.0; // the hub relays everything
  double bon_per_node = 0.0;     // bon_total / N
};

// Per-step traffic for N*beta placements/step: payload A per job, walk message
// L per hop, plus a 2L accept handshake. Central needs no walk. The two
// totals always differ by exactly N*beta*L*(ttl + 1).
inline BandwidthModel bandwidth_model(std::uint32_t n_nodes, double beta, double bytes_A,
                                      double bytes_L, std::uint32_t ttl) {
  BandwidthModel m;
  const double jobs = n_nodes * beta;
  m.central_total = jobs * (bytes_A + bytes_L);
  m.bon_total = jobs * (bytes_A + bytes_L * (ttl + 2.0));
  m.central_max_node = m.central_total;
  m.bon_per_node = n_nodes ? m.bon_total / n_nodes : 0.0;
  return m;
}

// Population statistics of normalized load, plus the squared Pearson
// correlation between power and load. The correlation is reported absent (not
// zero) when either variable has no variance.
inline LoadMetrics load_statistics(const std::vector<NodeState>& nodes) {
  LoadMetrics m;
  const std::size_t n = nodes.size();
  if (n == 0) return m;
  double sum = 0.0;
  for (const NodeState& v : nodes) sum += static_cast<double>(v.load()) / v.power();
  m.mean_norm_load = sum / n;
  double ss = 0.0;
  for (const NodeState& v : nodes) {
    double d = static_cast<double>(v.load()) / v.power() - m.mean_norm_load;
    ss += d * d;
  }
  m.std_norm_load = std::sqrt(ss / n);

  double mp = 0.0, ml = 0.0;
  for (const NodeState& v : nodes) {
    mp += v.power();
    ml += v.load();
  }
  mp /= n;
  ml /= n;
  double spl = 0.0, spp = 0.0, sll = 0.0;
  for (const NodeState& v : nodes) {
    double dp = v.power() - mp, dl = v.load() - ml;
    spl += dp * dl;
    spp += dp * dp;
    sll += dl * dl;
  }
  if (spp > 0.0 && sll > 0.0) {
    double r = spl / std::sqrt(spp * sll);
    m.r2 = r * r;
  }
  return m;
}

struct FitReport {
  double tv_distance = 0.0;
  double chi_square = 0.0;
  std::uint32_t df = 0;
  double p_value = 1.0;
  std::uint64_t n_samples = 0;
  std::uint32_t bins_used = 0;  // after pooling
};

// Goodness of fit of an observed free-capacity histogram against model
// probabilities over the same support. Total variation uses the raw bins;
// the chi-square pools adjacent bins left to right until each pooled bin has
// expected count >= 5 (tail remainder merges into the last bin).
// params_estimated reduces the chi-square degrees of freedom.
inline FitReport fit_degree_distribution(const std::vector<std::uint64_t>& hist,
                                         const std::vector<double>& model,
                                         std::uint32_t params_estimated = 0) {
  if (hist.size() != model.size())
    throw std::invalid_argument("fit_degree_distribution: support mismatch");
  if (hist.empty()) throw std::invalid_argument("fit_degree_distribution: empty support");

  FitReport rep;
  for (std::uint64_t c : hist) rep.n_samples += c;
  if (rep.n_samples == 0)
    throw std::invalid_argument("fit_degree_distribution: empty histogram");
  const double n = static_cast<double>(rep.n_samples);

  double tv = 0.0;
  for (std::size_t i = 0; i < hist.size(); ++i)
    tv += std::abs(hist[i] / n - model[i]);
  rep.tv_distance = 0.5 * tv;

  std::vector<std::pair<double, double>> pooled;  // (observed, expected)
  double obs = 0.0, exp = 0.0;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    obs += static_cast<double>(hist[i]);
    exp += n * model[i];
    if (exp >= 5.0) {
      pooled.emplace_back(obs, exp);
      obs = exp = 0.0;
    }
  }
  if (exp > 0.0 || obs > 0.0) {
    if (!pooled.empty()) {
      pooled.back().first += obs;
      pooled.back().second += exp;
    } else {
      pooled.emplace_back(obs, exp);
    }
  }
  rep.bins_used = static_cast<std::uint32_t>(pooled.size());

  double chi = 0.0;
  for (auto& [o, e] : pooled)
    if (e > 0.0) chi += (o - e) * (o - e) / e;
  rep.chi_square = chi;

  std::int64_t df = static_cast<std::int64_t>(pooled.size()) - 1 - params_estimated;
  if (df < 1) df = 1;
  rep.df = static_cast<std::uint32_t>(df);
  boost::math::chi_squared dist(static_cast<double>(rep.df));
  rep.p_value = boost::math::cdf(boost::math::complement(dist, rep.chi_square));
  return rep;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("linear_fit: need matched samples, at least 2");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate x");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

}  // namespace bon

#endif  // BON_ANALYTICS_HPP
