#ifndef BON_CONFIG_HPP
#define BON_CONFIG_HPP

// Flat key=value scenario files. '#' starts a comment, blank lines are
// ignored, keys are dotted to stay flat (power_dist.value, walk.c, ...).
// Unknown keys are hard errors so typos cannot silently fall back to
// defaults. serialize_scenario emits the canonical echo embedded in run
// artifacts; parsing that echo reproduces the config exactly.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bon/workload.hpp"

namespace bon {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    std::uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' wants a nonnegative integer, got '" + v + "'");
  }
}

inline std::int64_t parse_i64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    std::int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' wants an integer, got '" + v + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' wants a number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: key '" + key + "' wants true/false, got '" + v + "'");
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace detail

inline KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value: '" +
                        line + "'");
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("config: line " + std::to_string(lineno) + " has empty key or value");
    kv[key] = val;
  }
  return kv;
}

struct ParsedScenario {
  ScenarioConfig config;
  std::vector<std::string> warnings;
};

inline ParsedScenario build_scenario(const KeyValues& kv) {
  using namespace detail;
  ParsedScenario out;
  ScenarioConfig& c = out.config;

  for (const auto& [key, v] : kv) {
    if (key == "n_nodes") c.n_nodes = static_cast<std::uint32_t>(parse_u64(key, v));
    else if (key == "k_min") c.k_min = static_cast<std::uint32_t>(parse_u64(key, v));
    else if (key == "power_dist") {
      if (v == "constant") c.power_kind = PowerDistKind::Constant;
      else if (v == "powerlaw") c.power_kind = PowerDistKind::PowerLaw;
      else throw ConfigError("config: power_dist must be constant|powerlaw, got '" + v + "'");
    } else if (key == "power_dist.value") c.power_value = static_cast<std::uint32_t>(parse_u64(key, v));
    else if (key == "power_dist.exponent") c.power_exponent = parse_double(key, v);
    else if (key == "power_dist.min") c.power_min = static_cast<std::uint32_t>(parse_u64(key, v));
    else if (key == "power_dist.max") c.power_max = static_cast<std::uint32_t>(parse_u64(key, v));
    else if (key == "job_size_dist") {
      if (v == "poisson") c.size_kind = SizeDistKind::Poisson;
      else if (v == "powerlaw") c.size_kind = SizeDistKind::PowerLaw;
      else throw ConfigError("config: job_size_dist must be poisson|powerlaw, got '" + v + "'");
    } else if (key == "job_size_dist.nu") c.size_nu = parse_double(key, v);
    else if (key == "job_size_dist.exponent") c.size_exponent = parse_double(key, v);
    else if (key == "job_size_dist.min") c.size_min = static_cast<std::uint32_t>(parse_u64(key, v));
    else if (key == "job_size_dist.max") c.size_max = static_cast<std::uint32_t>(parse_u64(key, v));
    else if (key == "arrivals_per_step_dist") {
      if (v == "constant") c.arrival_kind = ArrivalKind::Constant;
      else if (v == "powerlaw") c.arrival_kind = ArrivalKind::PowerLaw;
      else if (v == "closed") c.arrival_kind = ArrivalKind::Closed;
      else
        throw ConfigError("config: arrivals_per_step_dist must be constant|powerlaw|closed, got '" +
                          v + "'");
    } else if (key == "arrivals_per_step_dist.value") c.arrival_value = parse_double(key, v);
    else if (key == "arrivals_per_step_dist.exponent") c.arrival_exponent = parse_double(key, v);
    else if (key == "arrivals_per_step_dist.max") c.arrival_max = static_cast<std::uint32_t>(parse_u64(key, v));
    else if (key == "arrivals_per_step_dist.alpha") c.closed_alpha = parse_double(key, v);
    else if (key == "arrivals_per_step_dist.churn") c.closed_churn = static_cast<std::uint32_t>(parse_u64(key, v));
    else if (key == "service_model") {
      if (v == "work") c.service_model = ServiceModel::Work;
      else if (v == "random_termination") c.service_model = ServiceModel::RandomTermination;
      else throw ConfigError("config: service_model must be work|random_termination, got '" + v + "'");
    } else if (key == "walk.c") c.walk_c = parse_double(key, v);
    else if (key == "walk.variant") {
      if (v == "greedy") c.walk_variant = WalkVariant::Greedy;
      else if (v == "last_node") c.walk_variant = WalkVariant::LastNode;
      else throw ConfigError("config: walk.variant must be greedy|last_node, got '" + v + "'");
    } else if (key == "acquisition_greedy") c.acquisition_greedy = parse_bool(key, v);
    else if (key == "distinct_sources") c.distinct_sources = parse_bool(key, v);
    else if (key == "steps") c.steps = parse_i64(key, v);
    else if (key == "arrival_steps") c.arrival_steps = parse_i64(key, v);
    else if (key == "seed") c.seed = parse_u64(key, v);
    else if (key == "bytes_A") c.bytes_A = parse_u64(key, v);
    else if (key == "bytes_L") c.bytes_L = parse_u64(key, v);
    else if (key == "fit_window") c.fit_window = static_cast<std::uint32_t>(parse_u64(key, v));
    else if (key == "metrics_diameter_samples") c.diameter_samples = static_cast<std::uint32_t>(parse_u64(key, v));
    else throw ConfigError("config: unknown key '" + key + "'");
  }

  // validation
  std::vector<std::string> errors;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  need(c.n_nodes >= 1, "n_nodes must be >= 1");
  need(c.k_min >= 1, "k_min must be >= 1");
  if (c.power_kind == PowerDistKind::Constant) {
    need(c.power_value >= 1, "power_dist.value must be >= 1");
  } else {
    need(c.power_min >= 1, "power_dist.min must be >= 1");
    need(c.power_max >= c.power_min, "power_dist.max must be >= power_dist.min");
    need(c.power_exponent >= 0.0, "power_dist.exponent must be >= 0");
  }
  if (c.size_kind == SizeDistKind::Poisson) {
    need(c.size_nu > 0.0, "job_size_dist.nu must be > 0");
  } else {
    need(c.size_min >= 1, "job_size_dist.min must be >= 1");
    need(c.size_max >= c.size_min, "job_size_dist.max must be >= job_size_dist.min");
    need(c.size_exponent >= 0.0, "job_size_dist.exponent must be >= 0");
  }
  if (c.arrival_kind == ArrivalKind::Constant) {
    need(c.arrival_value >= 0.0, "arrivals_per_step_dist.value must be >= 0");
  } else if (c.arrival_kind == ArrivalKind::PowerLaw) {
    need(c.arrival_exponent >= 0.0, "arrivals_per_step_dist.exponent must be >= 0");
    need(c.effective_burst_max() >= 1, "arrivals_per_step_dist.max must be >= 1");
  } else {
    need(c.closed_alpha > 0.0 && c.closed_alpha <= 1.0,
         "arrivals_per_step_dist.alpha must be in (0, 1]");
  }
  if (c.service_model == ServiceModel::RandomTermination)
    need(c.arrival_kind == ArrivalKind::Closed,
         "service_model random_termination requires arrivals_per_step_dist = closed");
  need(c.walk_c > 0.0, "walk.c must be > 0");
  need(c.steps >= 0, "steps must be >= 0");
  need(c.arrival_steps >= -1, "arrival_steps must be -1 (unbounded) or >= 0");
  need(c.fit_window >= 1, "fit_window must be >= 1");
  need(c.diameter_samples >= 1, "metrics_diameter_samples must be >= 1");
  if (c.distinct_sources && c.n_nodes >= 1) {
    std::uint32_t kmax_top =
        c.k_min + (c.power_kind == PowerDistKind::Constant ? c.power_value : c.power_max);
    need(kmax_top <= c.n_nodes - 1,
         "distinct_sources needs k_max <= n_nodes - 1 for every node");
  }
  if (!errors.empty()) {
    std::string joined = "invalid config:";
    for (const auto& e : errors) joined += "\n  - " + e;
    throw ConfigError(joined);
  }

  std::uint32_t min_power =
      c.power_kind == PowerDistKind::Constant ? c.power_value : c.power_min;
  if (min_power < 5)
    out.warnings.push_back(
        "minimum node power " + std::to_string(min_power) +
        " is below 5; load quantization will dominate balance on the weakest nodes");
  return out;
}

inline ParsedScenario parse_scenario(const std::string& text) {
  return build_scenario(parse_key_values(text));
}

inline ParsedScenario load_scenario_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

// Canonical echo: active keys only, fixed order, reparses to the same config.
inline std::string serialize_scenario(const ScenarioConfig& c) {
  using detail::format_double;
  std::ostringstream os;
  os << "n_nodes = " << c.n_nodes << "\n";
  os << "k_min = " << c.k_min << "\n";
  if (c.power_kind == PowerDistKind::Constant) {
    os << "power_dist = constant\n";
    os << "power_dist.value = " << c.power_value << "\n";
  } else {
    os << "power_dist = powerlaw\n";
    os << "power_dist.exponent = " << format_double(c.power_exponent) << "\n";
    os << "power_dist.min = " << c.power_min << "\n";
    os << "power_dist.max = " << c.power_max << "\n";
  }
  if (c.size_kind == SizeDistKind::Poisson) {
    os << "job_size_dist = poisson\n";
    os << "job_size_dist.nu = " << format_double(c.size_nu) << "\n";
  } else {
    os << "job_size_dist = powerlaw\n";
    os << "job_size_dist.exponent = " << format_double(c.size_exponent) << "\n";
    os << "job_size_dist.min = " << c.size_min << "\n";
    os << "job_size_dist.max = " << c.size_max << "\n";
  }
  if (c.arrival_kind == ArrivalKind::Constant) {
    os << "arrivals_per_step_dist = constant\n";
    os << "arrivals_per_step_dist.value = " << format_double(c.arrival_value) << "\n";
  } else if (c.arrival_kind == ArrivalKind::PowerLaw) {
    os << "arrivals_per_step_dist = powerlaw\n";
    os << "arrivals_per_step_dist.exponent = " << format_double(c.arrival_exponent) << "\n";
    os << "arrivals_per_step_dist.max = " << c.arrival_max << "\n";
  } else {
    os << "arrivals_per_step_dist = closed\n";
    os << "arrivals_per_step_dist.alpha = " << format_double(c.closed_alpha) << "\n";
    os << "arrivals_per_step_dist.churn = " << c.closed_churn << "\n";
  }
  os << "service_model = "
     << (c.service_model == ServiceModel::Work ? "work" : "random_termination") << "\n";
  os << "walk.c = " << format_double(c.walk_c) << "\n";
  os << "walk.variant = " << (c.walk_variant == WalkVariant::Greedy ? "greedy" : "last_node")
     << "\n";
  os << "acquisition_greedy = " << (c.acquisition_greedy ? "true" : "false") << "\n";
  os << "distinct_sources = " << (c.distinct_sources ? "true" : "false") << "\n";
  os << "steps = " << c.steps << "\n";
  os << "arrival_steps = " << c.arrival_steps << "\n";
  os << "seed = " << c.seed << "\n";
  os << "bytes_A = " << c.bytes_A << "\n";
  os << "bytes_L = " << c.bytes_L << "\n";
  os << "fit_window = " << c.fit_window << "\n";
  os << "metrics_diameter_samples = " << c.diameter_samples << "\n";
  return os.str();
}

// Numeric keys a sweep may drive. Values are injected as text and reparsed,
// so integer keys reject fractional sweep points with the usual errors.
inline bool is_numeric_config_key(const std::string& key) {
  static const char* keys[] = {
      "n_nodes", "k_min", "power_dist.value", "power_dist.exponent", "power_dist.min",
      "power_dist.max", "job_size_dist.nu", "job_size_dist.exponent", "job_size_dist.min",
      "job_size_dist.max", "arrivals_per_step_dist.value", "arrivals_per_step_dist.exponent",
      "arrivals_per_step_dist.max", "arrivals_per_step_dist.alpha",
      "arrivals_per_step_dist.churn", "walk.c", "steps", "arrival_steps", "seed", "bytes_A",
      "bytes_L", "fit_window", "metrics_diameter_samples"};
  for (const char* k : keys)
    if (key == k) return true;
  return false;
}

}  // namespace bon

#endif  // BON_CONFIG_HPP
