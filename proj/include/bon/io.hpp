#ifndef BON_IO_HPP
#define BON_IO_HPP

// On-disk artifact formats. The metrics CSV column set and the snapshot header
// are stable contracts; downstream plotting and the analyze command parse
// them, so changes here are breaking. Every artifact embeds the canonical
// config echo for provenance ('#'-prefixed lines in CSVs, a "config" object in
// JSON).

#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bon/config.hpp"
#include "bon/engine.hpp"

namespace bon {

inline constexpr const char* kMetricsHeader =
    "step,load_norm,mean_k,std_load,r2_power_load,wcc,scc,diameter_est,"
    "jobs_running,jobs_completed,brdm_hops,edges";

namespace detail {

inline std::string fmt_g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

}  // namespace detail

inline void write_metrics_csv(std::ostream& os, const RunReport& rep) {
  std::istringstream echo(serialize_scenario(rep.config));
  std::string line;
  while (std::getline(echo, line)) os << "# " << line << "\n";
  os << "# kind = " << (rep.kind == SchedulerKind::Bon ? "bon" : "central") << "\n";
  os << kMetricsHeader << "\n";
  for (const MetricsSnapshot& m : rep.metrics) {
    os << m.step << "," << detail::fmt_g(m.load_norm) << "," << detail::fmt_g(m.mean_k) << ","
       << detail::fmt_g(m.std_load) << ","
       << (m.r2_power_load ? detail::fmt_g(*m.r2_power_load) : std::string("nan")) << ","
       << m.wcc << "," << m.scc << "," << m.diameter_est << "," << m.jobs_running << ","
       << m.jobs_completed << "," << m.brdm_hops << "," << m.edges << "\n";
  }
}

struct MetricsFile {
  std::optional<ScenarioConfig> config;
  std::string kind;
  std::vector<MetricsSnapshot> rows;
};

inline MetricsFile read_metrics_csv(std::istream& is) {
  MetricsFile out;
  std::string line;
  std::string echo_text;
  bool saw_header = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] == '#') {
      std::string body = line.size() > 1 ? line.substr(2) : "";
      auto eq = body.find('=');
      if (body.rfind("kind", 0) == 0 && eq != std::string::npos)
        out.kind = detail::trim(body.substr(eq + 1));
      else
        echo_text += body + "\n";
      continue;
    }
    if (!saw_header) {
      if (line != kMetricsHeader)
        throw std::runtime_error("metrics csv: unexpected header: " + line);
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    MetricsSnapshot m;
    std::istringstream ls(line);
    std::string f;
    auto next = [&]() {
      if (!std::getline(ls, f, ',')) throw std::runtime_error("metrics csv: short row: " + line);
      return f;
    };
    m.step = std::stoll(next());
    m.load_norm = std::stod(next());
    m.mean_k = std::stod(next());
    m.std_load = std::stod(next());
    {
      std::string r2 = next();
      if (r2 != "nan") m.r2_power_load = std::stod(r2);
    }
    m.wcc = static_cast<std::uint32_t>(std::stoul(next()));
    m.scc = static_cast<std::uint32_t>(std::stoul(next()));
    m.diameter_est = static_cast<std::uint32_t>(std::stoul(next()));
    m.jobs_running = std::stoull(next());
    m.jobs_completed = std::stoull(next());
    m.brdm_hops = std::stoull(next());
    m.edges = std::stoull(next());
    out.rows.push_back(m);
  }
  if (!saw_header) throw std::runtime_error("metrics csv: missing header");
  if (!echo_text.empty()) out.config = parse_scenario(echo_text).config;
  return out;
}

inline nlohmann::json config_json(const ScenarioConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : parse_key_values(serialize_scenario(cfg))) j[k] = v;
  return j;
}

inline nlohmann::json report_json(const RunReport& rep) {
  nlohmann::json j;
  j["schema"] = "bon-run-report/1";
  j["kind"] = rep.kind == SchedulerKind::Bon ? "bon" : "central";
  j["config"] = config_json(rep.config);
  j["walk_ttl"] = rep.walk_ttl;
  j["counters"] = {{"jobs_arrived", rep.counters.jobs_arrived},
                   {"jobs_completed", rep.counters.jobs_completed},
                   {"walk_hops_total", rep.counters.walk_hops_total},
                   {"brdm_messages", rep.counters.brdm_messages},
                   {"edge_ops", rep.counters.edge_ops},
                   {"bytes_sent", rep.counters.bytes_sent}};
  j["bandwidth"] = {{"measured_total", rep.bandwidth.total},
                    {"measured_max_per_node", rep.bandwidth.max_per_node},
                    {"model",
                     {{"central_total", rep.bandwidth_prediction.central_total},
                      {"bon_total", rep.bandwidth_prediction.bon_total},
                      {"central_max_node", rep.bandwidth_prediction.central_max_node},
                      {"bon_per_node", rep.bandwidth_prediction.bon_per_node}}}};
  nlohmann::json fin;
  fin["steps"] = rep.metrics.empty() ? 0 : rep.metrics.back().step;
  fin["jobs_running"] = rep.metrics.empty() ? 0 : rep.metrics.back().jobs_running;
  fin["mean_norm_load"] = rep.final_load.mean_norm_load;
  fin["std_norm_load"] = rep.final_load.std_norm_load;
  if (rep.final_load.r2)
    fin["r2_power_load"] = *rep.final_load.r2;
  else
    fin["r2_power_load"] = nullptr;
  j["final"] = fin;
  if (!rep.free_capacity_hist.empty()) {
    j["fit_window"] = {{"steps", rep.fit_window_steps},
                       {"mean_jobs", rep.fit_window_mean_jobs},
                       {"free_capacity_hist", rep.free_capacity_hist}};
  }
  return j;
}

inline nlohmann::json fit_json(const FitReport& fit) {
  return {{"tv_distance", fit.tv_distance}, {"chi_square", fit.chi_square},
          {"df", fit.df},                   {"p_value", fit.p_value},
          {"n_samples", fit.n_samples},     {"bins_used", fit.bins_used}};
}

}  // namespace bon

#endif  // BON_IO_HPP
