#ifndef BON_CLI_COMMANDS_HPP
#define BON_CLI_COMMANDS_HPP

// Implementations behind the bon command-line tool. Kept header-side and
// argv-free so the test suite can invoke commands in process and assert on
// exit codes and artifacts.
//
// Exit code contract: 0 success, 1 runtime failure (including a failed
// validation), 2 invalid config or arguments. BON_OUT_DIR, when set, overrides
// the output directory. Commands overwrite their artifacts; they never append.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bon/analytics.hpp"
#include "bon/config.hpp"
#include "bon/engine.hpp"
#include "bon/io.hpp"

namespace bon::cli {

inline constexpr double kEq1TvMax = 0.05;
inline constexpr double kEq1ChiPMin = 0.01;
inline constexpr std::int64_t kDefaultSnapshotEvery = 100;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::int64_t snapshots = 0;  // cadence in steps; 0 = no snapshots
  std::uint32_t parallelism = 1;
};

namespace detail {

namespace fs = std::filesystem;

inline std::optional<fs::path> resolve_out_dir(const CommonArgs& args, std::ostream& err) {
  const char* env = std::getenv("BON_OUT_DIR");
  std::string dir = (env && *env) ? std::string(env) : args.out_dir;
  if (dir.empty()) {
    err << "error: no output directory (use --out or BON_OUT_DIR)\n";
    return std::nullopt;
  }
  return fs::path(dir);
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

inline std::optional<ParsedScenario> load_config(const CommonArgs& args, std::ostream& err) {
  try {
    ParsedScenario ps = load_scenario_file(args.config_path);
    if (args.seed) ps.config.seed = *args.seed;
    for (const auto& w : ps.warnings) err << "warning: " << w << "\n";
    return ps;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return std::nullopt;
  }
}

inline std::string metrics_text(const RunReport& rep) {
  std::ostringstream os;
  write_metrics_csv(os, rep);
  return os.str();
}

inline void write_run_artifacts(const fs::path& dir, const RunReport& rep) {
  fs::create_directories(dir);
  write_text(dir / "metrics.csv", metrics_text(rep));
  write_text(dir / "report.json", report_json(rep).dump(2) + "\n");
}

struct WindowSummary {
  std::size_t steps = 0;
  double std_load_mean = 0.0;
  double std_load_max = 0.0;
  double diameter_mean = 0.0;
};

inline WindowSummary summarize_window(const std::vector<MetricsSnapshot>& rows) {
  WindowSummary w;
  if (rows.empty()) return w;
  std::size_t n = std::min<std::size_t>(rows.size(), std::max<std::size_t>(1, rows.size() / 5));
  n = std::min<std::size_t>(n, 100);
  w.steps = n;
  for (std::size_t i = rows.size() - n; i < rows.size(); ++i) {
    w.std_load_mean += rows[i].std_load;
    w.std_load_max = std::max(w.std_load_max, rows[i].std_load);
    w.diameter_mean += rows[i].diameter_est;
  }
  w.std_load_mean /= static_cast<double>(n);
  w.diameter_mean /= static_cast<double>(n);
  return w;
}

}  // namespace detail

// bon run: one BON simulation; metrics.csv, report.json, trace.csv for
// open-loop configs, and graph snapshots at the requested cadence.
inline int cmd_run(const CommonArgs& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  namespace fs = std::filesystem;
  auto dir = detail::resolve_out_dir(args, err);
  if (!dir) return 2;
  auto ps = detail::load_config(args, err);
  if (!ps) return 2;
  try {
    fs::create_directories(*dir);
    fs::remove_all(*dir / "snapshots");

    Engine engine(ps->config, SchedulerKind::Bon);
    SnapshotSink sink;
    std::optional<SnapshotSink> sink_opt;
    if (args.snapshots > 0) {
      fs::create_directories(*dir / "snapshots");
      sink.every = args.snapshots;
      sink.emit = [&](std::int64_t step, const OverlayGraph& g) {
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_%06lld.edgelist",
                      static_cast<long long>(step));
        std::ofstream f(*dir / "snapshots" / name, std::ios::binary | std::ios::trunc);
        std::istringstream echo(serialize_scenario(ps->config));
        std::vector<std::string> comments;
        std::string line;
        while (std::getline(echo, line)) comments.push_back(line);
        g.write_snapshot(f, step, comments);
      };
      sink_opt = sink;
    }
    RunReport rep = engine.run(sink_opt ? &*sink_opt : nullptr);
    detail::write_run_artifacts(*dir, rep);
    if (ps->config.arrival_kind != ArrivalKind::Closed) {
      std::ostringstream tr;
      engine.trace().write_csv(tr);
      detail::write_text(*dir / "trace.csv", tr.str());
    }
    out << "run: " << rep.counters.jobs_completed << "/" << rep.counters.jobs_arrived
        << " jobs completed over " << ps->config.steps << " steps -> " << dir->string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// bon compare: BON and the frozen-graph central scheduler on the identical
// pre-generated trace; closed-loop configs have no shared trace and are
// rejected.
inline int cmd_compare(const CommonArgs& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  auto dir = detail::resolve_out_dir(args, err);
  if (!dir) return 2;
  auto ps = detail::load_config(args, err);
  if (!ps) return 2;
  if (ps->config.arrival_kind == ArrivalKind::Closed) {
    err << "error: compare needs an open-loop trace; closed-loop arrivals react to each "
           "scheduler's own completions\n";
    return 2;
  }
  try {
    std::filesystem::create_directories(*dir);
    RunReport bon_rep = run_simulation(ps->config, SchedulerKind::Bon);
    RunReport central_rep = run_simulation(ps->config, SchedulerKind::Central);
    detail::write_text(*dir / "bon_metrics.csv", detail::metrics_text(bon_rep));
    detail::write_text(*dir / "central_metrics.csv", detail::metrics_text(central_rep));
    detail::write_text(*dir / "bon_report.json", report_json(bon_rep).dump(2) + "\n");
    detail::write_text(*dir / "central_report.json", report_json(central_rep).dump(2) + "\n");

    nlohmann::json cj;
    cj["schema"] = "bon-compare/1";
    cj["config"] = config_json(ps->config);
    cj["bon_completed"] = bon_rep.counters.jobs_completed;
    cj["central_completed"] = central_rep.counters.jobs_completed;
    if (central_rep.counters.jobs_completed > 0) {
      cj["ratio"] = static_cast<double>(bon_rep.counters.jobs_completed) /
                    static_cast<double>(central_rep.counters.jobs_completed);
    } else {
      cj["ratio"] = nullptr;
    }
    detail::write_text(*dir / "compare.json", cj.dump(2) + "\n");
    out << "compare: bon " << bon_rep.counters.jobs_completed << " vs central "
        << central_rep.counters.jobs_completed << " -> " << dir->string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// bon sweep: rerun the base config once per axis value (numeric config key),
// optionally across a small thread pool, and aggregate a summary row per
// value. Sub-run artifacts land in "<axis>=<value>/" subdirectories.
inline int cmd_sweep(const CommonArgs& args, const std::string& axis,
                     const std::vector<double>& values, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  namespace fs = std::filesystem;
  auto dir = detail::resolve_out_dir(args, err);
  if (!dir) return 2;
  if (!is_numeric_config_key(axis)) {
    err << "error: '" << axis << "' is not a sweepable numeric config key\n";
    return 2;
  }

  KeyValues base_kv;
  try {
    std::ifstream f(args.config_path);
    if (!f) throw ConfigError("config: cannot open '" + args.config_path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    base_kv = parse_key_values(ss.str());
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  struct Item {
    double value = 0.0;
    std::string label;
    ScenarioConfig config;
    RunReport report;
    std::string error;
  };
  std::vector<Item> items(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    items[i].value = values[i];
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", values[i]);
    items[i].label = buf;
    KeyValues kv = base_kv;
    kv[axis] = items[i].label;
    try {
      ParsedScenario ps = build_scenario(kv);
      if (args.seed) ps.config.seed = *args.seed;
      items[i].config = ps.config;
    } catch (const ConfigError& e) {
      err << "error: " << axis << "=" << items[i].label << ": " << e.what() << "\n";
      return 2;
    }
  }

  try {
    fs::create_directories(*dir);
    std::mutex log_mutex;
    std::size_t cursor = 0;
    std::mutex cursor_mutex;
    auto worker = [&]() {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lk(cursor_mutex);
          if (cursor >= items.size()) return;
          i = cursor++;
        }
        try {
          items[i].report = run_simulation(items[i].config, SchedulerKind::Bon);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lk(log_mutex);
          items[i].error = e.what();
        }
      }
    };
    std::uint32_t threads = std::max<std::uint32_t>(1, args.parallelism);
    threads = std::min<std::uint32_t>(threads, items.empty() ? 1 : items.size());
    std::vector<std::thread> pool;
    for (std::uint32_t t = 0; t + 1 < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const Item& it : items)
      if (!it.error.empty()) throw std::runtime_error(axis + "=" + it.label + ": " + it.error);

    std::ostringstream sm;
    sm << "axis,value,jobs_arrived,jobs_completed,edges_final,mean_k_final,load_norm_final,"
          "wcc_final,scc_final,r2_final,window_steps,std_load_mean,std_load_max,diameter_mean\n";
    for (Item& it : items) {
      fs::path sub = *dir / (axis + "=" + it.label);
      fs::remove_all(sub);
      detail::write_run_artifacts(sub, it.report);
      const auto& rows = it.report.metrics;
      detail::WindowSummary w = detail::summarize_window(rows);
      const MetricsSnapshot last = rows.empty() ? MetricsSnapshot{} : rows.back();
      sm << axis << "," << it.label << "," << it.report.counters.jobs_arrived << ","
         << it.report.counters.jobs_completed << "," << last.edges << ","
         << bon::detail::fmt_g(last.mean_k) << "," << bon::detail::fmt_g(last.load_norm) << ","
         << last.wcc << "," << last.scc << ","
         << (last.r2_power_load ? bon::detail::fmt_g(*last.r2_power_load) : std::string("nan"))
         << "," << w.steps << "," << bon::detail::fmt_g(w.std_load_mean) << ","
         << bon::detail::fmt_g(w.std_load_max) << "," << bon::detail::fmt_g(w.diameter_mean)
         << "\n";
    }
    detail::write_text(*dir / "summary.csv", sm.str());
    out << "sweep: " << items.size() << " runs over " << axis << " -> " << dir->string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// bon analyze: post-process a finished run directory. The degree fit needs a
// uniform-power config plus at least one graph snapshot; the diameter scatter
// needs only the metrics rows.
inline int cmd_analyze(const std::string& in_dir, const CommonArgs& args,
                       std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  namespace fs = std::filesystem;
  auto dir = detail::resolve_out_dir(args, err);
  if (!dir) return 2;
  try {
    fs::path in(in_dir);
    std::ifstream mf(in / "metrics.csv");
    if (!mf) {
      err << "error: no metrics.csv under '" << in_dir << "'\n";
      return 2;
    }
    MetricsFile metrics = read_metrics_csv(mf);
    if (!metrics.config) {
      err << "error: metrics.csv lacks a config echo\n";
      return 2;
    }
    const ScenarioConfig& cfg = *metrics.config;
    fs::create_directories(*dir);

    // diameter vs ln N / ln <k>
    {
      std::ostringstream sc;
      sc << "step,ln_n_over_ln_mean_k,diameter_est\n";
      for (const MetricsSnapshot& m : metrics.rows) {
        double x = m.mean_k > 1.0
                       ? std::log(static_cast<double>(cfg.n_nodes)) / std::log(m.mean_k)
                       : 0.0;
        sc << m.step << "," << bon::detail::fmt_g(x) << "," << m.diameter_est << "\n";
      }
      detail::write_text(*dir / "diameter_scatter.csv", sc.str());
    }

    // degree histogram vs binomial prediction, from the newest snapshot
    nlohmann::json fj;
    fj["schema"] = "bon-fit-report/1";
    fj["config"] = config_json(cfg);
    std::optional<fs::path> snap_path;
    if (fs::is_directory(in / "snapshots")) {
      std::vector<fs::path> snaps;
      for (const auto& e : fs::directory_iterator(in / "snapshots"))
        if (e.path().extension() == ".edgelist") snaps.push_back(e.path());
      std::sort(snaps.begin(), snaps.end());
      if (!snaps.empty()) snap_path = snaps.back();
    }
    if (!snap_path) {
      fj["fit"] = nullptr;
      fj["note"] = "no graph snapshot found; run with --snapshots to enable the degree fit";
    } else if (cfg.power_kind != PowerDistKind::Constant) {
      fj["fit"] = nullptr;
      fj["note"] = "degree fit needs a uniform power population";
    } else {
      std::ifstream sf(*snap_path);
      OverlayGraph::Snapshot snap = OverlayGraph::read_snapshot(sf);
      const std::uint32_t C = cfg.power_value;
      std::vector<std::uint64_t> hist(C + 1, 0);
      double free_sum = 0.0;
      for (NodeId v = 0; v < snap.graph.node_count(); ++v) {
        std::int64_t free = static_cast<std::int64_t>(snap.graph.in_degree(v)) - cfg.k_min;
        free = std::clamp<std::int64_t>(free, 0, C);
        ++hist[static_cast<std::size_t>(free)];
        free_sum += static_cast<double>(free);
      }
      AnalyticModel model;
      model.n_nodes = snap.graph.node_count();
      model.capacity = C;
      double alpha_hat = 1.0 - free_sum / (static_cast<double>(snap.graph.node_count()) * C);
      model.total_jobs = alpha_hat * static_cast<double>(model.n_nodes) * C;
      std::vector<double> probs = binomial_degree_dist(model);
      FitReport fit = fit_degree_distribution(hist, probs, /*params_estimated=*/1);
      fj["fit"] = fit_json(fit);
      fj["alpha_hat"] = alpha_hat;
      fj["snapshot"] = snap_path->filename().string();
      fj["snapshot_step"] = snap.step;

      std::ostringstream dh;
      dh << "free_units,observed,expected\n";
      for (std::size_t i = 0; i < hist.size(); ++i)
        dh << i << "," << hist[i] << ","
           << bon::detail::fmt_g(probs[i] * static_cast<double>(model.n_nodes)) << "\n";
      detail::write_text(*dir / "degree_hist.csv", dh.str());
    }
    detail::write_text(*dir / "fit_report.json", fj.dump(2) + "\n");
    out << "analyze: " << metrics.rows.size() << " metric rows -> " << dir->string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// bon validate-eq1: run the simplified last-node protocol at constant
// population and test the stationary free-capacity law against the binomial
// prediction. Total variation is measured on the window-averaged histogram;
// the chi-square uses the final-step snapshot so autocorrelation across the
// window cannot inflate the statistic.
inline int cmd_validate_eq1(const CommonArgs& args, std::ostream& out = std::cout,
                            std::ostream& err = std::cerr) {
  auto dir = detail::resolve_out_dir(args, err);
  if (!dir) return 2;
  auto ps = detail::load_config(args, err);
  if (!ps) return 2;
  const ScenarioConfig& cfg = ps->config;
  if (cfg.walk_variant != WalkVariant::LastNode || cfg.power_kind != PowerDistKind::Constant ||
      cfg.arrival_kind != ArrivalKind::Closed ||
      cfg.service_model != ServiceModel::RandomTermination) {
    err << "error: validate-eq1 needs walk.variant = last_node, power_dist = constant, "
           "arrivals_per_step_dist = closed, service_model = random_termination\n";
    return 2;
  }
  try {
    std::filesystem::create_directories(*dir);
    Engine engine(cfg, SchedulerKind::Bon);
    RunReport rep = engine.run();
    detail::write_run_artifacts(*dir, rep);

    AnalyticModel model;
    model.n_nodes = cfg.n_nodes;
    model.capacity = cfg.power_value;
    model.total_jobs = cfg.closed_alpha * static_cast<double>(cfg.n_nodes) * cfg.power_value;
    std::vector<double> probs = binomial_degree_dist(model);

    FitReport window_fit = fit_degree_distribution(rep.free_capacity_hist, probs);

    std::vector<std::uint64_t> final_hist(cfg.power_value + 1, 0);
    for (NodeId v = 0; v < cfg.n_nodes; ++v) {
      std::int64_t free = static_cast<std::int64_t>(engine.graph().in_degree(v)) - cfg.k_min;
      free = std::clamp<std::int64_t>(free, 0, cfg.power_value);
      ++final_hist[static_cast<std::size_t>(free)];
    }
    FitReport final_fit = fit_degree_distribution(final_hist, probs);

    bool pass = window_fit.tv_distance <= kEq1TvMax && final_fit.p_value >= kEq1ChiPMin;

    nlohmann::json fj;
    fj["schema"] = "bon-eq1-validation/1";
    fj["config"] = config_json(cfg);
    fj["alpha"] = cfg.closed_alpha;
    fj["window_fit"] = fit_json(window_fit);
    fj["final_step_fit"] = fit_json(final_fit);
    fj["thresholds"] = {{"tv_max", kEq1TvMax}, {"chi_p_min", kEq1ChiPMin}};
    fj["pass"] = pass;
    detail::write_text(*dir / "fit_report.json", fj.dump(2) + "\n");

    out << "validate-eq1: tv=" << window_fit.tv_distance << " (window) chi2 p="
        << final_fit.p_value << " (final step) -> " << (pass ? "pass" : "FAIL") << "\n";
    return pass ? 0 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bon::cli

#endif  // BON_CLI_COMMANDS_HPP
