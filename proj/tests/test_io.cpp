// Artifact format tests: the metrics CSV header contract, the embedded config
// echo, and the JSON report schema. Fixtures are synthetic so these tests
// exercise only serialization, not the simulator.

#include <catch_amalgamated.hpp>

#include <sstream>
#include <string>

#include "bon/engine.hpp"
#include "bon/io.hpp"

using bon::MetricsFile;
using bon::MetricsSnapshot;
using bon::RunReport;
using bon::ScenarioConfig;

namespace {

RunReport sample_report() {
  RunReport rep;
  rep.config.n_nodes = 32;
  rep.config.steps = 2;
  rep.config.seed = 7;
  rep.kind = bon::SchedulerKind::Bon;
  rep.walk_ttl = 7;
  rep.counters.jobs_arrived = 20;
  rep.counters.jobs_completed = 15;
  rep.counters.walk_hops_total = 140;
  rep.counters.brdm_messages = 40;
  rep.counters.edge_ops = 33;
  rep.counters.bytes_sent = 123456;
  rep.bandwidth.total = 123456;
  rep.bandwidth.max_per_node = 9999;
  rep.bandwidth_prediction = bon::bandwidth_model(32, 0.3125, 10000, 16, 7);
  rep.final_load.mean_norm_load = 0.25;
  rep.final_load.std_norm_load = 0.01;
  rep.final_load.r2 = 0.97;

  MetricsSnapshot a;
  a.step = 1;
  a.load_norm = 0.125;
  a.mean_k = 66.5;
  a.std_load = 0.0125;
  a.r2_power_load = 0.875;
  a.wcc = 1;
  a.scc = 2;
  a.diameter_est = 3;
  a.jobs_running = 10;
  a.jobs_completed = 5;
  a.brdm_hops = 70;
  a.edges = 2128;
  MetricsSnapshot b = a;
  b.step = 2;
  b.r2_power_load.reset();
  b.jobs_completed = 15;
  rep.metrics = {a, b};
  return rep;
}

}  // namespace

TEST_CASE("metrics csv round trips rows, kind and config echo") {
  RunReport rep = sample_report();
  std::ostringstream os;
  bon::write_metrics_csv(os, rep);
  const std::string text = os.str();
  CHECK(text.find("# n_nodes = 32\n") != std::string::npos);
  CHECK(text.find("# kind = bon\n") != std::string::npos);
  CHECK(text.find(bon::kMetricsHeader) != std::string::npos);

  std::istringstream is(text);
  MetricsFile back = bon::read_metrics_csv(is);
  CHECK(back.kind == "bon");
  REQUIRE(back.config.has_value());
  CHECK(back.config->n_nodes == 32);
  CHECK(back.config->seed == 7);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].step == 1);
  CHECK(back.rows[0].load_norm == 0.125);
  CHECK(back.rows[0].mean_k == 66.5);
  REQUIRE(back.rows[0].r2_power_load.has_value());
  CHECK(*back.rows[0].r2_power_load == 0.875);
  CHECK_FALSE(back.rows[1].r2_power_load.has_value());
  CHECK(back.rows[1].jobs_completed == 15);
  CHECK(back.rows[1].edges == 2128);
}

TEST_CASE("the column header is the documented contract") {
  CHECK(std::string(bon::kMetricsHeader) ==
        "step,load_norm,mean_k,std_load,r2_power_load,wcc,scc,diameter_est,"
        "jobs_running,jobs_completed,brdm_hops,edges");
}

TEST_CASE("metrics csv rejects foreign headers") {
  std::istringstream is("step,other\n1,2\n");
  CHECK_THROWS_AS(bon::read_metrics_csv(is), std::runtime_error);
  std::istringstream empty("");
  CHECK_THROWS_AS(bon::read_metrics_csv(empty), std::runtime_error);
}

TEST_CASE("report json carries the documented schema") {
  RunReport rep = sample_report();
  nlohmann::json j = bon::report_json(rep);
  CHECK(j["schema"] == "bon-run-report/1");
  CHECK(j["kind"] == "bon");
  CHECK(j["walk_ttl"] == 7);
  CHECK(j["counters"]["jobs_completed"] == 15);
  CHECK(j["counters"]["bytes_sent"] == 123456);
  CHECK(j["bandwidth"]["measured_total"] == 123456);
  CHECK(j["bandwidth"]["model"]["bon_total"].get<double>() > 0.0);
  CHECK(j["final"]["steps"] == 2);
  CHECK(j["final"]["r2_power_load"].get<double>() == 0.97);
  CHECK(j["config"]["n_nodes"] == "32");
  // no fit window was recorded
  CHECK_FALSE(j.contains("fit_window"));

  rep.free_capacity_hist = {5, 10, 17};
  rep.fit_window_steps = 3;
  rep.fit_window_mean_jobs = 12.5;
  nlohmann::json j2 = bon::report_json(rep);
  REQUIRE(j2.contains("fit_window"));
  CHECK(j2["fit_window"]["steps"] == 3);
  CHECK(j2["fit_window"]["free_capacity_hist"].size() == 3);
}

TEST_CASE("null correlation serializes as JSON null") {
  RunReport rep = sample_report();
  rep.final_load.r2.reset();
  nlohmann::json j = bon::report_json(rep);
  CHECK(j["final"]["r2_power_load"].is_null());
}

TEST_CASE("config json echoes the active keys as strings") {
  ScenarioConfig cfg;
  cfg.n_nodes = 99;
  nlohmann::json j = bon::config_json(cfg);
  CHECK(j["n_nodes"] == "99");
  CHECK(j["power_dist"] == "constant");
  CHECK_FALSE(j.contains("power_dist.min"));
}

TEST_CASE("fit json mirrors the report struct") {
  bon::FitReport fit;
  fit.tv_distance = 0.03;
  fit.chi_square = 12.5;
  fit.df = 9;
  fit.p_value = 0.19;
  fit.n_samples = 4096;
  fit.bins_used = 10;
  nlohmann::json j = bon::fit_json(fit);
  CHECK(j["tv_distance"] == 0.03);
  CHECK(j["df"] == 9);
  CHECK(j["n_samples"] == 4096);
}
