#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "coverplan/sim/outputs.hpp"

namespace fs = std::filesystem;
using namespace coverplan;

namespace {

enum Exit { kOk = 0, kInputError = 2, kRuntimeError = 3 };

struct RunManifest {
  fs::path scenario;
  fs::path out;
  std::vector<std::string> overrides;  // key=value
  std::optional<std::uint64_t> seed;
  bool view_adapt = true;
  bool dynamic_obstacles = true;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("coverplan");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("COVERPLAN_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps anything unrecognised to off; only accept real names
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

/// Loads the scenario and applies the manifest's seed, overrides and toggles.
Scenario prepare(const RunManifest& m) {
  Scenario s = load_scenario(m.scenario);
  if (m.seed) s.seed = *m.seed;
  for (const auto& kv : m.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("override '" + kv + "' is not key=value");
    set_param(s.params, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!m.view_adapt) s.params.view_adapt = false;
  if (!m.dynamic_obstacles) s.params.dynamic_obstacles = false;
  s.validate();
  return s;
}

int cmd_plan(const RunManifest& m, bool svg) {
  try {
    const Scenario s = prepare(m);
    const GlobalResult g = plan_global(s);
    fs::create_directories(m.out);
    write_file_atomic(m.out / "plan.json", plan_to_json(g.plan, g.viewpoints.viewpoints).dump(2) + "\n");
    if (svg)
      write_file_atomic(m.out / "plan.svg", plan_to_svg(s.reference, g.surfaces, g.viewpoints.viewpoints, g.plan.order,
                                                        s.robot_start.position));
    for (const auto& w : g.viewpoints.warnings) spdlog::warn("segment {}: {}", w.segment, w.message);
    spdlog::info("{} segments, {} viewpoints, tour {:.2f} m", g.segments.size(), g.plan.order.size(),
                 g.plan.lengths.reordered);
    std::cout << "planned " << g.plan.order.size() << " viewpoints over " << g.segments.size() << " segments\n";
    return kOk;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const MissionError& e) {
    // nothing to plan is a property of the input
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

struct RunOutcome {
  int code = kOk;
  std::string error;
  std::optional<CoverageReport> report;
};

RunOutcome execute(const RunManifest& m, OutputToggles toggles) {
  RunOutcome o;
  Scenario s;
  try {
    s = prepare(m);
  } catch (const std::exception& e) {
    o.code = kInputError;
    o.error = e.what();
    return o;
  }
  try {
    const MissionResult r = run_mission(s);
    for (const auto& e : r.events)
      spdlog::debug("t={:.1f} {} {} {}", e.t, e.kind, e.viewpoint, e.detail);
    if (!m.out.empty()) write_mission_outputs(m.out, r, s.dynamic_obstacles, toggles);
    o.report = r.report;
    if (r.report.collisions > 0) {
      o.code = kRuntimeError;
      o.error = std::to_string(r.report.collisions) + " collision(s)";
    }
  } catch (const std::exception& e) {
    o.code = kRuntimeError;
    o.error = e.what();
  }
  return o;
}

int cmd_run(const RunManifest& m, OutputToggles toggles) {
  const RunOutcome o = execute(m, toggles);
  if (o.report) {
    const auto& r = *o.report;
    std::printf("coverage %.4f  path %.2f m  time %.1f s  min clearance %.3f m  collisions %d  adapted %d\n",
                r.coverage_rate, r.path_length, r.mission_time, r.min_clearance, r.collisions, r.adapted);
  }
  if (!o.error.empty()) std::cerr << "error: " << o.error << "\n";
  return o.code;
}

// Batch manifests are JSON arrays of run objects; relative paths resolve against the file.
std::vector<RunManifest> load_batch(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON: " + e.what());
  }
  if (!doc.is_array() || doc.empty()) throw ParseError(path.string() + ": expected a non-empty array of runs");
  const fs::path base = path.parent_path();
  std::vector<RunManifest> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& j = doc[i];
    const std::string where = path.string() + "[" + std::to_string(i) + "]";
    try {
      for (const auto& [key, value] : j.items())
        if (key != "scenario" && key != "seed" && key != "set" && key != "view_adapt" && key != "dynamic_obstacles" &&
            key != "out")
          throw ParseError("unknown field '" + key + "'");
      RunManifest m;
      m.scenario = base / j.at("scenario").get<std::string>();
      if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("set"))
        for (const auto& [k, v] : j.at("set").items()) m.overrides.push_back(k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()));
      m.view_adapt = j.value("view_adapt", true);
      m.dynamic_obstacles = j.value("dynamic_obstacles", true);
      if (j.contains("out")) m.out = base / j.at("out").get<std::string>();
      out.push_back(std::move(m));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

int cmd_batch(const std::vector<std::string>& manifests, const fs::path& out_csv, int jobs) {
  std::vector<RunManifest> runs;
  try {
    for (const auto& m : manifests) {
      auto v = load_batch(m);
      runs.insert(runs.end(), v.begin(), v.end());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }

  std::vector<RunOutcome> outcomes(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < runs.size();) outcomes[i] = execute(runs[i], {});
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<std::string> rows;
  int worst = kOk;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const RunManifest& m = runs[i];
    const RunOutcome& o = outcomes[i];
    worst = std::max(worst, o.code);
    std::ostringstream row;
    row.precision(10);
    row << csv_field(m.scenario.lexically_normal().string()) << ',';
    if (o.report) row << o.report->seed; else if (m.seed) row << *m.seed;
    row << ',' << m.view_adapt << ',' << m.dynamic_obstacles << ',' << o.code << ',';
    if (o.report) {
      const auto& r = *o.report;
      row << r.coverage_rate << ',' << r.path_length << ',' << r.mission_time << ',' << r.collisions << ',' << r.adapted;
    } else {
      row << ",,,,";
    }
    row << ',' << csv_field(o.error);
    rows.push_back(row.str());
  }
  // sorted so the output does not depend on manifest order
  std::sort(rows.begin(), rows.end());
  std::string csv = "scenario,seed,view_adapt,dynamic_obstacles,exit_code,coverage_rate,path_length_m,mission_time_s,collisions,adapted,error\n";
  for (const auto& r : rows) csv += r + "\n";
  try {
    if (out_csv.empty()) {
      std::cout << csv;
    } else {
      if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
      write_file_atomic(out_csv, csv);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Coverage inspection planner and mission simulator"};
  app.require_subcommand(1);

  RunManifest m;
  std::uint64_t seed = 0;
  OutputToggles toggles;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", m.scenario, "Scenario JSON file")->required();
    sub->add_option("--out", m.out, "Output directory")->required();
    sub->add_option("--seed", seed, "Override the scenario seed");
    sub->add_option("--set", m.overrides, "Parameter override key=value (repeatable)");
  };

  auto* plan = app.add_subcommand("plan", "Plan viewpoints and the visiting order without flying");
  common(plan);
  plan->add_flag("--svg,!--no-svg", toggles.svg, "Write plan.svg");

  auto* run = app.add_subcommand("run", "Plan and fly a full mission");
  common(run);
  bool no_adapt = false, no_dynamic = false;
  run->add_flag("--no-view-adapt", no_adapt, "Disable view-angle adaptation");
  run->add_flag("--no-dynamic", no_dynamic, "Leave dynamic obstacles out");
  run->add_flag("--svg,!--no-svg", toggles.svg, "Write mission.svg");
  run->add_flag("--ply,!--no-ply", toggles.ply, "Write coverage.ply");
  run->add_flag("--csv,!--no-csv", toggles.csv, "Write telemetry.csv");

  auto* batch = app.add_subcommand("batch", "Run every entry of one or more batch manifests");
  std::vector<std::string> manifests;
  fs::path batch_out;
  int jobs = 1;
  batch->add_option("manifests", manifests, "Batch manifest JSON files")->required();
  batch->add_option("--out", batch_out, "Aggregate CSV path (stdout when omitted)");
  batch->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }
  if (plan->count("--seed") || run->count("--seed")) m.seed = seed;
  m.view_adapt = !no_adapt;
  m.dynamic_obstacles = !no_dynamic;

  if (*plan) return cmd_plan(m, toggles.svg);
  if (*run) return cmd_run(m, toggles);
  return cmd_batch(manifests, batch_out, jobs);
}
