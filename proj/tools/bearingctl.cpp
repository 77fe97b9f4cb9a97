// Command-line driver: analyze, predict, run and generate scenarios.

#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bearing/bearing.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<std::string> method;
  std::optional<double> max_time;
};

bearing::Scenario load_with_overrides(const std::string& path, const Overrides& ov) {
  bearing::Scenario s = bearing::load_scenario(path);
  if (ov.seed) s.initial.seed = *ov.seed;
  if (ov.dt) s.integrator.dt = *ov.dt;
  if (ov.method) s.integrator.method = bearing::parse_method(*ov.method);
  if (ov.max_time) s.integrator.max_time = *ov.max_time;
  bearing::validate_scenario(s);
  return s;
}

fs::path output_dir(const bearing::Scenario& s, const std::string& out, bool batch) {
  fs::path base = out.empty() ? fs::path(s.output.empty() ? "out" : s.output) : fs::path(out);
  return batch ? base / s.name : base;
}

void print_prediction(const bearing::RunReport& rep, int dim) {
  if (!rep.predicted) return;
  std::cout << "predicted equilibrium:\n";
  const auto& p = *rep.predicted;
  for (bearing::Index i = 0; i < p.size() / dim; ++i) {
    std::cout << "  agent " << i << ":";
    for (int k = 0; k < dim; ++k) std::cout << " " << p(i * dim + k);
    std::cout << "\n";
  }
}

int run_one(const std::string& path, const Overrides& ov, const std::string& out, bool batch, std::ostream& log) {
  try {
    const bearing::Scenario s = load_with_overrides(path, ov);
    const bearing::RunOutput run = bearing::run_scenario(s);
    const fs::path dir = output_dir(s, out, batch);
    bearing::write_run_outputs(run, s.dim, dir);
    log << bearing::report_text(run.report) << "outputs      " << dir.string() << "\n";
    return run.report.passed() ? 0 : 1;
  } catch (const bearing::Error& e) {
    log << path << ": " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bearing rigidity analysis, formation control and network localization"};
  app.require_subcommand(1);

  std::vector<std::string> scenarios;
  std::string out;
  Overrides ov;
  int jobs = 1;

  auto add_common = [&](CLI::App* sub, bool many) {
    if (many) {
      sub->add_option("--scenario", scenarios, "Scenario file (repeatable)")->required()->check(CLI::ExistingFile);
    } else {
      sub->add_option("--scenario", scenarios, "Scenario file")->required()->expected(1)->check(CLI::ExistingFile);
    }
    sub->add_option("--seed", ov.seed, "Override the initial-state seed");
    sub->add_option("--dt", ov.dt, "Override the integration step");
    sub->add_option("--method", ov.method, "Integration method")->check(CLI::IsMember({"euler", "rk4"}));
    sub->add_option("--max-time", ov.max_time, "Override the simulated horizon");
  };

  auto* analyze = app.add_subcommand("analyze", "Rigidity report only");
  add_common(analyze, false);
  auto* predict = app.add_subcommand("predict", "Closed-form equilibria only");
  add_common(predict, false);
  auto* run = app.add_subcommand("run", "Simulate and check the scenario's assertions");
  add_common(run, true);
  run->add_option("--out", out, "Output directory (trajectory.csv, report.json)");
  run->add_option("--jobs", jobs, "Scenarios to run in parallel")->check(CLI::PositiveNumber);

  auto* generate = app.add_subcommand("generate", "Write a built-in scenario");
  std::string kind = "cube";
  bearing::LocalizationParams lp;
  std::uint64_t gen_seed = 1;
  generate->add_option("--kind", kind, "cube | cube-leaders | localization")
      ->check(CLI::IsMember({"cube", "cube-leaders", "localization"}));
  generate->add_option("--seed", gen_seed, "Random seed");
  generate->add_option("--agents", lp.agents, "Localization: number of agents");
  generate->add_option("--dim", lp.dim, "Localization: dimension");
  generate->add_option("--edges", lp.target_edges, "Localization: target edge count");
  generate->add_option("--anchors", lp.anchors, "Localization: number of anchors");
  generate->add_option("--out", out, "Scenario file to write (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      bearing::Scenario s;
      if (kind == "localization") {
        lp.seed = gen_seed;
        s = bearing::generate_localization_scenario(lp);
      } else {
        s = bearing::generate_cube_scenario(kind == "cube" ? 0 : 2, gen_seed);
      }
      if (out.empty()) {
        std::cout << bearing::to_yaml(s);
      } else {
        bearing::save_scenario(s, out);
        std::cerr << "wrote " << out << " (n=" << s.agents << ", m=" << s.edges.size() << ")\n";
      }
      return 0;
    }
    if (*analyze || *predict) {
      const bearing::Scenario s = load_with_overrides(scenarios.front(), ov);
      const bearing::RunReport rep = *analyze ? bearing::analyze_scenario(s) : bearing::predict_scenario(s);
      std::cout << bearing::report_text(rep);
      if (*predict) print_prediction(rep, s.dim);
      return rep.passed() ? 0 : 1;
    }

    const bool batch = scenarios.size() > 1;
    int status = 0;
    if (jobs <= 1 || !batch) {
      for (const auto& path : scenarios) status = std::max(status, run_one(path, ov, out, batch, std::cout));
      return status;
    }
    // Batch mode: independent scenarios, isolated output directories.
    std::vector<std::future<std::pair<int, std::string>>> pending;
    std::size_t next = 0;
    while (next < scenarios.size() || !pending.empty()) {
      while (next < scenarios.size() && static_cast<int>(pending.size()) < jobs) {
        const std::string path = scenarios[next++];
        pending.push_back(std::async(std::launch::async, [&, path] {
          std::ostringstream log;
          const int rc = run_one(path, ov, out, true, log);
          return std::make_pair(rc, log.str());
        }));
      }
      auto done = pending.front().get();
      pending.erase(pending.begin());
      std::cout << done.second;
      status = std::max(status, done.first);
    }
    return status;
  } catch (const bearing::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}
