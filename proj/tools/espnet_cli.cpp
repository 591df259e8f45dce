// Copyright 2026 The espnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <spdlog/fmt/fmt.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "espnet/simnet.hpp"

namespace {

using namespace espnet;

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("espnet");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("ESPNET_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

void print_table(const Scenario& scenario, const std::vector<RunReport>& reports) {
  std::cout << fmt::format("scenario {} ({} run{})\n", scenario.name.empty() ? "<unnamed>" : scenario.name,
                           reports.size(), reports.size() == 1 ? "" : "s");
  std::cout << fmt::format("{:>4} {:>20} {:<12} {:<7} {:>8} {:>10} {:>8} {:>12}\n", "run", "seed", "flow", "class",
                           "sent", "delivered", "dropped", "bytes/work");
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    for (const auto& f : r.flows) {
      double per_work = f.work_units == 0 ? 0.0 : static_cast<double>(f.delivered_bytes) / static_cast<double>(f.work_units);
      std::cout << fmt::format("{:>4} {:>20} {:<12} {:<7} {:>8} {:>10} {:>8} {:>12.3f}\n", i, r.seed, f.id,
                               f.traffic_class, f.sent, f.delivered, f.dropped(), per_work);
      for (const auto& [category, n] : f.drops) std::cout << fmt::format("{:>47} {}: {}\n", "", category, n);
    }
    std::cout << fmt::format("     rekeys={} rekey-drops={} integrity={} conserved={} ordering(BYPASS>=NULL>=AES)={}\n",
                             r.rekey_count, r.rekey_attributable_drops, r.payload_integrity ? "ok" : "FAILED",
                             r.conserved ? "yes" : "NO", r.ordering_holds ? "holds" : "violated");
    for (const auto& w : r.warnings) std::cout << "     warning: " << w << "\n";
  }
}

void print_timings(const nlohmann::json& timings) {
  std::cout << "wall-clock timings (mean, 95% CI):\n";
  for (const char* key : {"setup_ms", "renewal_ms", "sa_generation_ms", "table_insert_ms", "table_modify_ms"}) {
    const auto& t = timings.at(key);
    std::cout << fmt::format("  {:<18} n={:<6} mean={:.4f} ms  ci=[{:.4f}, {:.4f}]\n", key, t.at("n").get<std::size_t>(),
                             t.at("mean").get<double>(), t.at("ci95")[0].get<double>(), t.at("ci95")[1].get<double>());
  }
  for (const auto& [cls, rate] : timings.at("switch_packets_per_second").items()) {
    std::cout << fmt::format("  switch packets/s   {:<7} {:.0f}\n", cls, rate.get<double>());
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Controller-managed IPsec simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint32_t> runs;
  std::optional<std::uint64_t> seed;
  std::string report_path;
  std::string trace_path;
  bool timings = false;
  unsigned jobs = 1;

  auto* run = app.add_subcommand("run", "Run a scenario and report per-flow results");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--runs", runs, "Number of runs (seeds seed, seed+1, ...)")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Base seed (overrides the scenario)");
  run->add_option("--report", report_path, "Write the JSON report here");
  run->add_flag("--timings", timings, "Measure wall-clock timings (not deterministic)");
  run->add_option("--jobs", jobs, "Runs to execute in parallel")
      ->check(CLI::Range(1u, std::max(1u, std::thread::hardware_concurrency())));

  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
  validate_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);

  auto* trace = app.add_subcommand("trace", "Dump every simulation event as JSON lines");
  trace->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  trace->add_option("--out", trace_path, "Output trace.jsonl")->required();
  trace->add_option("--seed", seed, "Seed (overrides the scenario)");

  CLI11_PARSE(app, argc, argv);

  Scenario scenario;
  try {
    scenario = load_scenario(scenario_path);
  } catch (const Error& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*validate_cmd) {
      std::cout << fmt::format("{}: ok ({} switches, {} hosts, {} links, {} profiles, {} flows)\n", scenario_path,
                               scenario.switches.size(), scenario.hosts.size(), scenario.links.size(),
                               scenario.profiles.size(), scenario.traffic.size());
      return 0;
    }
    std::uint64_t base_seed = seed.value_or(scenario.seed);
    if (*trace) {
      auto net = build_simnet(scenario, base_seed, SimOptions{true, false});
      net->run();
      std::ofstream out(trace_path);
      if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + trace_path);
      for (const auto& e : net->trace()) out << to_json(e).dump() << "\n";
      std::cout << fmt::format("wrote {} events to {}\n", net->trace().size(), trace_path);
      return 0;
    }
    auto reports = run_many(scenario, base_seed, runs.value_or(scenario.runs), jobs, SimOptions{false, timings});
    auto report = combined_report(scenario, base_seed, reports, timings);
    print_table(scenario, reports);
    if (timings) print_timings(report.at("timings"));
    if (!report_path.empty()) {
      std::ofstream out(report_path);
      if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + report_path);
      out << report.dump(2) << "\n";
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "run failed (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 2;
  }
}
