// Copyright 2026 the covsim authors
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

// covsim command line front end.
//
// Subcommands:
//   covsim run <scenario.json> --seed N --out trace.jsonl
//       [--metrics metrics.csv] [--svg-at T --svg-out view.svg]
//       [--dump-clouds DIR]
//   covsim validate <scenario.json>
//
// Exit codes: 0 on success, 2 on scenario validation failure, 3 on any
// runtime failure after validation.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "covsim/covsim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

int run_command(const std::string& scenario_path, std::uint64_t seed,
                const std::string& out_path, const std::string& metrics_path,
                std::optional<double> svg_at, const std::string& svg_path,
                const std::string& cloud_dir) {
  covsim::scenario::Scenario sc;
  try {
    sc = covsim::scenario::load_scenario_file(scenario_path);
  } catch (const covsim::scenario::ScenarioError& e) {
    std::cerr << "covsim: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    covsim::harness::RunOptions opt;
    if (!cloud_dir.empty()) {
      opt.dump_cloud_dir = cloud_dir;
    }
    covsim::log::info("run: scenario " + scenario_path + ", seed " +
                      std::to_string(seed));
    const std::vector<covsim::harness::json> records =
        covsim::harness::run(sc, seed, opt);

    {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) {
        throw std::runtime_error("cannot open trace output: " + out_path);
      }
      covsim::harness::write_trace(records, out);
    }
    if (!metrics_path.empty()) {
      std::ofstream out(metrics_path, std::ios::binary);
      if (!out) {
        throw std::runtime_error("cannot open metrics output: " +
                                 metrics_path);
      }
      out << covsim::harness::metrics_csv(records);
    }
    if (svg_at.has_value()) {
      covsim::harness::SvgOptions svg_opt;
      svg_opt.host_id = sc.host_id;
      svg_opt.fov_range = sc.lidar.max_range;
      const std::string svg = covsim::harness::render_svg(records, *svg_at,
                                                          svg_opt);
      std::ofstream out(svg_path, std::ios::binary);
      if (!out) {
        throw std::runtime_error("cannot open svg output: " + svg_path);
      }
      out << svg;
    }
    covsim::log::info("run: wrote " + std::to_string(records.size()) +
                      " trace records to " + out_path);
  } catch (const std::exception& e) {
    std::cerr << "covsim: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int validate_command(const std::string& scenario_path) {
  try {
    covsim::scenario::load_scenario_file(scenario_path);
  } catch (const covsim::scenario::ScenarioError& e) {
    std::cerr << "covsim: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "covsim: " << e.what() << "\n";
    return kExitRuntime;
  }
  std::cout << scenario_path << ": ok\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covsim: collaborative perception co-simulation"};
  app.require_subcommand(1);

  std::string run_scenario;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string metrics_path;
  double svg_at = 0.0;
  std::string svg_path;
  std::string cloud_dir;

  CLI::App* run = app.add_subcommand("run", "simulate a scenario");
  run->add_option("scenario", run_scenario, "scenario JSON file")
      ->required();
  run->add_option("--seed", seed, "simulation seed")->required();
  run->add_option("--out", out_path, "trace output (JSON lines)")->required();
  run->add_option("--metrics", metrics_path, "metrics CSV output");
  CLI::Option* svg_at_opt =
      run->add_option("--svg-at", svg_at, "render an SVG snapshot at time T");
  CLI::Option* svg_out_opt =
      run->add_option("--svg-out", svg_path, "SVG output file");
  svg_at_opt->needs(svg_out_opt);
  svg_out_opt->needs(svg_at_opt);
  run->add_option("--dump-clouds", cloud_dir,
                  "directory for per-host point cloud dumps");

  std::string validate_scenario;
  CLI::App* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("scenario", validate_scenario, "scenario JSON file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (run->parsed()) {
    std::optional<double> svg_time;
    if (svg_at_opt->count() > 0) {
      svg_time = svg_at;
    }
    return run_command(run_scenario, seed, out_path, metrics_path, svg_time,
                       svg_path, cloud_dir);
  }
  return validate_command(validate_scenario);
}
