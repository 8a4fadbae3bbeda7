// Copyright 2026 The qcrowd Authors.
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

#include "qcrowd/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"qcrowd: crowdsourced quantile recovery under adversarial raters"};
  qcrowd::RunSpec spec;
  std::string mode = "run";
  double rho_scale = 0.0;

  app.add_option("--config", spec.config_path, "experiment file (key = value)")->required();
  app.add_option("--out", spec.out_dir, "output directory")->capture_default_str();
  app.add_option("--trials", spec.trials, "independent trials (draws for round-demo)")->capture_default_str();
  app.add_option("--jobs", spec.jobs, "worker threads")->capture_default_str();
  app.add_option("--mode", mode, "run | sweep | check | round-demo")
      ->check(CLI::IsMember({"run", "sweep", "check", "round-demo"}))
      ->capture_default_str();
  app.add_flag("--allow-nonconverged", spec.allow_nonconverged, "exit 0 even if a solve hit max_iters");
  auto* rho_opt = app.add_option("--rho-scale", rho_scale, "multiply the nuclear-norm radius");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qcrowd::kExitConfig;
  }

  static const std::map<std::string, qcrowd::RunMode> kModes = {
      {"run", qcrowd::RunMode::kRun},
      {"sweep", qcrowd::RunMode::kSweep},
      {"check", qcrowd::RunMode::kCheck},
      {"round-demo", qcrowd::RunMode::kRoundDemo},
  };
  spec.mode = kModes.at(mode);
  if (*rho_opt) spec.rho_scale = rho_scale;

  if (const char* env = std::getenv("QCROWD_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long seed = std::strtoull(env, &end, 10);
    if (end == nullptr || *end != '\0') {
      std::cerr << "config error: QCROWD_SEED must be a non-negative integer\n";
      return qcrowd::kExitConfig;
    }
    spec.seed_override = seed;
  }

  return qcrowd::run_experiment(spec);
}
