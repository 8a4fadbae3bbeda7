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

#pragma once

#include "qcrowd/analysis.hpp"
#include "qcrowd/config.hpp"
#include "qcrowd/report.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace qcrowd {

enum class RunMode { kRun, kSweep, kCheck, kRoundDemo };

struct RunSpec {
  RunMode mode = RunMode::kRun;
  std::string config_path;
  std::string out_dir = ".";
  int trials = 1;
  int jobs = 1;
  bool allow_nonconverged = false;
  std::optional<double> rho_scale;
  std::optional<std::uint64_t> seed_override;  // QCROWD_SEED
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitCheckFailed = 3;

/// Calls fn(i) for i in [0, count) on up to `jobs` threads.
inline void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Trials 0..count-1 under cfg, ordered by trial index regardless of `jobs`.
inline std::vector<TrialResult> run_trials(const ValidatedConfig& cfg, int count, int jobs) {
  std::vector<TrialResult> results(static_cast<std::size_t>(count));
  parallel_for(count, jobs, [&](int t) {
    TrialResult r = run_trial(cfg, trial_seed(cfg.seed(), static_cast<std::uint64_t>(t)));
    r.index = static_cast<std::uint64_t>(t);
    results[static_cast<std::size_t>(t)] = std::move(r);
  });
  return results;
}

/// k values of a sweep, ascending and unique: sweep.k when given, otherwise
/// k0 * 2^i for i < sweep.steps, capped at m.
inline std::vector<Index> sweep_grid(const ConfigFile& file) {
  std::set<Index> grid(file.sweep_k.begin(), file.sweep_k.end());
  if (grid.empty()) {
    Index k = file.config.k0;
    for (int i = 0; i < file.sweep_steps; ++i, k *= 2) grid.insert(std::min(k, file.config.m));
  }
  return {grid.begin(), grid.end()};
}

struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Invariants verified on every trial of a check run, plus a rounding
/// marginal test on a fixed T0.
inline std::vector<CheckOutcome> check_invariants(const ValidatedConfig& cfg,
                                                  const std::vector<TrialResult>& trials) {
  std::vector<CheckOutcome> out;
  int infeasible = 0, oversize = 0, transfer = 0, deviation = 0;
  for (const auto& t : trials) {
    infeasible += t.feasible ? 0 : 1;
    oversize += t.cardinality_ok ? 0 : 1;
    transfer += t.gaps.g_r <= cfg.L() * t.gaps.g_a + cfg.epsilon0() + 1e-9 ? 0 : 1;
    deviation += t.quality_gap >= -1.0 && t.quality_gap <= 1.0 ? 0 : 1;
  }
  auto add = [&](std::string name, int bad) {
    out.push_back({std::move(name), bad == 0,
                   std::to_string(bad) + " of " + std::to_string(trials.size()) + " trials violate"});
  };
  add("feasibility", infeasible);
  add("cardinality", oversize);
  add("monotonicity_transfer", transfer);
  add("gap_range", deviation);

  // Marginals of systematic rounding. The band is 5 sigma per coordinate so
  // that a correct implementation fails with negligible probability across
  // all m coordinates.
  auto rng = derive_rng(cfg.seed(), "check-rounding");
  Vector t0(cfg.m());
  for (Index j = 0; j < cfg.m(); ++j) t0[j] = rng.uniform();
  t0 *= std::min(1.0, static_cast<double>(cfg.beta_m()) / t0.sum());
  constexpr int kDraws = 20000;
  Vector freq = Vector::Zero(cfg.m());
  int too_many = 0;
  const double limit = std::ceil(t0.sum());
  for (int d = 0; d < kDraws; ++d) {
    const SelectionSet s = randomized_round(t0, rng);
    freq += s.t;
    too_many += static_cast<double>(s.size()) > limit ? 1 : 0;
  }
  freq /= kDraws;
  int outside = 0;
  for (Index j = 0; j < cfg.m(); ++j) {
    const double sigma = std::sqrt(t0[j] * (1.0 - t0[j]) / kDraws);
    outside += std::abs(freq[j] - t0[j]) > 5.0 * sigma + 1e-12 ? 1 : 0;
  }
  out.push_back({"rounding_marginals", outside == 0,
                 std::to_string(outside) + " of " + std::to_string(cfg.m()) + " coordinates outside 5 sigma"});
  out.push_back({"rounding_cardinality", too_many == 0,
                 std::to_string(too_many) + " of " + std::to_string(kDraws) + " draws too large"});
  return out;
}

namespace detail {

inline bool write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body,
                       std::ostream& err) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    err << "error: cannot write " << path.string() << '\n';
    return false;
  }
  body(out);
  return static_cast<bool>(out);
}

inline int nonconverged_count(const std::vector<TrialResult>& trials) {
  int c = 0;
  for (const auto& t : trials) c += t.solver.converged() ? 0 : 1;
  return c;
}

}  // namespace detail

/// Executes one CLI invocation. Returns the process exit code.
inline int run_experiment(const RunSpec& spec, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  ConfigFile file;
  try {
    file = load_config_file(spec.config_path);
    if (spec.seed_override) file.config.seed = *spec.seed_override;
    if (spec.rho_scale) file.config.solver.rho_scale = *spec.rho_scale;
    validate_config(file.config);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (spec.trials < 1) {
    err << "config error: --trials must be at least 1\n";
    return kExitConfig;
  }

  const std::filesystem::path out_dir(spec.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    err << "error: cannot create " << out_dir.string() << ": " << ec.message() << '\n';
    return kExitConfig;
  }

  const ValidatedConfig cfg = validate_config(file.config);

  if (spec.mode == RunMode::kRoundDemo) {
    const TrialArtifacts trial = simulate_trial(cfg, trial_seed(cfg.seed(), 0));
    const Vector& t0 = trial.recovery.t0;
    const WorldModel& world = trial.world;
    auto rng = derive_rng(cfg.seed(), "round-demo");
    Vector freq = Vector::Zero(cfg.m());
    for (int d = 0; d < spec.trials; ++d) freq += randomized_round(t0, rng).t;
    freq /= static_cast<double>(spec.trials);
    const bool ok = detail::write_file(out_dir / "round_demo.csv", [&](std::ostream& out) {
      out << "item,t0,frequency,t_star,r_star\n";
      for (Index j = 0; j < cfg.m(); ++j) {
        out << j << ',' << fmt_real(t0[j]) << ',' << fmt_real(freq[j]) << ','
            << fmt_real(world.ground_truth.t_star[j]) << ',' << fmt_real(world.ground_truth.r_star[j]) << '\n';
      }
    }, err);
    if (!ok) return kExitConfig;
    log << "round-demo: " << spec.trials << " draws, sum(T0) = " << fmt_real(t0.sum())
        << ", trial 0 quality gap "
        << fmt_real(quality_gap(trial.recovery.selection, world.ground_truth, cfg.beta_m())) << '\n';
    return kExitOk;
  }

  std::vector<TrialResult> all;
  std::vector<SweepRow> rows;
  if (spec.mode == RunMode::kSweep) {
    for (Index k : sweep_grid(file)) {
      ExperimentConfig point = file.config;
      point.k = k;
      const ValidatedConfig vp = validate_config(point);
      std::vector<TrialResult> results = run_trials(vp, spec.trials, spec.jobs);
      SweepRow row = summarize(results);
      row.k0 = vp.k0();
      rows.push_back(row);
      all.insert(all.end(), results.begin(), results.end());
      log << "k=" << k << " median gap " << fmt_real(row.gap.median) << '\n';
    }
  } else {
    all = run_trials(cfg, spec.trials, spec.jobs);
    SweepRow row = summarize(all);
    row.k0 = cfg.k0();
    rows.push_back(row);
  }

  if (!detail::write_file(out_dir / "results.csv", [&](std::ostream& o) { write_results_csv(o, all); }, err) ||
      !detail::write_file(out_dir / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, rows); }, err)) {
    return kExitConfig;
  }

  int code = kExitOk;
  if (spec.mode == RunMode::kCheck) {
    const auto outcomes = check_invariants(cfg, all);
    for (const auto& c : outcomes) {
      log << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
      if (!c.passed) code = kExitCheckFailed;
    }
  }
  const int stuck = detail::nonconverged_count(all);
  if (stuck > 0) {
    err << stuck << " trial(s) did not converge" << (spec.allow_nonconverged ? " (allowed)" : "") << '\n';
    if (!spec.allow_nonconverged && code == kExitOk) code = kExitNotConverged;
  }
  return code;
}

}  // namespace qcrowd
