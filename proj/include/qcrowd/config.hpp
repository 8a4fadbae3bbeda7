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

// Flat "key = value" experiment files. One pair per line, '#' starts a
// comment, keys are the ExperimentConfig field names with dotted sub-keys for
// the adversary, solver, world and sweep settings. Fractions such as 2/5 are
// accepted wherever a real number is expected.

#pragma once

#include "qcrowd/core.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qcrowd {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& key, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + (key.empty() ? "" : ", key '" + key + "'") +
                           ": " + what),
        line_(line),
        key_(key) {}
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

/// Everything an experiment file can carry.
struct ConfigFile {
  ExperimentConfig config;
  std::vector<Index> sweep_k;  // explicit k grid; empty means doubling from k
  int sweep_steps = 4;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_real(std::string_view text) {
  const std::string s(text);
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    const auto num = parse_real(s.substr(0, slash));
    const auto den = parse_real(s.substr(slash + 1));
    if (!num || !den || *den == 0.0) return std::nullopt;
    return *num / *den;
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<bool> parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  return std::nullopt;
}

struct Entry {
  std::string value;
  int line = 0;
};

}  // namespace detail

inline ConfigFile parse_config_file(std::string_view text) {
  using detail::Entry;
  std::map<std::string, Entry> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "", "expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError(line_no, "", "missing key");
    if (value.empty()) throw ParseError(line_no, key, "missing value");
    if (entries.count(key)) {
      throw ParseError(line_no, key,
                       "duplicate key (first set on line " + std::to_string(entries[key].line) + ")");
    }
    entries.emplace(key, Entry{value, line_no});
  }

  static const char* const kRequired[] = {"n", "m", "alpha", "beta", "epsilon", "delta", "k", "k0"};
  std::string missing;
  for (const char* key : kRequired) {
    if (!entries.count(key)) missing += missing.empty() ? key : std::string(", ") + key;
  }
  if (!missing.empty()) throw ConfigError("missing required keys: " + missing);

  ConfigFile file;
  ExperimentConfig& cfg = file.config;

  auto real = [&](const std::string& key, double& out) {
    auto it = entries.find(key);
    if (it == entries.end()) return false;
    const auto v = detail::parse_real(it->second.value);
    if (!v) throw ParseError(it->second.line, key, "expected a real number, got '" + it->second.value + "'");
    out = *v;
    return true;
  };
  auto integer = [&](const std::string& key, auto& out) {
    auto it = entries.find(key);
    if (it == entries.end()) return false;
    const auto v = detail::parse_int(it->second.value);
    if (!v) throw ParseError(it->second.line, key, "expected an integer, got '" + it->second.value + "'");
    out = static_cast<std::decay_t<decltype(out)>>(*v);
    return true;
  };
  auto u64 = [&](const std::string& key, std::uint64_t& out) {
    auto it = entries.find(key);
    if (it == entries.end()) return false;
    const auto v = detail::parse_u64(it->second.value);
    if (!v) throw ParseError(it->second.line, key, "expected an unsigned integer, got '" + it->second.value + "'");
    out = *v;
    return true;
  };
  auto word = [&](const std::string& key) -> const Entry* {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };

  integer("n", cfg.n);
  integer("m", cfg.m);
  real("alpha", cfg.alpha);
  real("beta", cfg.beta);
  real("epsilon", cfg.epsilon);
  real("delta", cfg.delta);
  integer("k", cfg.k);
  integer("k0", cfg.k0);
  real("L", cfg.L);
  real("epsilon0", cfg.epsilon0);
  u64("seed", cfg.seed);
  if (const Entry* e = word("single_vector")) {
    const auto b = detail::parse_bool(e->value);
    if (!b) throw ParseError(e->line, "single_vector", "expected true or false");
    cfg.single_vector = *b;
  }

  // Adversary and its parameters.
  static const std::map<std::string, std::string> kParamOwner = {
      {"adversary.p_high", "RandomSpam"},
      {"adversary.block_low", "SymmetricBlocks"},
      {"adversary.block_size", "DenseHalfPositive"},
      {"adversary.permutation_seed", "MirroredCopy"}};
  std::string strategy = "RandomSpam";
  if (const Entry* e = word("adversary")) {
    strategy = e->value;
    if (strategy == "RandomSpam") cfg.adversary = RandomSpam{};
    else if (strategy == "AntiCorrelated") cfg.adversary = AntiCorrelated{};
    else if (strategy == "SymmetricBlocks") cfg.adversary = SymmetricBlocks{};
    else if (strategy == "DenseHalfPositive") cfg.adversary = DenseHalfPositive{};
    else if (strategy == "MirroredCopy") cfg.adversary = MirroredCopy{};
    else throw ParseError(e->line, "adversary", "unknown strategy '" + strategy + "'");
  }
  for (const auto& [param, owner] : kParamOwner) {
    if (const Entry* e = word(param); e && owner != strategy) {
      throw ParseError(e->line, param, "parameter does not apply to adversary " + strategy);
    }
  }
  if (auto* s = std::get_if<RandomSpam>(&cfg.adversary)) real("adversary.p_high", s->p_high);
  if (auto* s = std::get_if<SymmetricBlocks>(&cfg.adversary)) real("adversary.block_low", s->block_low);
  if (auto* s = std::get_if<DenseHalfPositive>(&cfg.adversary)) integer("adversary.block_size", s->block_size);
  if (auto* s = std::get_if<MirroredCopy>(&cfg.adversary)) u64("adversary.permutation_seed", s->permutation_seed);

  SolverSettings& sv = cfg.solver;
  integer("solver.max_iters", sv.max_iters);
  real("solver.step0", sv.step0);
  real("solver.step_gain", sv.step_gain);
  integer("solver.dykstra_iters", sv.dykstra_iters);
  real("solver.stop_rel_obj", sv.stop_rel_obj);
  integer("solver.stop_window", sv.stop_window);
  real("solver.rho_scale", sv.rho_scale);

  WorldSettings& w = cfg.world;
  std::string truth = "uniform";
  if (const Entry* e = word("world.truth")) {
    truth = e->value;
    if (truth == "uniform") w.truth = UniformTruth{};
    else if (truth == "bernoulli") w.truth = BernoulliTruth{};
    else if (truth == "two-level") w.truth = TwoLevelTruth{};
    else throw ParseError(e->line, "world.truth", "unknown distribution '" + truth + "'");
  }
  for (const char* key : {"world.truth.q", "world.truth.lo", "world.truth.hi", "world.truth.hi_count"}) {
    const std::string k(key);
    const bool fits = (k == "world.truth.q") ? truth == "bernoulli" : truth == "two-level";
    if (const Entry* e = word(k); e && !fits) {
      throw ParseError(e->line, k, "parameter does not apply to world.truth = " + truth);
    }
  }
  if (auto* b = std::get_if<BernoulliTruth>(&w.truth)) real("world.truth.q", b->q);
  if (auto* t = std::get_if<TwoLevelTruth>(&w.truth)) {
    real("world.truth.lo", t->lo);
    real("world.truth.hi", t->hi);
    integer("world.truth.hi_count", t->hi_count);
  }
  if (const Entry* e = word("world.noise")) {
    if (e->value == "bernoulli") w.noise = NoiseModel::kBernoulli;
    else if (e->value == "noiseless") w.noise = NoiseModel::kNoiseless;
    else throw ParseError(e->line, "world.noise", "expected bernoulli or noiseless");
  }
  real("world.slope_min", w.slope_min);
  real("world.slope_max", w.slope_max);
  real("world.intercept_max", w.intercept_max);

  if (const Entry* e = word("sweep.k")) {
    std::string_view rest(e->value);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = detail::trim(rest.substr(0, comma));
      const auto v = detail::parse_int(item);
      if (!v || *v < 1) throw ParseError(e->line, "sweep.k", "expected a comma-separated list of positive integers");
      file.sweep_k.push_back(static_cast<Index>(*v));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  }
  integer("sweep.steps", file.sweep_steps);

  static const char* const kKnown[] = {
      "n", "m", "alpha", "beta", "epsilon", "delta", "k", "k0", "L", "epsilon0", "seed",
      "single_vector", "adversary", "adversary.p_high", "adversary.block_low",
      "adversary.block_size", "adversary.permutation_seed", "solver.max_iters", "solver.step0",
      "solver.step_gain", "solver.dykstra_iters", "solver.stop_rel_obj", "solver.stop_window",
      "solver.rho_scale", "world.truth", "world.truth.q", "world.truth.lo", "world.truth.hi",
      "world.truth.hi_count", "world.noise", "world.slope_min", "world.slope_max",
      "world.intercept_max", "sweep.k", "sweep.steps"};
  for (const auto& [key, entry] : entries) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw ParseError(entry.line, key, "unknown key");
    }
  }

  validate_config(cfg);
  if (file.sweep_steps < 1) throw ConfigError("sweep.steps must be at least 1");
  for (Index k : file.sweep_k) {
    if (k > cfg.m) throw ConfigError("sweep.k entries must not exceed m");
  }
  return file;
}

/// Parses and validates; throws ParseError or ConfigError.
inline ExperimentConfig parse_config(std::string_view text) { return parse_config_file(text).config; }

inline ConfigFile load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_file(buf.str());
}

}  // namespace qcrowd
