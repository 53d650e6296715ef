#pragma once
// Experiment configuration: plain-text sectioned key=value files covering the
// plant, traces, model, planner, reward, safety bounds, and loop schedule.
// Every key has a default equal to the headline experiment settings, so an
// empty file is a valid configuration. Dumping is canonical (fixed order,
// shortest round-trip numbers) and re-parsing a dump reproduces the config.

#include <cstdint>
#include <string>
#include <vector>

#include "hvacmbrl/agent.hpp"

namespace hvacmbrl {

struct EvalDynOptions {
  std::vector<int> windows{5, 10, 15, 20};
  int horizon = 96;    // rollout steps per evaluation start
  int traces = 4;      // weather variants (table rows)
  int eval_days = 20;  // data collected per variant
  int starts = 20;     // evaluation start points per cell
};

struct ExperimentConfig {
  ExperimentConfig();  // trace lengths default to auto-sizing (days = 0)

  uint64_t seed = 1;
  std::string out_dir = "out";
  RunMode mode = RunMode::mpc;
  int simulate_days = 1;

  PlantParams plant;
  EnvConfig env;
  WeatherGenParams weather;  // weather.days == 0 sizes the trace to the run
  IteGenParams ite;          // ite.day_count == 0 likewise
  std::string weather_path;  // non-empty: load this CSV instead of generating
  std::string load_path;

  ModelConfig model;
  PlanConfig plan;
  RewardParams reward;
  SafeActionSpace space;
  LoopConfig loop;
  EvalDynOptions eval;

  void validate() const;
};

// Parses sectioned key=value text. Unknown sections or keys, duplicate keys,
// and malformed values are errors naming the line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical dump: every key, fixed order, shortest round-trip numbers.
std::string dump_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical dump; stamped into checkpoints.
uint64_t config_fingerprint(const ExperimentConfig& cfg);

// Control steps the configured loop will execute after collection.
int64_t control_step_budget(const LoopConfig& loop);

// Trace construction honoring path overrides and auto-sizing (days counts
// what the caller needs covered; generation adds one pad day).
Trace build_weather_trace(const ExperimentConfig& cfg, double required_days);
Trace build_ite_trace(const ExperimentConfig& cfg, double required_days);

// Everything ExperimentRunner needs, with traces sized for the full run.
RunInputs build_run_inputs(const ExperimentConfig& cfg);

}  // namespace hvacmbrl
