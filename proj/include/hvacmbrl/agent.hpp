#pragma once
// Experiment orchestration: initial exploratory collection, alternating
// train/control rounds (planner- or policy-driven), baseline controllers,
// daily metrics, and round-boundary checkpoints that resume byte-identically.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hvacmbrl/dynamics.hpp"
#include "hvacmbrl/environment.hpp"
#include "hvacmbrl/experience.hpp"
#include "hvacmbrl/planner.hpp"
#include "hvacmbrl/policy.hpp"
#include "hvacmbrl/rng.hpp"

namespace hvacmbrl {

enum class RunMode { mpc, imitation, baseline_fixed, baseline_default };

std::string to_string(RunMode mode);
RunMode parse_run_mode(const std::string& name);

struct LoopConfig {
  int initial_collect_steps = 6240;  // 65 days of 15-minute intervals
  int on_policy_steps = 672;         // T: one round, 7 days
  int epochs = 30;                   // M: SGD epochs per round
  int total_rounds = 5;
  int max_control_steps = 2880;      // cap across rounds (30 days); 0 = uncapped
  double explore_half_range = 0.3;   // z-noise of the exploratory walk
  size_t buffer_capacity = 11520;

  void validate() const;
};

// ---------- episode log ----------

extern const char kEpisodeLogHeader[];  // column names, no newline

struct LogRow {
  int64_t step = 0;
  double t_out = 0, t_west = 0, t_east = 0;
  double p_ite = 0, p_hvac = 0;
  double ts_west = 0, ts_east = 0, f_west = 0, f_east = 0;
  double reward = 0;
  bool violation_west = false, violation_east = false;
};

std::string format_log_row(const LogRow& row);
LogRow parse_log_row(const std::string& line);
// Strict header check, then one LogRow per line.
std::vector<LogRow> parse_episode_log(const std::string& text);

// ---------- daily metrics ----------

struct DailySeries {
  std::vector<double> values;
  int64_t partial_steps = 0;  // trailing rows of an incomplete day, excluded
};

// Fraction of each whole day's 96 steps where either zone temperature is
// outside [t_min, t_max]; a step with both zones violating counts once.
DailySeries daily_tvr(const std::vector<LogRow>& rows, const RewardParams& params);
// Mean over each whole day of p_ite + p_hvac.
DailySeries daily_avg_power(const std::vector<LogRow>& rows);

struct MetricsReport {
  std::vector<double> daily_power;
  std::vector<double> daily_tvr;
  std::vector<double> round_deviation;  // 96-step rollout deviation per round (nan if unavailable)
  double cumulative_reward = 0.0;
  std::optional<double> label_agreement_mse;  // imitation mode only
  int64_t control_start_row = 0;
  int64_t total_env_steps = 0;
  int64_t partial_day_steps = 0;

  std::string to_csv() const;
};

struct DayMetrics {
  double power = 0.0;
  double tvr = 0.0;
};
// Reads the per-day block back out of MetricsReport::to_csv output.
std::vector<DayMetrics> parse_metrics_days(const std::string& text);

// ---------- collection ----------

// Exploratory default controller: a bounded random walk in z-space around
// the fixed-setpoint start. Appends transitions (and optional log rows).
// Fails before executing anything if the traces cannot cover `steps`.
void collect_initial(TwoZoneEnv& env, int steps, const SafeActionSpace& space,
                     double explore_half_range, Rng& rng, ExperienceBuffer& buffer,
                     std::vector<std::string>* log_rows);

// ---------- full runs ----------

struct RunInputs {
  PlantParams plant;
  RewardParams reward;
  EnvConfig env;
  Trace weather{TraceKind::weather, 1.0, {}, {}};
  Trace ite{TraceKind::ite_load, 1.0, {}, {}};
  SafeActionSpace space;
  ModelConfig model;
  PlanConfig plan;
  LoopConfig loop;
  RunMode mode = RunMode::mpc;
  uint64_t seed = 1;
  uint64_t config_fingerprint = 0;
};

struct RunHooks {
  // Replaces the planner when choosing the executed action (oracle seam).
  std::function<RawAction(const HistoryWindow& hist, const RawAction& a_prev, Rng& rng,
                          PlanDiag* diag)>
      act_override;
};

class ExperimentRunner {
 public:
  explicit ExperimentRunner(RunInputs inputs);
  // Rebuilds a runner mid-run from a round-boundary checkpoint. The inputs
  // must carry the same config fingerprint the checkpoint was written with.
  ExperimentRunner(RunInputs inputs, const std::string& checkpoint);

  RunHooks hooks;

  // Collects (if not yet collected), then executes rounds until
  // total_rounds / max_control_steps, or stops early after `stop_after_round`
  // completed rounds (0 = stop after collection).
  void run(std::optional<int> stop_after_round = std::nullopt);

  MetricsReport report() const;
  std::string episode_csv() const;
  std::string planner_csv() const;
  std::string checkpoint() const;

  const ExperienceBuffer& buffer() const { return buffer_; }
  const DynamicsModel& model() const { return model_; }
  const PolicyModel& policy() const { return policy_; }
  const ImitationBuffer& imitation_buffer() const { return imitation_; }
  const TwoZoneEnv& env() const { return env_; }
  int rounds_done() const { return rounds_done_; }
  int64_t control_steps_done() const { return control_steps_done_; }

 private:
  HistoryWindow history_window() const;
  StepResult execute_action(const RawAction& action, const PlanDiag* diag);
  RawAction choose_mpc_action(PlanDiag* diag);
  void run_round();
  void record_round_deviation();

  RunInputs in_;
  TwoZoneEnv env_;
  ExperienceBuffer buffer_;
  DynamicsModel model_;
  PolicyModel policy_;
  ImitationBuffer imitation_;
  Rng rng_collect_, rng_planner_, rng_train_dyn_, rng_train_pol_;
  std::vector<std::string> log_rows_;
  std::vector<std::string> planner_rows_;
  std::vector<double> round_deviation_;
  double label_sse_ = 0.0;
  int64_t label_count_ = 0;
  bool collected_ = false;
  int rounds_done_ = 0;
  int64_t control_steps_done_ = 0;
};

}  // namespace hvacmbrl
