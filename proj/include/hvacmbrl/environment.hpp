#pragma once
// Two-zone plant environment: two independent single-zone instances sharing
// weather and the ITE load (split evenly), advanced one 15-minute control
// interval per step with the action held constant and an internal
// proportional loop tracking each zone's setpoint.

#include <cstdint>
#include <string>

#include "hvacmbrl/action.hpp"
#include "hvacmbrl/plant.hpp"
#include "hvacmbrl/reward.hpp"
#include "hvacmbrl/trace.hpp"

namespace hvacmbrl {

struct EnvConfig {
  double control_dt_minutes = 15.0;
  PlantState init_west{19.7, 23.5, 0.008};  // {T_2, T_3, W_3}
  PlantState init_east{19.7, 23.5, 0.008};
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool violation_west = false;
  bool violation_east = false;
  bool done = false;  // set when the traces cannot cover another interval
};

class TwoZoneEnv {
 public:
  TwoZoneEnv(PlantParams plant, RewardParams rew, EnvConfig cfg,
             Trace weather, Trace ite_load);

  // Observation the controller sees before its next action. At t=0 this is
  // the instantaneous snapshot of the initial state; afterwards the latest
  // interval average.
  const Observation& current_obs() const { return current_obs_; }
  const RawAction& last_action() const { return last_action_; }

  bool can_step() const;
  // Whole control intervals the traces can still cover from the current time.
  int64_t remaining_steps() const;
  // Advances one control interval. If the traces are exhausted, returns
  // done=true without advancing (end-of-episode signal, not a crash).
  StepResult step(const RawAction& action);

  int64_t step_count() const { return step_count_; }
  double minutes() const { return minutes_; }
  const PlantParams& plant() const { return plant_; }
  const RewardParams& reward_params() const { return reward_; }
  const EnvConfig& config() const { return cfg_; }

  // Local-loop mapping from one zone's action components to plant flows.
  ControlInput local_loop(double T3_c, double setpoint_c, double fan_scale) const;

  // Snapshot/restore for checkpointing; excludes the traces (reloaded from
  // config) and includes everything the trajectory depends on.
  std::string serialize_state() const;
  void restore_state(const std::string& blob);

 private:
  Observation instantaneous_obs(const RawAction& action) const;

  PlantParams plant_;
  RewardParams reward_;
  EnvConfig cfg_;
  Trace weather_;
  Trace ite_;
  PlantState west_, east_;
  Observation current_obs_;
  RawAction last_action_;
  int64_t step_count_ = 0;
  double minutes_ = 0.0;
};

}  // namespace hvacmbrl
