#pragma once
// Receding-horizon planner: draws K random normalized action sequences,
// decodes them through the rate-and-bound safety layer, scores each by an
// open-loop rollout of the learned dynamics under the shaped reward, and
// returns the first action of the winner. Feasible (zero predicted
// violations) beats infeasible; ties break toward fewer violations, then
// higher reward, then lower candidate index — so parallel or batched scoring
// can never change the selection.

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "hvacmbrl/action.hpp"
#include "hvacmbrl/dynamics.hpp"
#include "hvacmbrl/reward.hpp"
#include "hvacmbrl/rng.hpp"

namespace hvacmbrl {

struct PlanConfig {
  int horizon = 5;   // H
  int samples = 8192;  // K
  // The batched scorer shares the window's history prefix across candidates;
  // it agrees with per-candidate scoring to rounding. Tests that need exact
  // score equality disable it.
  bool batched_rollout = true;

  void validate() const;
};

// Sliding context the planner rolls forward from: the last W observations
// (rows oldest to newest, ending at o(t)) and the W-1 actions executed
// between them.
struct HistoryWindow {
  Eigen::MatrixXd obs;   // W x obs_dim
  Eigen::MatrixXd acts;  // (W-1) x act_dim
};

struct SequenceScore {
  double total_reward = 0.0;
  int violations = 0;
};

// True when a scores strictly better than b: fewer predicted violations,
// then higher total reward. Equal scores keep the earlier candidate.
bool score_better(const SequenceScore& a, const SequenceScore& b);

// Decode z_seq (H x 4 rows in [-1,1]) into a chained raw-action sequence,
// roll the model open-loop, and sum discounted rewards plus per-zone
// violation counts over the predicted trajectory.
SequenceScore evaluate_sequence(const DynamicsModel& model, const HistoryWindow& hist,
                                const Eigen::MatrixXd& z_seq, const RawAction& a_prev,
                                const RewardParams& rp, const SafeActionSpace& space);

struct PlanDiag {
  double best_reward = 0.0;
  double worst_reward = 0.0;
  double mean_reward = 0.0;
  int feasible_count = 0;
  int selected_index = 0;
  int selected_violations = 0;
  Eigen::Vector4d selected_z = Eigen::Vector4d::Zero();
  double wall_seconds = 0.0;
};

struct PlanResult {
  RawAction action;
  PlanDiag diag;
};

// Score an explicit candidate set (each H x 4) with per-candidate rollouts
// and apply the selection rule. Seam for grid-enumeration oracles.
PlanResult plan_with_candidates(const DynamicsModel& model, const HistoryWindow& hist,
                                const RawAction& a_prev,
                                const std::vector<Eigen::MatrixXd>& candidates,
                                const RewardParams& rp, const SafeActionSpace& space);

// Selection rule over externally supplied scores; returns the winning index.
// Seam for surrogate scorers.
int select_candidate(const std::vector<SequenceScore>& scores);

// Draw K sequences candidate by candidate (row h, then component) so a
// longer draw extends a shorter one with the same generator state.
std::vector<Eigen::MatrixXd> draw_candidates(Rng& rng, int samples, int horizon,
                                             int act_dim);

PlanResult plan(const DynamicsModel& model, const HistoryWindow& hist,
                const RawAction& a_prev, const PlanConfig& cfg, const RewardParams& rp,
                const SafeActionSpace& space, Rng& rng);

}  // namespace hvacmbrl
