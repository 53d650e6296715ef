#pragma once
// FIFO experience store over executed (observation, action) steps, with
// normalization statistics and sliding-window extraction for model training.

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace hvacmbrl {

struct TrajectoryStep {
  Eigen::VectorXd obs;
  Eigen::VectorXd act;
  int64_t episode_id = 0;
  int64_t step_index = 0;
};

class ExperienceBuffer {
 public:
  explicit ExperienceBuffer(size_t capacity = 11520) : capacity_(capacity) {}

  // Appends one step; evicts exactly the oldest when over capacity.
  void append(TrajectoryStep step);
  size_t size() const { return steps_.size(); }
  size_t capacity() const { return capacity_; }
  const TrajectoryStep& at(size_t i) const { return steps_[i]; }
  const std::deque<TrajectoryStep>& steps() const { return steps_; }

  std::string serialize() const;
  static ExperienceBuffer deserialize(const std::string& blob);

 private:
  size_t capacity_;
  std::deque<TrajectoryStep> steps_;
};

// Per-dimension population mean/std over the concatenated (obs, act) dims;
// std floored at epsilon so constant channels normalize to zero safely.
// delta_std is the std of consecutive-step observation changes (same episode,
// adjacent step index): one-step deltas are far smaller than the observation
// spread, so prediction targets are scaled by their own spread, not the
// observations', to keep training gradients O(1).
struct NormStats {
  Eigen::VectorXd obs_mean, obs_std;
  Eigen::VectorXd act_mean, act_std;
  Eigen::VectorXd delta_std;
  double epsilon = 1e-6;
};

NormStats compute_norm_stats(const ExperienceBuffer& buffer, double epsilon = 1e-6);

Eigen::VectorXd normalize(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                          const Eigen::VectorXd& std);
Eigen::VectorXd denormalize(const Eigen::VectorXd& xn, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& std);

// One training sample: W consecutive (obs, act) rows plus the raw
// delta-observation target o(t+1) - o(t).
struct WindowSample {
  Eigen::MatrixXd obs_window;  // W x obs_dim
  Eigen::MatrixXd act_window;  // W x act_dim
  Eigen::VectorXd target;      // obs_dim
};

// Every maximal run of consecutive steps (same episode, contiguous
// step_index) of length L yields max(0, L - W) samples; windows never span
// episode boundaries or eviction gaps.
std::vector<WindowSample> make_windows(const ExperienceBuffer& buffer, int W);

// Chronological split: earliest ceil(ratio*N) samples to train, rest to
// validation, order preserved, no shuffling across the boundary.
std::pair<std::vector<WindowSample>, std::vector<WindowSample>> split_windows(
    std::vector<WindowSample> samples, double ratio);

}  // namespace hvacmbrl
