#pragma once
// Imitation policy: an observation-only window encoder with a tanh-squashed
// head emitting a normalized action in [-1,1]^4. Labels are the planner's
// selected z, stored in normalized space so every executed action still
// passes through the safety decoder. Trained by cloning with the same
// half-mean-squared-error convention as the dynamics model.

#include <Eigen/Dense>
#include <deque>
#include <string>
#include <vector>

#include "hvacmbrl/action.hpp"
#include "hvacmbrl/experience.hpp"
#include "hvacmbrl/netkernels.hpp"
#include "hvacmbrl/reward.hpp"
#include "hvacmbrl/rng.hpp"

namespace hvacmbrl {

struct PolicyConfig {
  int window = 20;
  int obs_dim = kObsDim;
  int act_dim = kActDim;
  Arch arch = Arch::recurrent;
  bool attention = true;
  int hidden_size = 64;
  double learning_rate = 1e-2;
  int batch_size = 128;
  int epochs = 30;

  void validate() const;
  NetSpec net_spec() const;
};

struct PolicyModel {
  PolicyConfig config;
  NetParams<double> net;
  NormStats stats;  // observation part only; action stats stay identity

  static PolicyModel make(const PolicyConfig& config, Rng& init_rng);
};

struct LabeledWindow {
  Eigen::MatrixXd obs_window;  // W x obs_dim, rows oldest to newest
  Eigen::Vector4d label;       // planner-selected z
};

// FIFO store of (observation window, z label) pairs.
class ImitationBuffer {
 public:
  explicit ImitationBuffer(size_t capacity = 11520);
  void append(LabeledWindow item);
  size_t size() const { return items_.size(); }
  size_t capacity() const { return capacity_; }
  const LabeledWindow& at(size_t i) const { return items_.at(i); }
  const std::deque<LabeledWindow>& items() const { return items_; }

  std::string serialize() const;
  static ImitationBuffer deserialize(const std::string& bytes);

 private:
  size_t capacity_;
  std::deque<LabeledWindow> items_;
};

// Deterministic squashed action for one window; every component in [-1,1].
Eigen::Vector4d policy_forward(const PolicyModel& model,
                               const Eigen::MatrixXd& obs_window);

// Mean over the batch of 0.5 * ||policy output - label||^2.
double imitation_loss(const PolicyModel& model, const std::vector<LabeledWindow>& items,
                      const std::vector<size_t>& index);
double imitation_loss(const PolicyModel& model, const std::vector<LabeledWindow>& items);

Eigen::VectorXd imitation_loss_grad(const PolicyModel& model,
                                    const std::vector<LabeledWindow>& items,
                                    const std::vector<size_t>& index);
Eigen::VectorXd imitation_loss_grad(const PolicyModel& model,
                                    const std::vector<LabeledWindow>& items);

struct PolicyTrainReport {
  std::vector<double> epoch_train_loss;
  size_t n_items = 0;
};

// Recomputes observation stats from the buffer, then config.epochs of
// seeded-shuffle minibatch SGD over all stored pairs.
PolicyTrainReport train_policy(PolicyModel& model, const ImitationBuffer& buffer,
                               Rng& rng);

// Versioned binary checkpoint; round-trip is bitwise exact.
std::string serialize_policy(const PolicyModel& model);
PolicyModel deserialize_policy(const std::string& bytes);

}  // namespace hvacmbrl
