#pragma once
// Learned dynamics model: W-step windows of normalized (observation, action)
// pairs in, normalized next-step observation delta out. Training is plain
// minibatch SGD on a half-mean-squared-error loss; rollout feeds predictions
// back into the window. Deltas are scaled by the observation std only (the
// mean cancels in a difference), so a zero output projection predicts exact
// persistence.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "hvacmbrl/action.hpp"
#include "hvacmbrl/experience.hpp"
#include "hvacmbrl/netkernels.hpp"
#include "hvacmbrl/reward.hpp"
#include "hvacmbrl/rng.hpp"

namespace hvacmbrl {

struct ModelConfig {
  int window = 20;
  int obs_dim = kObsDim;
  int act_dim = kActDim;
  Arch arch = Arch::recurrent;
  bool attention = true;
  int hidden_size = 64;
  double learning_rate = 1e-2;
  int batch_size = 128;
  int epochs = 30;
  double train_ratio = 0.8;

  void validate() const;
  NetSpec net_spec() const;
};

struct DynamicsModel {
  ModelConfig config;
  NetParams<double> net;
  NormStats stats;  // identity (zero mean, unit std) until trained

  static DynamicsModel make(const ModelConfig& config, Rng& init_rng);
};

// Normalized per-slot network inputs [norm obs | norm act] for a batch of
// window samples; xs[t] is B x (obs_dim + act_dim).
std::vector<Eigen::MatrixXd> build_slot_inputs(const DynamicsModel& model,
                                               const std::vector<WindowSample>& samples,
                                               const std::vector<size_t>& index);

// Normalized delta targets, one row per sample.
Eigen::MatrixXd build_targets(const DynamicsModel& model,
                              const std::vector<WindowSample>& samples,
                              const std::vector<size_t>& index);

// Prediction for a single window: o(t) + obs_std .* network(window).
// obs_window is W x obs_dim (rows oldest to newest), act_window W x act_dim.
Eigen::VectorXd predict_next(const DynamicsModel& model,
                             const Eigen::MatrixXd& obs_window,
                             const Eigen::MatrixXd& act_window);

// Mean over the batch of 0.5 * ||normalized target - normalized prediction||^2.
double window_loss(const DynamicsModel& model, const std::vector<WindowSample>& samples,
                   const std::vector<size_t>& index);
double window_loss(const DynamicsModel& model, const std::vector<WindowSample>& samples);

// Analytic gradient of window_loss with respect to every parameter.
Eigen::VectorXd window_loss_grad(const DynamicsModel& model,
                                 const std::vector<WindowSample>& samples,
                                 const std::vector<size_t>& index);
Eigen::VectorXd window_loss_grad(const DynamicsModel& model,
                                 const std::vector<WindowSample>& samples);

struct TrainReport {
  std::vector<double> epoch_train_loss;  // mean of minibatch losses per epoch
  std::optional<double> val_loss;        // absent when the split leaves no val windows
  size_t n_train = 0;
  size_t n_val = 0;
};

// Recomputes normalization stats from the buffer, extracts windows, splits
// chronologically, and runs config.epochs of seeded-shuffle minibatch SGD.
TrainReport train_dynamics(DynamicsModel& model, const ExperienceBuffer& buffer,
                           Rng& rng);

// Open-loop rollout: obs_hist is W x obs_dim ending at o(t); act_hist is
// (W-1) x act_dim ending at a(t-1); future_actions is H x act_dim starting
// with a(t). Returns H x obs_dim predictions for o(t+1..t+H).
Eigen::MatrixXd open_loop_rollout(const DynamicsModel& model,
                                  const Eigen::MatrixXd& obs_hist,
                                  const Eigen::MatrixXd& act_hist,
                                  const Eigen::MatrixXd& future_actions);

// Mean over steps of the relative-error norm: (1/H) sum_h ||(o - o_hat) ./ o||.
// Throws if any ground-truth component has magnitude below 1e-9.
double deviation(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& ground_truth);

// Versioned binary checkpoint; round-trip is bitwise exact.
std::string serialize_dynamics(const DynamicsModel& model);
DynamicsModel deserialize_dynamics(const std::string& bytes);

}  // namespace hvacmbrl
