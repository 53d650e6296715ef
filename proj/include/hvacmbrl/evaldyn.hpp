#pragma once
// Dynamics-accuracy evaluation: per weather variant, collect exploratory
// data, fit one model per window length on the head of the data, and average
// open-loop rollout deviation over start points in the held-out tail. The
// result is a small CSV (deviation plus evaluated/excluded counts per cell)
// that re-parses to the identical in-memory table.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hvacmbrl/config.hpp"

namespace hvacmbrl {

struct EvalDataset {
  std::string label;
  ExperienceBuffer steps;
  int64_t train_steps = 0;  // model fitting sees steps [0, train_steps)
};

// One dataset per weather variant, collected with the exploratory walk; each
// variant draws its own weather/load/walk streams from the seed.
std::vector<EvalDataset> collect_eval_data(const ExperimentConfig& cfg);

// Multi-step prediction seam: given the window ending at step `anchor`,
// row h of the result predicts steps.at(anchor + 1 + h).obs. Tests swap in
// oracles here (a ground-truth rollout must score a deviation of zero).
using RolloutFn = std::function<Eigen::MatrixXd(const EvalDataset& data, int64_t anchor,
                                                int window, int horizon)>;

struct DeviationCell {
  double mean_deviation = 0.0;  // nan when every start point was excluded
  int64_t evaluated = 0;
  int64_t excluded = 0;  // start points skipped by the near-zero-truth guard
};

struct DeviationTable {
  std::vector<std::string> labels;                // row per weather variant
  std::vector<int> windows;                       // column per window length
  std::vector<std::vector<DeviationCell>> cells;  // [label][window]

  std::string to_csv() const;
};

DeviationTable parse_deviation_table(const std::string& text);

// Table over the given datasets, scoring every cell through `rollout`.
DeviationTable deviation_table(const std::vector<EvalDataset>& data,
                               const EvalDynOptions& opt, const RolloutFn& rollout);

// Full pipeline: collect, train one model per (variant, window), evaluate.
DeviationTable evaluate_dynamics(const ExperimentConfig& cfg);

}  // namespace hvacmbrl
