#pragma once
// Shaped step reward over an observation: temperature terms for both zones
// plus a power term, with per-zone comfort-band violation flags.

#include <Eigen/Dense>

namespace hvacmbrl {

inline constexpr int kObsDim = 5;

// Component order everywhere: [T_out, T_west, T_east, P_ite, P_hvac].
struct Observation {
  double T_out = 24.0;   // degC
  double T_west = 23.5;  // degC
  double T_east = 23.5;  // degC
  double P_ite = 0.0;    // W
  double P_hvac = 0.0;   // W

  using Vec = Eigen::Matrix<double, kObsDim, 1>;
  Vec vec() const { return {T_out, T_west, T_east, P_ite, P_hvac}; }
  static Observation from_vec(const Vec& v) { return {v[0], v[1], v[2], v[3], v[4]}; }
};

struct RewardParams {
  double lambda1 = 0.5;   // gaussian temperature-term width
  double lambda2 = 0.1;   // out-of-band hinge weight
  double lambda_p = 1e-5; // power term weight
  double t_target = 23.5; // degC
  double t_min = 22.0;    // comfort band lower edge, degC
  double t_max = 25.0;    // comfort band upper edge, degC
  double gamma = 1.0;     // discount within a planning horizon
  // Orientation of the gaussian term. false: the gaussian enters as a cost,
  // r_T = -sum_i(exp(-l1 (T_i-T_C)^2) + l2*hinge_i). true: it enters as a
  // tracking bonus, r_T = sum_i(exp(-l1 (T_i-T_C)^2) - l2*hinge_i). The hinge
  // always penalizes out-of-band temperatures.
  bool center_bonus = false;
};

struct RewardResult {
  double r = 0.0;    // r_T + lambda_p * r_P
  double r_T = 0.0;  // temperature terms
  double r_P = 0.0;  // -(P_ite + P_hvac)
  bool violation_west = false;
  bool violation_east = false;
};

inline bool out_of_band(double t_c, const RewardParams& p) {
  return t_c < p.t_min || t_c > p.t_max;
}

RewardResult reward(const Observation& o, const RewardParams& p);

}  // namespace hvacmbrl
