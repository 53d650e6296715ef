#include "hvacmbrl/reward.hpp"

#include <cmath>

namespace hvacmbrl {

RewardResult reward(const Observation& o, const RewardParams& p) {
  RewardResult res;
  const double sign = p.center_bonus ? 1.0 : -1.0;
  double r_T = 0.0;
  for (double t : {o.T_west, o.T_east}) {
    double d = t - p.t_target;
    double gauss = std::exp(-p.lambda1 * d * d);
    double hinge = std::max(0.0, p.t_min - t) + std::max(0.0, t - p.t_max);
    r_T += sign * gauss - p.lambda2 * hinge;
  }
  res.r_T = r_T;
  res.r_P = -(o.P_ite + o.P_hvac);
  res.r = res.r_T + p.lambda_p * res.r_P;
  res.violation_west = out_of_band(o.T_west, p);
  res.violation_east = out_of_band(o.T_east, p);
  return res;
}

}  // namespace hvacmbrl
