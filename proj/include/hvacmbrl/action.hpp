#pragma once
// Safety-constrained action space. Raw actions are (setpoint degC, fan scale)
// per zone; controllers emit normalized increments z in [-1,1]^4 which decode
// to bounded raw actions with a hard per-step change limit.

#include <Eigen/Dense>
#include <array>
#include <stdexcept>

namespace hvacmbrl {

inline constexpr int kActDim = 4;

// Component order everywhere: [TS_west, TS_east, F_west, F_east].
struct RawAction {
  double TS_west = 23.5;
  double TS_east = 23.5;
  double F_west = 6.25;
  double F_east = 6.25;

  Eigen::Vector4d vec() const { return {TS_west, TS_east, F_west, F_east}; }
  static RawAction from_vec(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

struct NormalizedAction {
  Eigen::Vector4d z = Eigen::Vector4d::Zero();  // each component in [-1,1]
};

struct SafeActionSpace {
  Eigen::Vector4d a_min{13.5, 13.5, 2.5, 2.5};
  Eigen::Vector4d a_max{23.5, 23.5, 10.0, 10.0};
  Eigen::Vector4d delta{1.0, 1.0, 1.0, 1.0};  // max |a(t) - a(t-1)| per component

  // Fixed-setpoint baseline and the anchor the exploration walk starts from.
  RawAction default_start() const {
    return {23.5, 23.5, 0.5 * (a_min[2] + a_max[2]), 0.5 * (a_min[3] + a_max[3])};
  }

  bool contains(const RawAction& a) const {
    Eigen::Vector4d v = a.vec();
    return (v.array() >= a_min.array()).all() && (v.array() <= a_max.array()).all();
  }

  void validate() const {
    if (!(a_min.array() < a_max.array()).all())
      throw std::runtime_error("SafeActionSpace: a_min must be < a_max componentwise");
    if (!(delta.array() > 0.0).all())
      throw std::runtime_error("SafeActionSpace: delta must be > 0");
  }
};

// clip(delta .* z + a_prev, a_min, a_max), with the guarantee that the
// floating-point difference |a - a_prev| never exceeds delta componentwise
// (the audit recomputes that difference in doubles; see decode_action impl).
RawAction decode_action(const NormalizedAction& z, const RawAction& a_prev,
                        const SafeActionSpace& space);

}  // namespace hvacmbrl
