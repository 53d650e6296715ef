#include "hvacmbrl/action.hpp"

#include <cmath>

namespace hvacmbrl {

RawAction decode_action(const NormalizedAction& z, const RawAction& a_prev,
                        const SafeActionSpace& space) {
  if (!space.contains(a_prev))
    throw std::runtime_error("decode_action: a_prev outside [a_min, a_max]");
  Eigen::Vector4d prev = a_prev.vec();
  Eigen::Vector4d out;
  for (int i = 0; i < kActDim; ++i) {
    double zi = std::clamp(z.z[i], -1.0, 1.0);
    double step = zi * space.delta[i];  // |step| <= delta: rounding is monotone
    double a = prev[i] + step;
    a = std::clamp(a, space.a_min[i], space.a_max[i]);
    // a_prev + step can round outward by one ulp, making the recomputed
    // difference exceed delta; nudge back toward a_prev until the audit
    // predicate |a - a_prev| <= delta holds exactly in double arithmetic.
    while (std::abs(a - prev[i]) > space.delta[i]) a = std::nextafter(a, prev[i]);
    out[i] = a;
  }
  return RawAction::from_vec(out);
}

}  // namespace hvacmbrl
