#include "grasppf/reach.hpp"

#include <cmath>

#include "grasppf/errors.hpp"

namespace grasppf {

// Admits the exact boundary despite the rounding in approach_tilt.
constexpr double kTiltSlack = 1e-12;

void ReachModel::validate() const {
  if (!(r_min > 0.0 && r_min < r_max)) throw InvariantError("reach: need 0 < r_min < r_max");
  if (!(max_tilt > 0.0 && max_tilt <= std::numbers::pi / 2)) throw InvariantError("reach: max_tilt must lie in (0, pi/2]");
}

double approach_tilt(const Pose3& grasp) {
  const Vec3 approach = grasp.rotation.column(2);
  const Vec3 down(0.0, 0.0, -1.0);
  return std::atan2(approach.cross(down).norm(), approach.dot(down));
}

std::uint8_t reachable(const ReachModel& m, const Pose3& grasp) {
  const double r = (grasp.translation - m.base_origin).norm();
  if (r < m.r_min || r > m.r_max) return 0;
  if (grasp.translation.z() < m.table_height + m.min_clearance) return 0;
  return approach_tilt(grasp) <= m.max_tilt + kTiltSlack ? 1 : 0;
}

std::vector<std::uint8_t> reachable_batch(const ReachModel& m, std::span<const Pose3> grasps) {
  std::vector<std::uint8_t> out(grasps.size());
  for (std::size_t i = 0; i < grasps.size(); ++i) out[i] = reachable(m, grasps[i]);
  return out;
}

}  // namespace grasppf
