#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "grasppf/geom.hpp"

namespace grasppf {

/// Analytic reachability gate Q^R: a spherical workspace shell around the
/// robot base, a cone of admissible approach directions about world -z and a
/// minimum height above the table.
struct ReachModel {
  Vec3 base_origin{0.0, -0.45, 0.0};
  double r_min = 0.25;
  double r_max = 0.85;
  double max_tilt = std::numbers::pi / 3.0;
  double min_clearance = 0.005;
  double table_height = 0.0;

  void validate() const;
};

/// Angle between the approach axis (third column) and world -z.
double approach_tilt(const Pose3& grasp);

std::uint8_t reachable(const ReachModel& model, const Pose3& grasp);
std::vector<std::uint8_t> reachable_batch(const ReachModel& model, std::span<const Pose3> grasps);

}  // namespace grasppf
