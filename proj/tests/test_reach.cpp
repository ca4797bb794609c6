#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "grasppf/errors.hpp"
#include "grasppf/reach.hpp"

using namespace grasppf;

namespace {

// Approach axis tilted by `tilt` away from straight down.
Rotation3 tilted(double tilt) { return Rotation3::about_x(std::numbers::pi + tilt); }

Pose3 at_mid_shell(const ReachModel& m, double tilt = 0.0) {
  const double r = 0.5 * (m.r_min + m.r_max), z = 0.1;
  return {tilted(tilt), m.base_origin + Vec3(0, std::sqrt(r * r - z * z), z)};
}

std::vector<Pose3> random_grasps(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Pose3> out;
  for (int i = 0; i < n; ++i)
    out.push_back({perturb_rotation(Rotation3::about_x(std::numbers::pi), 0.8, rng),
                   Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.05, 0.6))});
  return out;
}

}  // namespace

TEST(Reach, StraightDownAtShellMidpoint) {
  const ReachModel m;
  EXPECT_NEAR(approach_tilt(at_mid_shell(m)), 0.0, 1e-12);
  EXPECT_EQ(reachable(m, at_mid_shell(m)), 1);
}

TEST(Reach, TenMetersAwayIsUnreachable) {
  const ReachModel m;
  EXPECT_EQ(reachable(m, {tilted(0), Vec3(10, 0, 0.1)}), 0);
}

TEST(Reach, TiltBoundary) {
  const ReachModel m;
  EXPECT_EQ(reachable(m, at_mid_shell(m, m.max_tilt)), 1);
  EXPECT_EQ(reachable(m, at_mid_shell(m, m.max_tilt + 1e-6)), 0);
  EXPECT_EQ(reachable(m, at_mid_shell(m, -m.max_tilt - 1e-6)), 0);
}

TEST(Reach, ShellAndClearanceBoundaries) {
  const ReachModel m;
  auto at_radius = [&](double r) { return Pose3{tilted(0), m.base_origin + Vec3(0, std::sqrt(r * r - 0.0025), 0.05)}; };
  EXPECT_EQ(reachable(m, at_radius(m.r_min - 1e-6)), 0);
  EXPECT_EQ(reachable(m, at_radius(m.r_min + 1e-6)), 1);
  EXPECT_EQ(reachable(m, at_radius(m.r_max - 1e-6)), 1);
  EXPECT_EQ(reachable(m, at_radius(m.r_max + 1e-6)), 0);
  const Vec3 low = m.base_origin + Vec3(0, 0.5, 0);
  EXPECT_EQ(reachable(m, {tilted(0), Vec3(low.x(), low.y(), m.table_height + m.min_clearance - 1e-6)}), 0);
  EXPECT_EQ(reachable(m, {tilted(0), Vec3(low.x(), low.y(), m.table_height + m.min_clearance + 1e-6)}), 1);
}

TEST(Reach, InvariantToSpinAboutApproachAxis) {
  const ReachModel m;
  for (const Pose3& g : random_grasps(300, 3)) {
    Pose3 spun = g;
    spun.rotation = g.rotation * Rotation3::about_z(1.234);
    EXPECT_EQ(reachable(m, g), reachable(m, spun));
  }
}

TEST(ReachBatch, SingletonsConcatenate) {
  const ReachModel m;
  const std::vector<Pose3> three{at_mid_shell(m), {tilted(0), Vec3(10, 0, 0.1)}, at_mid_shell(m, m.max_tilt)};
  const auto out = reachable_batch(m, three);
  ASSERT_EQ(out.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(out[i], reachable(m, three[i]));
  EXPECT_TRUE(reachable_batch(m, {}).empty());
}

TEST(ReachBatch, EqualsLoopAndIsFast) {
  const ReachModel m;
  const auto grasps = random_grasps(1500, 9);
  const auto t0 = std::chrono::steady_clock::now();
  const auto out = reachable_batch(m, grasps);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  int ones = 0;
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    EXPECT_EQ(out[i], reachable(m, grasps[i]));
    ones += out[i];
  }
  EXPECT_GT(ones, 50);
  EXPECT_LT(ones, 1450);
  EXPECT_LT(ms, 10.0);
}

TEST(Reach, ValidateRejectsInvertedShell) {
  ReachModel m;
  m.r_min = 0.9;
  EXPECT_THROW(m.validate(), InvariantError);
}
