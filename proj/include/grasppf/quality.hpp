#pragma once

#include <array>
#include <optional>

#include "grasppf/camera.hpp"
#include "grasppf/geom.hpp"
#include "grasppf/world.hpp"

namespace grasppf {

/// Simplified parallel-jaw gripper. Gripper frame: z is the approach axis,
/// x the closing axis, origin midway between the fingertips.
struct GripperModel {
  std::array<double, 2> width_bins{0.04, 0.08};
  Vec3 finger{0.01, 0.02, 0.05};  // thickness (x), depth (y), length (z)
  Vec3 palm{0.10, 0.03, 0.02};
  double finger_stroke = 0.08;
  double d_min = 0.015;
  double d_max = 0.04;

  void validate() const;
  /// +x finger, -x finger, palm.
  std::array<Obb, 3> boxes(const Pose3& grasp, int w_bin) const;
};

/// Filter state: surface point, rotation, depth along the approach axis, width bin.
struct GraspConfig {
  Vec3 p = Vec3::Zero();
  Rotation3 r;
  double d = 0.0;
  int w_bin = 0;
};

/// G = (r, p) * translation(0, 0, d).
Pose3 grasp_pose(const GraspConfig& g);
/// R^W_C * Rz(alpha) Rx(beta) Ry(gamma).
Rotation3 grasp_rotation(const Pose3& cam_pose, const EulerZXY& e);

bool collision_free(const World& world, const GripperModel& gripper, const Pose3& grasp, int w_bin);

struct Contact {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  // outward surface normal
  int object_index = -1;
};

/// first: contact of the +x finger, second: contact of the -x finger.
struct ContactPair {
  Contact first;
  Contact second;
};

/// Friction coefficients graded to levels 1, 2, 3.
inline constexpr std::array<double, 3> kLevelFriction{0.8, 0.4, 0.2};
constexpr int kPadSamples = 5;
// Pad hits this much deeper than the first one still belong to the contact patch.
constexpr double kPadCompliance = 0.002;

/// First contact of each finger pad while closing, or nullopt when either pad
/// sweeps its stroke without a front-facing hit.
std::optional<ContactPair> find_contacts(const World& world, const GripperModel& gripper, const Pose3& grasp,
                                         int w_bin);
/// Angle between each inward contact force and the line joining the contacts.
std::array<double, 2> contact_cone_angles(const ContactPair& contacts);
/// Largest level whose friction cone contains the contact line at both contacts.
int antipodal_level(const ContactPair& contacts);
int force_closure_level(const World& world, const GripperModel& gripper, const Pose3& grasp, int w_bin);

/// p(v | m_c, m_o) p(m_c | m_o) p(m_o).
double success_probability(double q_v, double q_mc, double q_mo);

enum Channel : int {
  kLevel1 = 0,
  kLevel2 = 1,
  kLevel3 = 2,
  kObjectMask = 3,
  kFreeNarrow = 4,
  kFreeWide = 5,
};
constexpr int kChannels = 6;

using GraspChannels = std::array<double, kChannels>;

/// Six label channels for one grasp pose. Levels are computed at the
/// narrowest collision-free bin and are zero when no bin is free.
GraspChannels grasp_channels(const World& world, const GripperModel& gripper, const Pose3& grasp, bool on_object);

/// Q per width bin.
struct QualityValue {
  std::array<double, 2> q{0.0, 0.0};

  double best() const { return std::max(q[0], q[1]); }
  /// Ties go to the wide bin: same quality, more clearance.
  int best_bin() const { return q[0] > q[1] ? 0 : 1; }
};

QualityValue channels_quality(const GraspChannels& channels);

struct QualityMaps {
  EulerZXY euler;
  double d = 0.0;
  RotatedView view;
  std::array<Image<double>, kChannels> channel;
};

/// Pixel-wise directional quality for one (rotation, depth). Throws
/// FrameMismatch when the observation and world time steps differ.
QualityMaps directional_quality_maps(const Observation& obs, const World& world, const EulerZXY& e, double d,
                                     const GripperModel& gripper, int jobs = 1);

/// Grasp represented by a rotated-view pixel, or nullopt for invalid pixels.
std::optional<GraspConfig> grasp_at(const QualityMaps& maps, const Observation& obs, Pixel rotated, int w_bin);

/// Per-bin success probability, Gaussian-blurred (truncated at 3 sigma,
/// replicated borders) and clamped to [0, 1].
std::array<Image<double>, 2> continuous_quality(const QualityMaps& maps, double blur_sigma_px);
Image<double> gaussian_blur(const Image<double>& img, double sigma);

/// Per-grasp path: the same arithmetic as one pixel of the maps.
QualityValue evaluate_grasp(const World& world, const Observation& obs, const GraspConfig& g,
                            const GripperModel& gripper);
/// 1 when g.p projects onto an object pixel of the observation.
bool on_object(const Observation& obs, const Vec3& p);

}  // namespace grasppf
