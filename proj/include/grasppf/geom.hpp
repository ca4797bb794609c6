#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "grasppf/rng.hpp"

namespace grasppf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Orthonormal 3x3 matrix with det +1.
class Rotation3 {
 public:
  Rotation3() : m_(Mat3::Identity()) {}
  /// Re-orthogonalizes (polar decomposition) when the input drifts more than 1e-9.
  explicit Rotation3(const Mat3& m);

  static Rotation3 identity() { return Rotation3(); }
  static Rotation3 about_x(double angle);
  static Rotation3 about_y(double angle);
  static Rotation3 about_z(double angle);
  /// Rz(yaw) * Ry(pitch) * Rx(roll).
  static Rotation3 from_rpy(double roll, double pitch, double yaw);
  static Rotation3 from_axis_angle(const Vec3& axis_angle);

  const Mat3& matrix() const { return m_; }
  Vec3 column(int i) const { return m_.col(i); }
  Rotation3 inverse() const;
  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation3 operator*(const Rotation3& o) const;

  /// Roll, pitch, yaw such that from_rpy reproduces this rotation.
  Vec3 rpy() const;

  /// Geodesic angle between the two rotations, radians.
  static double angle_between(const Rotation3& a, const Rotation3& b);

 private:
  struct Unchecked {};
  Rotation3(const Mat3& m, Unchecked) : m_(m) {}
  Mat3 m_;
};

/// Rigid transform x -> R x + t.
struct Pose3 {
  Rotation3 rotation;
  Vec3 translation = Vec3::Zero();

  static Pose3 identity() { return {}; }
  Pose3 operator*(const Pose3& o) const {
    return {rotation * o.rotation, rotation * o.translation + translation};
  }
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  Pose3 inverse() const {
    Rotation3 inv = rotation.inverse();
    return {inv, -(inv * translation)};
  }
  Vec3 transform_direction(const Vec3& d) const { return rotation * d; }
};

/// z-x-y Euler angles: R = Rz(alpha) Rx(beta) Ry(gamma).
struct EulerZXY {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

constexpr double kGimbalBand = 1e-3;

Rotation3 euler_zxy_compose(const EulerZXY& e);
/// Throws GimbalLock when |beta| is within kGimbalBand of pi/2.
EulerZXY euler_zxy_decompose(const Rotation3& r);

/// r * exp(hat(w)), w ~ N(0, sigma^2 I), body-frame perturbation.
Rotation3 perturb_rotation(const Rotation3& r, double sigma_rad, Rng& rng);

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  /// Throws InvariantError on out-of-range indices or degenerate faces.
  void validate() const;
  double surface_area() const;
  /// Signed volume by the divergence theorem; positive for outward winding.
  double signed_volume() const;
};

struct PosedMesh {
  const TriMesh* mesh = nullptr;
  Pose3 pose;
};

struct RayHit {
  double distance = 0.0;
  int object_index = -1;
  int face_index = -1;
  Vec3 normal = Vec3::Zero();  // world-frame outward face normal
};

/// Axis-aligned box.
struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool overlaps(const Aabb& b) const {
    return (lo.array() <= b.hi.array()).all() && (b.lo.array() <= hi.array()).all();
  }
  /// Slab test; returns entry distance when the ray meets the box within [0, tmax].
  bool hit_by(const Vec3& origin, const Vec3& inv_dir, double tmax) const;
};

/// Oriented box: center, axes (columns of rotation) and half extents.
struct Obb {
  Pose3 frame;
  Vec3 half = Vec3::Zero();

  Aabb bounds() const;
  std::array<Vec3, 8> corners() const;
};

/// Exact separating-axis overlap between a triangle and an oriented box.
bool triangle_overlaps_obb(const Vec3& a, const Vec3& b, const Vec3& c, const Obb& box);

/// Triangle BVH over a set of posed meshes, world frame. Immutable after build.
class RayCaster {
 public:
  RayCaster() = default;
  explicit RayCaster(std::span<const PosedMesh> meshes);

  /// Nearest hit with distance in (1e-6, tmax]; ties resolved to the lowest
  /// (object_index, face_index).
  std::optional<RayHit> cast(const Vec3& origin, const Vec3& direction,
                             double tmax = std::numeric_limits<double>::infinity()) const;

  /// True if any triangle of any object overlaps the box.
  bool overlaps(const Obb& box) const;
  /// Same, restricted to one object.
  bool overlaps(const Obb& box, int object_index) const;

  std::size_t triangle_count() const { return tris_.size(); }
  const Aabb& object_bounds(int object_index) const { return object_bounds_.at(object_index); }
  std::size_t object_count() const { return object_bounds_.size(); }

 private:
  struct Tri {
    Vec3 v0, e1, e2, normal;
    int object_index;
    int face_index;
  };
  struct Node {
    Aabb box;
    int left = -1;   // child index, or -1 for leaf
    int right = -1;
    int first = 0;   // leaf range into order_
    int count = 0;
  };
  int build(int first, int count, std::vector<Aabb>& tri_boxes, std::vector<Vec3>& centroids);
  template <class Fn>
  bool any_overlap(const Obb& box, Fn&& accept) const;

  std::vector<Tri> tris_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  std::vector<Aabb> object_bounds_;
};

/// One-shot convenience over RayCaster.
std::optional<RayHit> ray_cast(std::span<const PosedMesh> meshes, const Vec3& origin,
                               const Vec3& direction);

/// Moller-Trumbore; returns the ray parameter or nullopt.
std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& direction,
                                         const Vec3& v0, const Vec3& e1, const Vec3& e2);

}  // namespace grasppf
