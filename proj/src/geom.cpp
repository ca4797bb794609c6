#include "grasppf/geom.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "grasppf/errors.hpp"

namespace grasppf {
namespace {

constexpr double kOrthoTolerance = 1e-9;
constexpr double kRayEpsilon = 1e-6;

double orthogonality_drift(const Mat3& m) {
  return (m.transpose() * m - Mat3::Identity()).norm();
}

Mat3 polar_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

// Wraps to [-pi, pi).
double wrap_angle(double a) {
  if (a >= std::numbers::pi) a -= 2.0 * std::numbers::pi;
  if (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

}  // namespace

Rotation3::Rotation3(const Mat3& m) : m_(m) {
  if (!m.allFinite()) throw InvariantError("rotation has non-finite entries");
  if (m.determinant() <= 0.0) throw InvariantError("rotation determinant is not positive");
  if (orthogonality_drift(m_) > kOrthoTolerance || std::abs(m_.determinant() - 1.0) > kOrthoTolerance) {
    m_ = polar_rotation(m_);
  }
}

Rotation3 Rotation3::about_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return Rotation3(m, Unchecked{});
}

Rotation3 Rotation3::about_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return Rotation3(m, Unchecked{});
}

Rotation3 Rotation3::about_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return Rotation3(m, Unchecked{});
}

Rotation3 Rotation3::from_rpy(double roll, double pitch, double yaw) {
  return about_z(yaw) * about_y(pitch) * about_x(roll);
}

Rotation3 Rotation3::from_axis_angle(const Vec3& w) {
  const double angle = w.norm();
  if (angle == 0.0) return Rotation3();
  return Rotation3(Eigen::AngleAxisd(angle, w / angle).toRotationMatrix());
}

Rotation3 Rotation3::inverse() const { return Rotation3(m_.transpose(), Unchecked{}); }

Rotation3 Rotation3::operator*(const Rotation3& o) const {
  Mat3 p = m_ * o.m_;
  if (orthogonality_drift(p) > kOrthoTolerance) p = polar_rotation(p);
  return Rotation3(p, Unchecked{});
}

Vec3 Rotation3::rpy() const {
  const double pitch = std::asin(std::clamp(-m_(2, 0), -1.0, 1.0));
  double roll, yaw;
  if (std::abs(std::cos(pitch)) > 1e-9) {
    roll = std::atan2(m_(2, 1), m_(2, 2));
    yaw = std::atan2(m_(1, 0), m_(0, 0));
  } else {
    roll = 0.0;
    yaw = std::atan2(-m_(0, 1), m_(1, 1));
  }
  return {roll, pitch, yaw};
}

double Rotation3::angle_between(const Rotation3& a, const Rotation3& b) {
  const Mat3 rel = a.m_.transpose() * b.m_;
  // atan2 form stays accurate near zero where acos((tr-1)/2) does not.
  const Vec3 axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (rel.trace() - 1.0));
}

Rotation3 euler_zxy_compose(const EulerZXY& e) {
  return Rotation3::about_z(e.alpha) * Rotation3::about_x(e.beta) * Rotation3::about_y(e.gamma);
}

EulerZXY euler_zxy_decompose(const Rotation3& r) {
  const Mat3& m = r.matrix();
  // Third row of Rz Rx Ry is (-cb sg, sb, cb cg); second column is (-sa cb, ca cb, sb).
  const double beta = std::asin(std::clamp(m(2, 1), -1.0, 1.0));
  if (std::abs(beta) > std::numbers::pi / 2.0 - kGimbalBand) {
    throw GimbalLock("zxy decomposition at |beta| = " + std::to_string(std::abs(beta)));
  }
  EulerZXY e;
  e.beta = beta;
  e.alpha = wrap_angle(std::atan2(-m(0, 1), m(1, 1)));
  e.gamma = wrap_angle(std::atan2(-m(2, 0), m(2, 2)));
  return e;
}

Rotation3 perturb_rotation(const Rotation3& r, double sigma_rad, Rng& rng) {
  if (sigma_rad == 0.0) return r;
  const Vec3 w(rng.normal(sigma_rad), rng.normal(sigma_rad), rng.normal(sigma_rad));
  return r * Rotation3::from_axis_angle(w);
}

void TriMesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (std::size_t f = 0; f < triangles.size(); ++f) {
    for (int idx : triangles[f]) {
      if (idx < 0 || idx >= n) {
        throw InvariantError("triangle " + std::to_string(f) + " has out-of-range index");
      }
    }
    const auto& t = triangles[f];
    const double area = 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
    if (!(area > 1e-12)) throw InvariantError("triangle " + std::to_string(f) + " is degenerate");
  }
}

double TriMesh::surface_area() const {
  double total = 0.0;
  for (const auto& t : triangles) {
    total += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  }
  return total;
}

double TriMesh::signed_volume() const {
  double total = 0.0;
  for (const auto& t : triangles) {
    total += vertices[t[0]].dot(vertices[t[1]].cross(vertices[t[2]])) / 6.0;
  }
  return total;
}

bool Aabb::hit_by(const Vec3& origin, const Vec3& inv_dir, double tmax) const {
  double t0 = 0.0, t1 = tmax;
  for (int a = 0; a < 3; ++a) {
    if (std::isinf(inv_dir[a])) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return false;
      continue;
    }
    double tn = (lo[a] - origin[a]) * inv_dir[a];
    double tf = (hi[a] - origin[a]) * inv_dir[a];
    if (tn > tf) std::swap(tn, tf);
    // Widen slightly so flat boxes and rays through shared edges are not lost to rounding.
    t0 = std::max(t0, tn - 1e-12 * (1.0 + std::abs(tn)));
    t1 = std::min(t1, tf + 1e-12 * (1.0 + std::abs(tf)));
    if (t0 > t1) return false;
  }
  return true;
}

Aabb Obb::bounds() const {
  const Mat3& r = frame.rotation.matrix();
  const Vec3 ext = r.cwiseAbs() * half;
  return {frame.translation - ext, frame.translation + ext};
}

std::array<Vec3, 8> Obb::corners() const {
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 local((i & 1) ? half.x() : -half.x(), (i & 2) ? half.y() : -half.y(),
                     (i & 4) ? half.z() : -half.z());
    out[i] = frame * local;
  }
  return out;
}

bool triangle_overlaps_obb(const Vec3& a, const Vec3& b, const Vec3& c, const Obb& box) {
  // Work in the box frame so the box is axis aligned at the origin.
  const Pose3 inv = box.frame.inverse();
  const std::array<Vec3, 3> v = {inv * a, inv * b, inv * c};
  const std::array<Vec3, 3> e = {v[1] - v[0], v[2] - v[1], v[0] - v[2]};
  const Vec3& h = box.half;

  auto separated = [&](const Vec3& axis) {
    if (axis.squaredNorm() < 1e-24) return false;
    const double p0 = v[0].dot(axis), p1 = v[1].dot(axis), p2 = v[2].dot(axis);
    const double r = h.x() * std::abs(axis.x()) + h.y() * std::abs(axis.y()) + h.z() * std::abs(axis.z());
    return std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r;
  };

  for (int i = 0; i < 3; ++i) {
    if (separated(Vec3::Unit(i))) return false;
  }
  if (separated(e[0].cross(e[1]))) return false;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (separated(Vec3::Unit(i).cross(e[j]))) return false;
    }
  }
  return true;
}

std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& v0,
                                         const Vec3& e1, const Vec3& e2) {
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-18) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tvec = origin - v0;
  const double u = tvec.dot(pvec) * inv;
  // Barycentric slack keeps shared edges watertight under rounding.
  constexpr double kEdge = 1e-9;
  if (u < -kEdge || u > 1.0 + kEdge) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv;
  if (v < -kEdge || u + v > 1.0 + kEdge) return std::nullopt;
  return e2.dot(qvec) * inv;
}

RayCaster::RayCaster(std::span<const PosedMesh> meshes) {
  object_bounds_.resize(meshes.size());
  for (std::size_t o = 0; o < meshes.size(); ++o) {
    const TriMesh& mesh = *meshes[o].mesh;
    const Pose3& pose = meshes[o].pose;
    std::vector<Vec3> world(mesh.vertices.size());
    for (std::size_t i = 0; i < world.size(); ++i) {
      world[i] = pose * mesh.vertices[i];
      object_bounds_[o].extend(world[i]);
    }
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
      const auto& t = mesh.triangles[f];
      Tri tri;
      tri.v0 = world[t[0]];
      tri.e1 = world[t[1]] - world[t[0]];
      tri.e2 = world[t[2]] - world[t[0]];
      tri.normal = tri.e1.cross(tri.e2).normalized();
      tri.object_index = static_cast<int>(o);
      tri.face_index = static_cast<int>(f);
      tris_.push_back(tri);
    }
  }
  if (tris_.empty()) return;
  std::vector<Aabb> boxes(tris_.size());
  std::vector<Vec3> centroids(tris_.size());
  order_.resize(tris_.size());
  for (std::size_t i = 0; i < tris_.size(); ++i) {
    const Tri& t = tris_[i];
    boxes[i].extend(t.v0);
    boxes[i].extend(t.v0 + t.e1);
    boxes[i].extend(t.v0 + t.e2);
    centroids[i] = t.v0 + (t.e1 + t.e2) / 3.0;
    order_[i] = static_cast<int>(i);
  }
  nodes_.reserve(2 * tris_.size() / 2 + 1);
  build(0, static_cast<int>(tris_.size()), boxes, centroids);
}

int RayCaster::build(int first, int count, std::vector<Aabb>& boxes, std::vector<Vec3>& centroids) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Aabb box, centroid_box;
  for (int i = first; i < first + count; ++i) {
    box.extend(boxes[order_[i]]);
    centroid_box.extend(centroids[order_[i]]);
  }
  nodes_[index].box = box;
  if (count <= 4) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }
  int axis = 0;
  (centroid_box.hi - centroid_box.lo).maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });
  const int left = build(first, mid - first, boxes, centroids);
  const int right = build(mid, first + count - mid, boxes, centroids);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

std::optional<RayHit> RayCaster::cast(const Vec3& origin, const Vec3& dir, double tmax) const {
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv_dir = dir.cwiseInverse();
  std::optional<RayHit> best;
  auto better = [&](double t, const Tri& tri) {
    if (!best) return true;
    if (t != best->distance) return t < best->distance;
    if (tri.object_index != best->object_index) return tri.object_index < best->object_index;
    return tri.face_index < best->face_index;
  };

  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    const double limit = best ? best->distance : tmax;
    if (!node.box.hit_by(origin, inv_dir, limit)) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const Tri& tri = tris_[order_[i]];
        const auto t = intersect_triangle(origin, dir, tri.v0, tri.e1, tri.e2);
        if (!t || *t <= kRayEpsilon || *t > tmax) continue;
        if (better(*t, tri)) best = RayHit{*t, tri.object_index, tri.face_index, tri.normal};
      }
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return best;
}

template <class Fn>
bool RayCaster::any_overlap(const Obb& box, Fn&& accept) const {
  if (nodes_.empty()) return false;
  const Aabb query = box.bounds();
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!node.box.overlaps(query)) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const Tri& tri = tris_[order_[i]];
        if (!accept(tri.object_index)) continue;
        if (triangle_overlaps_obb(tri.v0, tri.v0 + tri.e1, tri.v0 + tri.e2, box)) return true;
      }
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return false;
}

bool RayCaster::overlaps(const Obb& box) const {
  return any_overlap(box, [](int) { return true; });
}

bool RayCaster::overlaps(const Obb& box, int object_index) const {
  return any_overlap(box, [object_index](int o) { return o == object_index; });
}

std::optional<RayHit> ray_cast(std::span<const PosedMesh> meshes, const Vec3& origin,
                               const Vec3& direction) {
  return RayCaster(meshes).cast(origin, direction);
}

}  // namespace grasppf
