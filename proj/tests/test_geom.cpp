#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "fixtures.hpp"
#include "grasppf/errors.hpp"
#include "grasppf/geom.hpp"
#include "grasppf/scene.hpp"

using namespace grasppf;
using grasppf::test::box;
using grasppf::test::cylinder;
using grasppf::test::sphere;

namespace {

double frob(const Rotation3& a, const Rotation3& b) { return (a.matrix() - b.matrix()).norm(); }

Rotation3 random_rotation(Rng& rng) {
  Vec3 w(rng.normal(), rng.normal(), rng.normal());
  w = w.normalized() * rng.uniform(0.0, std::numbers::pi);
  return Rotation3::from_axis_angle(w);
}

}  // namespace

TEST(Euler, IdentityDecomposesToZero) {
  const EulerZXY e = euler_zxy_decompose(Rotation3::identity());
  EXPECT_NEAR(e.alpha, 0.0, 1e-12);
  EXPECT_NEAR(e.beta, 0.0, 1e-12);
  EXPECT_NEAR(e.gamma, 0.0, 1e-12);
}

TEST(Euler, SingleAxisZ) {
  const EulerZXY e = euler_zxy_decompose(Rotation3::about_z(0.3));
  EXPECT_NEAR(e.alpha, 0.3, 1e-12);
  EXPECT_NEAR(e.beta, 0.0, 1e-12);
  EXPECT_NEAR(e.gamma, 0.0, 1e-12);
}

TEST(Euler, ComposeZeroIsIdentity) {
  EXPECT_LT(frob(euler_zxy_compose({0, 0, 0}), Rotation3::identity()), 1e-15);
}

TEST(Euler, QuarterTurnMapsXToY) {
  const Vec3 y = euler_zxy_compose({std::numbers::pi / 2, 0, 0}) * Vec3::UnitX();
  EXPECT_LT((y - Vec3::UnitY()).norm(), 1e-12);
}

TEST(Euler, ComposeMatchesElementaryProduct) {
  const Rotation3 direct = Rotation3::about_z(0.2) * Rotation3::about_x(0.1) * Rotation3::about_y(-0.3);
  EXPECT_LT(frob(euler_zxy_compose({0.2, 0.1, -0.3}), direct), 1e-12);
}

TEST(Euler, RoundTripSeededRotations) {
  Rng rng(7);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const Rotation3 r = random_rotation(rng);
    EulerZXY e;
    try {
      e = euler_zxy_decompose(r);
    } catch (const GimbalLock&) {
      continue;
    }
    EXPECT_LT(frob(euler_zxy_compose(e), r), 1e-9) << "sample " << i;
    ++checked;
  }
  EXPECT_GT(checked, 990);
}

TEST(Euler, GimbalBandThrows) {
  EXPECT_THROW(euler_zxy_decompose(euler_zxy_compose({0.4, std::numbers::pi / 2 - 5e-4, 0.1})), GimbalLock);
  EXPECT_NO_THROW(euler_zxy_decompose(euler_zxy_compose({0.4, std::numbers::pi / 2 - 2e-3, 0.1})));
}

TEST(Rotation, ReorthogonalizesDriftedInput) {
  Mat3 m = Rotation3::from_rpy(0.1, 0.2, 0.3).matrix();
  m(0, 1) += 1e-6;
  const Rotation3 r(m);
  EXPECT_LT((r.matrix() * r.matrix().transpose() - Mat3::Identity()).norm(), 1e-12);
  EXPECT_NEAR(r.matrix().determinant(), 1.0, 1e-12);
}

TEST(Rotation, RpyRoundTrip) {
  const Rotation3 r = Rotation3::from_rpy(0.3, -0.4, 2.0);
  const Vec3 rpy = r.rpy();
  EXPECT_LT(frob(Rotation3::from_rpy(rpy.x(), rpy.y(), rpy.z()), r), 1e-12);
}

TEST(Perturb, ZeroSigmaIsExact) {
  Rng rng(3);
  const Rotation3 r = Rotation3::from_rpy(0.1, 0.5, -1.0);
  EXPECT_EQ(perturb_rotation(r, 0.0, rng).matrix(), r.matrix());
}

TEST(Perturb, MeanGeodesicMatchesChiMoment) {
  const double sigma = 0.05;
  const Rotation3 r = Rotation3::from_rpy(0.2, -0.1, 0.7);
  Rng rng(11);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += Rotation3::angle_between(r, perturb_rotation(r, sigma, rng));
  // E|w| for w ~ N(0, sigma^2 I_3) is sigma * 2 * sqrt(2 / pi).
  const double expected = sigma * 2.0 * std::sqrt(2.0 / std::numbers::pi);
  EXPECT_NEAR(sum / n, expected, 0.1 * expected);
}

TEST(Perturb, SeedDeterminism) {
  const Rotation3 r = Rotation3::from_rpy(0.2, 0.3, 0.4);
  Rng a(42), b(42);
  EXPECT_EQ(perturb_rotation(r, 0.1, a).matrix(), perturb_rotation(r, 0.1, b).matrix());
}

TEST(RayCast, FromSphereCenterHitsAtRadius) {
  const TriMesh mesh = tessellate(sphere(0, 1.0, Vec3::Zero()), 64);
  const PosedMesh pm{&mesh, Pose3::identity()};
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec3 dir = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const auto hit = ray_cast({&pm, 1}, Vec3::Zero(), dir);
    ASSERT_TRUE(hit);
    // Chordal sag of a 64-segment tessellation.
    EXPECT_NEAR(hit->distance, 1.0, 3e-3);
    EXPECT_LE(hit->distance, 1.0 + 1e-12);
  }
}

TEST(RayCast, ParallelOutsideBoxMisses) {
  const TriMesh mesh = tessellate(box(0, 1, 1, 1, Vec3::Zero()), 8);
  const PosedMesh pm{&mesh, Pose3::identity()};
  EXPECT_FALSE(ray_cast({&pm, 1}, Vec3(-2, 0.6, 0), Vec3::UnitX()));
  EXPECT_TRUE(ray_cast({&pm, 1}, Vec3(-2, 0.4, 0), Vec3::UnitX()));
}

namespace {

struct MeshSet {
  std::vector<TriMesh> meshes;
  std::vector<PosedMesh> posed;
};

MeshSet clutter_meshes() {
  MeshSet s;
  s.meshes.push_back(tessellate(box(0, 0.1, 0.2, 0.1, Vec3::Zero()), 16));
  s.meshes.push_back(tessellate(cylinder(1, 0.05, 0.2, Vec3::Zero()), 24));
  s.meshes.push_back(tessellate(sphere(2, 0.07, Vec3::Zero()), 24));
  s.posed = {{&s.meshes[0], {Rotation3::from_rpy(0.1, 0.2, 0.3), Vec3(0.1, 0, 0)}},
             {&s.meshes[1], {Rotation3::from_rpy(0.5, 0, 0), Vec3(-0.1, 0.05, 0)}},
             {&s.meshes[2], {Rotation3::identity(), Vec3(0, -0.12, 0.02)}}};
  return s;
}

std::optional<RayHit> brute_force(const MeshSet& s, const Vec3& o, const Vec3& d) {
  std::optional<RayHit> best;
  for (std::size_t k = 0; k < s.posed.size(); ++k) {
    const TriMesh& m = *s.posed[k].mesh;
    for (std::size_t f = 0; f < m.triangles.size(); ++f) {
      const auto& t = m.triangles[f];
      const Vec3 a = s.posed[k].pose * m.vertices[t[0]];
      const Vec3 b = s.posed[k].pose * m.vertices[t[1]];
      const Vec3 c = s.posed[k].pose * m.vertices[t[2]];
      const auto hit = intersect_triangle(o, d, a, b - a, c - a);
      if (!hit || *hit <= 1e-6) continue;
      if (!best || *hit < best->distance) best = RayHit{*hit, int(k), int(f), Vec3::Zero()};
    }
  }
  return best;
}

}  // namespace

TEST(RayCast, MatchesExhaustiveTriangleSearch) {
  const MeshSet s = clutter_meshes();
  const RayCaster caster(s.posed);
  Rng rng(17);
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 origin(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4));
    const Vec3 aim(rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), rng.uniform(-0.1, 0.1));
    const Vec3 dir = (aim - origin).normalized();
    const auto expect = brute_force(s, origin, dir);
    const auto got = caster.cast(origin, dir);
    ASSERT_EQ(bool(expect), bool(got)) << "ray " << i;
    if (!expect) continue;
    ++hits;
    EXPECT_EQ(got->object_index, expect->object_index) << "ray " << i;
    EXPECT_EQ(got->face_index, expect->face_index) << "ray " << i;
    EXPECT_EQ(got->distance, expect->distance) << "ray " << i;
  }
  EXPECT_GT(hits, 300);
}

TEST(RayCast, InvariantUnderJointRigidMotion) {
  MeshSet s = clutter_meshes();
  const RayCaster before(s.posed);
  const Pose3 motion{Rotation3::from_rpy(0.7, -0.3, 1.9), Vec3(0.3, -1.2, 0.5)};
  MeshSet moved = clutter_meshes();
  for (auto& pm : moved.posed) pm.pose = motion * pm.pose;
  const RayCaster after(moved.posed);
  Rng rng(23);
  for (int i = 0; i < 300; ++i) {
    const Vec3 origin(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), 0.5);
    const Vec3 dir = (Vec3(rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), 0) - origin).normalized();
    const auto a = before.cast(origin, dir);
    const auto b = after.cast(motion * origin, motion.transform_direction(dir));
    ASSERT_EQ(bool(a), bool(b));
    if (!a) continue;
    EXPECT_EQ(a->object_index, b->object_index);
    EXPECT_NEAR(a->distance, b->distance, 1e-9);
  }
}

TEST(Tessellate, BoxHasTwelveTrianglesAndExactArea) {
  const TriMesh m = tessellate(box(0, 0.1, 0.2, 0.3, Vec3::Zero()), 32);
  EXPECT_EQ(m.triangles.size(), 12u);
  EXPECT_NEAR(m.surface_area(), 2 * (0.1 * 0.2 + 0.2 * 0.3 + 0.1 * 0.3), 1e-14);
  EXPECT_NEAR(m.signed_volume(), 0.006, 1e-14);
}

TEST(Tessellate, UnitSphereAreaWithinOnePercent) {
  const TriMesh m = tessellate(sphere(0, 1.0, Vec3::Zero()), 64);
  EXPECT_NEAR(m.surface_area(), 4 * std::numbers::pi, 0.01 * 4 * std::numbers::pi);
}

TEST(Tessellate, CylinderVolumeWithinTwoPercent) {
  const double r = 0.03, h = 0.1;
  const TriMesh m = tessellate(cylinder(0, r, h, Vec3::Zero()), 32);
  const double v = std::numbers::pi * r * r * h;
  EXPECT_NEAR(m.signed_volume(), v, 0.02 * v);
  const double area = 2 * std::numbers::pi * r * (r + h);
  EXPECT_NEAR(m.surface_area(), area, 0.02 * area);
}

TEST(Tessellate, WatertightAndValidOverGrid) {
  const std::vector<SceneObject> shapes{box(0, 0.05, 0.02, 0.1, Vec3::Zero()), cylinder(1, 0.02, 0.07, Vec3::Zero()),
                                        cylinder(2, 0.2, 0.01, Vec3::Zero()), sphere(3, 0.04, Vec3::Zero())};
  for (const auto& obj : shapes) {
    for (int res : {8, 12, 16, 32, 64}) {
      const TriMesh m = tessellate(obj, res);
      EXPECT_NO_THROW(m.validate());
      EXPECT_GT(m.signed_volume(), 0.0);
      // Every directed edge appears once and is matched by its reverse.
      std::map<std::pair<int, int>, int> edges;
      for (const auto& t : m.triangles)
        for (int k = 0; k < 3; ++k) ++edges[{t[k], t[(k + 1) % 3]}];
      for (const auto& [e, count] : edges) {
        EXPECT_EQ(count, 1);
        EXPECT_EQ(edges.count({e.second, e.first}), 1u) << "open edge at res " << res;
      }
    }
  }
}

TEST(Obb, TriangleOverlapSeparatingAxis) {
  const Obb b{{Rotation3::about_z(0.5), Vec3::Zero()}, Vec3(0.1, 0.1, 0.1)};
  EXPECT_TRUE(triangle_overlaps_obb(Vec3(-1, -1, 0), Vec3(1, -1, 0), Vec3(0, 1, 0), b));
  EXPECT_FALSE(triangle_overlaps_obb(Vec3(-1, -1, 0.2), Vec3(1, -1, 0.2), Vec3(0, 1, 0.2), b));
  // Inside the rotated box's AABB but clear of the box itself.
  EXPECT_FALSE(triangle_overlaps_obb(Vec3(0.13, 0.13, -1), Vec3(0.13, 0.13, 1), Vec3(0.5, 0.5, 0), b));
}
