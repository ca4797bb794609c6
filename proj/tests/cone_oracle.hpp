#pragma once
// Brute-force friction cone check: the cone is replaced by the polyhedral
// cone spanned by N generator directions on its boundary, and a direction is
// inside when it lies on the inner side of every facet. Independent of the
// angle formula used by the library.

#include <cmath>
#include <numbers>

#include "grasppf/quality.hpp"

namespace grasppf::test {

inline bool polyhedral_cone_contains(const Vec3& axis, double mu, const Vec3& dir, int generators = 10000) {
  const Vec3 n = axis.normalized();
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 a = n.cross(helper).normalized();
  const Vec3 b = n.cross(a);
  auto gen = [&](int i) {
    const double th = 2.0 * std::numbers::pi * i / generators;
    return Vec3(n + mu * (std::cos(th) * a + std::sin(th) * b));
  };
  Vec3 prev = gen(0);
  for (int i = 1; i <= generators; ++i) {
    const Vec3 next = gen(i % generators);
    if (dir.dot(prev.cross(next)) < 0.0) return false;
    prev = next;
  }
  return true;
}

inline int oracle_level(const ContactPair& c) {
  if (c.first.object_index != c.second.object_index) return 0;
  const Vec3 line = c.second.point - c.first.point;
  if (line.norm() < 1e-9) return 0;
  for (int level = 3; level >= 1; --level) {
    const double mu = kLevelFriction[level - 1];
    if (polyhedral_cone_contains(-c.first.normal, mu, line) && polyhedral_cone_contains(-c.second.normal, mu, -line))
      return level;
  }
  return 0;
}

// Smallest distance, in radians, between either contact's line angle and any
// of the three friction cone surfaces.
inline double cone_margin(const ContactPair& c) {
  const auto angles = contact_cone_angles(c);
  double m = 1e9;
  for (double a : angles)
    for (double mu : kLevelFriction) m = std::min(m, std::abs(a - std::atan(mu)));
  return m;
}

}  // namespace grasppf::test
