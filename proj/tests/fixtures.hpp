#pragma once
// Small scene builders shared by the unit tests.

#include <memory>
#include <string>
#include <vector>

#include "grasppf/scene.hpp"
#include "grasppf/world.hpp"

namespace grasppf::test {

inline std::string data_path(const std::string& name) { return std::string(GRASPPF_DATA_DIR) + "/" + name; }

inline SceneObject box(int id, double w, double d, double h, Vec3 xyz, Vec3 rpy = Vec3::Zero(), double mu = 0.5) {
  SceneObject o;
  o.id = id;
  o.shape = BoxShape{w, d, h};
  o.placement = {xyz, rpy};
  o.friction_mu = mu;
  return o;
}

inline SceneObject cylinder(int id, double r, double h, Vec3 xyz, Vec3 rpy = Vec3::Zero()) {
  SceneObject o;
  o.id = id;
  o.shape = CylinderShape{r, h};
  o.placement = {xyz, rpy};
  return o;
}

inline SceneObject sphere(int id, double r, Vec3 xyz) {
  SceneObject o;
  o.id = id;
  o.shape = SphereShape{r};
  o.placement = {xyz, Vec3::Zero()};
  return o;
}

inline Scene scene_of(std::vector<SceneObject> objects, double table = 0.0) {
  Scene s;
  s.table_height = table;
  s.objects = std::move(objects);
  return s;
}

// The 4 x 4 x 8 cm box standing on the table at the origin.
inline Scene ideal_box_scene() { return scene_of({box(0, 0.04, 0.04, 0.08, {0, 0, 0.04})}); }

inline std::shared_ptr<const SceneDescription> description(Scene s) {
  auto d = std::make_shared<SceneDescription>();
  d->scene = std::move(s);
  return d;
}

}  // namespace grasppf::test
