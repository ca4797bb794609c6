#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "grasppf/geom.hpp"
#include "grasppf/scene.hpp"

namespace grasppf {

/// First surface hit against scene objects (the table is not included).
struct SceneHit {
  double distance = 0.0;
  int object_index = -1;  // index into Scene::objects
  int object_id = -1;
  Vec3 normal = Vec3::Zero();
};

/// Immutable ground-truth snapshot of a scene: tessellated meshes, ray caster
/// and the time step it belongs to. Copies share the geometry.
class World {
 public:
  static constexpr int kDefaultResolution = 32;

  World() : World(Scene{}) {}
  explicit World(Scene scene, int time_step = 0, int resolution = kDefaultResolution);

  const Scene& scene() const { return geometry_->scene; }
  double table_height() const { return geometry_->scene.table_height; }
  int time_step() const { return time_step_; }
  /// Same geometry stamped with another time step.
  World at_step(int time_step) const;

  const TriMesh& mesh(int object_index) const { return geometry_->meshes.at(object_index); }
  const RayCaster& caster() const { return geometry_->caster; }

  std::optional<SceneHit> cast(const Vec3& origin, const Vec3& direction,
                               double tmax = std::numeric_limits<double>::infinity()) const;
  /// Box intersects an object surface or sits inside an object.
  bool box_hits_objects(const Obb& box) const;

 private:
  struct Geometry {
    Scene scene;
    std::vector<TriMesh> meshes;
    RayCaster caster;
  };
  std::shared_ptr<const Geometry> geometry_;
  int time_step_ = 0;
};

}  // namespace grasppf
