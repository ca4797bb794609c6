#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "grasppf/geom.hpp"

namespace grasppf {

struct BoxShape {
  double w = 0.0;  // extent along local x
  double d = 0.0;  // along local y
  double h = 0.0;  // along local z
};

/// Axis along local z, centered at the origin.
struct CylinderShape {
  double r = 0.0;
  double h = 0.0;
};

struct SphereShape {
  double r = 0.0;
};

using Shape = std::variant<BoxShape, CylinderShape, SphereShape>;

/// Position plus roll/pitch/yaw, the form poses take in scene files. Keeping
/// the file form makes save/load exact.
struct Placement {
  Vec3 xyz = Vec3::Zero();
  Vec3 rpy = Vec3::Zero();

  Pose3 pose() const { return {Rotation3::from_rpy(rpy.x(), rpy.y(), rpy.z()), xyz}; }
  bool operator==(const Placement&) const = default;
};

struct SceneObject {
  int id = 0;
  Shape shape;
  Placement placement;
  double friction_mu = 0.5;

  Pose3 pose() const { return placement.pose(); }
  /// Lowest world z reached by the solid.
  double lowest_point() const;
  /// Analytic solid containment in world coordinates.
  bool contains(const Vec3& p) const;
};

struct Scene {
  double table_height = 0.0;
  std::vector<SceneObject> objects;

  const SceneObject* find(int id) const;
  /// Throws InvariantError naming the violated invariant.
  void validate() const;
  /// Mean of object positions, or the origin at table height for an empty scene.
  Vec3 centroid() const;
};

struct SceneEvent {
  int time_step = 0;
  int object_id = 0;
  std::optional<Placement> new_placement;  // empty means remove
};

/// Contents of a scene file.
struct SceneDescription {
  Scene scene;
  std::vector<SceneEvent> events;
};

SceneDescription load_scene(std::string_view text);
SceneDescription load_scene_file(const std::string& path);
std::string save_scene(const SceneDescription& description);

/// Faces per full turn for curved shapes; boxes always give 12 triangles.
TriMesh tessellate(const SceneObject& object, int resolution);

/// Returns a new scene; `scene` is untouched. Throws UnknownObject.
Scene apply_event(const Scene& scene, const SceneEvent& event);

}  // namespace grasppf
