#include "grasppf/world.hpp"

namespace grasppf {

World::World(Scene scene, int time_step, int resolution) : time_step_(time_step) {
  auto geometry = std::make_shared<Geometry>();
  geometry->scene = std::move(scene);
  std::vector<PosedMesh> posed;
  geometry->meshes.reserve(geometry->scene.objects.size());
  for (const auto& obj : geometry->scene.objects) geometry->meshes.push_back(tessellate(obj, resolution));
  for (std::size_t i = 0; i < geometry->meshes.size(); ++i) {
    posed.push_back({&geometry->meshes[i], geometry->scene.objects[i].pose()});
  }
  geometry->caster = RayCaster(posed);
  geometry_ = std::move(geometry);
}

World World::at_step(int time_step) const {
  World out = *this;
  out.time_step_ = time_step;
  return out;
}

std::optional<SceneHit> World::cast(const Vec3& origin, const Vec3& direction, double tmax) const {
  const auto hit = geometry_->caster.cast(origin, direction, tmax);
  if (!hit) return std::nullopt;
  return SceneHit{hit->distance, hit->object_index, geometry_->scene.objects[hit->object_index].id, hit->normal};
}

bool World::box_hits_objects(const Obb& box) const {
  if (geometry_->caster.overlaps(box)) return true;
  // No surface crossing; the box is either clear or wholly inside a solid.
  const Aabb bounds = box.bounds();
  for (std::size_t i = 0; i < geometry_->scene.objects.size(); ++i) {
    if (!geometry_->caster.object_bounds(static_cast<int>(i)).overlaps(bounds)) continue;
    if (geometry_->scene.objects[i].contains(box.frame.translation)) return true;
  }
  return false;
}

}  // namespace grasppf
