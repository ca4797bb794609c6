#include "grasppf/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "grasppf/errors.hpp"

namespace grasppf {
namespace {

using nlohmann::json;

constexpr double kMinDimension = 1e-4;

double require_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  if (!j[key].is_number()) throw ParseError(where + ": field '" + key + "' is not a number");
  return j[key].get<double>();
}

Vec3 require_vec3(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  const json& a = j[key];
  if (!a.is_array() || a.size() != 3) throw ParseError(where + ": field '" + key + "' must be a 3-array");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!a[i].is_number()) throw ParseError(where + ": field '" + key + "' has a non-number entry");
    out[i] = a[i].get<double>();
  }
  return out;
}

Placement parse_placement(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": pose must be an object");
  return {require_vec3(j, "xyz", where + ".pose"), require_vec3(j, "rpy", where + ".pose")};
}

Shape parse_shape(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw ParseError(where + ": shape needs a string 'type'");
  }
  const std::string type = j["type"].get<std::string>();
  const std::string at = where + ".shape";
  if (type == "box") return BoxShape{require_number(j, "w", at), require_number(j, "d", at), require_number(j, "h", at)};
  if (type == "cylinder") return CylinderShape{require_number(j, "r", at), require_number(j, "h", at)};
  if (type == "sphere") return SphereShape{require_number(j, "r", at)};
  throw ParseError(at + ": unknown shape type '" + type + "'");
}

json placement_json(const Placement& p) {
  return {{"xyz", {p.xyz.x(), p.xyz.y(), p.xyz.z()}}, {"rpy", {p.rpy.x(), p.rpy.y(), p.rpy.z()}}};
}

json shape_json(const Shape& shape) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BoxShape>) return {{"type", "box"}, {"w", s.w}, {"d", s.d}, {"h", s.h}};
        if constexpr (std::is_same_v<T, CylinderShape>) return {{"type", "cylinder"}, {"r", s.r}, {"h", s.h}};
        if constexpr (std::is_same_v<T, SphereShape>) return {{"type", "sphere"}, {"r", s.r}};
      },
      shape);
}

// Parse errors from nlohmann carry a byte offset; translate it to a line.
std::string locate(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(end), '\n');
  return "line " + std::to_string(line);
}

}  // namespace

double SceneObject::lowest_point() const {
  const Pose3 p = pose();
  const Mat3& r = p.rotation.matrix();
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BoxShape>) {
          const Vec3 half(s.w / 2, s.d / 2, s.h / 2);
          return p.translation.z() - r.row(2).cwiseAbs().dot(half);
        } else if constexpr (std::is_same_v<T, CylinderShape>) {
          const double axial = std::abs(r(2, 2));
          const double radial = std::sqrt(std::max(0.0, 1.0 - axial * axial));
          return p.translation.z() - (s.h / 2 * axial + s.r * radial);
        } else {
          return p.translation.z() - s.r;
        }
      },
      shape);
}

bool SceneObject::contains(const Vec3& world) const {
  const Vec3 q = pose().inverse() * world;
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BoxShape>) {
          return std::abs(q.x()) <= s.w / 2 && std::abs(q.y()) <= s.d / 2 && std::abs(q.z()) <= s.h / 2;
        } else if constexpr (std::is_same_v<T, CylinderShape>) {
          return std::abs(q.z()) <= s.h / 2 && q.head<2>().norm() <= s.r;
        } else {
          return q.norm() <= s.r;
        }
      },
      shape);
}

const SceneObject* Scene::find(int id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

void Scene::validate() const {
  std::set<int> ids;
  for (const auto& o : objects) {
    const std::string name = "object " + std::to_string(o.id);
    if (!ids.insert(o.id).second) throw InvariantError(name + ": ids must be unique within a scene");
    if (o.id < 0) throw InvariantError(name + ": ids must be non-negative");
    if (!(o.friction_mu > 0.0 && o.friction_mu <= 2.0)) throw InvariantError(name + ": friction mu must lie in (0, 2]");
    const bool dims_ok = std::visit(
        [](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, BoxShape>) return s.w > kMinDimension && s.d > kMinDimension && s.h > kMinDimension;
          if constexpr (std::is_same_v<T, CylinderShape>) return s.r > kMinDimension && s.h > kMinDimension;
          if constexpr (std::is_same_v<T, SphereShape>) return s.r > kMinDimension;
        },
        o.shape);
    if (!dims_ok) throw InvariantError(name + ": dimensions must exceed 1e-4 m");
    if (o.lowest_point() < table_height - 1e-6) throw InvariantError(name + ": lowest point is below the table");
  }
}

Vec3 Scene::centroid() const {
  if (objects.empty()) return {0.0, 0.0, table_height};
  Vec3 sum = Vec3::Zero();
  for (const auto& o : objects) sum += o.placement.xyz;
  return sum / static_cast<double>(objects.size());
}

SceneDescription load_scene(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(locate(text, e.byte) + ": " + e.what());
  }
  if (!root.is_object()) throw ParseError("scene: top level must be an object");

  SceneDescription out;
  out.scene.table_height = require_number(root, "table_height", "scene");
  if (!root.contains("objects") || !root["objects"].is_array()) throw ParseError("scene: 'objects' must be an array");
  for (std::size_t i = 0; i < root["objects"].size(); ++i) {
    const json& jo = root["objects"][i];
    const std::string where = "objects[" + std::to_string(i) + "]";
    if (!jo.is_object()) throw ParseError(where + ": must be an object");
    if (!jo.contains("id") || !jo["id"].is_number_integer()) throw ParseError(where + ": 'id' must be an integer");
    SceneObject obj;
    obj.id = jo["id"].get<int>();
    if (!jo.contains("shape")) throw ParseError(where + ": missing field 'shape'");
    obj.shape = parse_shape(jo["shape"], where);
    if (!jo.contains("pose")) throw ParseError(where + ": missing field 'pose'");
    obj.placement = parse_placement(jo["pose"], where);
    obj.friction_mu = require_number(jo, "mu", where);
    out.scene.objects.push_back(obj);
  }
  out.scene.validate();

  if (root.contains("events")) {
    if (!root["events"].is_array()) throw ParseError("scene: 'events' must be an array");
    for (std::size_t i = 0; i < root["events"].size(); ++i) {
      const json& je = root["events"][i];
      const std::string where = "events[" + std::to_string(i) + "]";
      if (!je.is_object()) throw ParseError(where + ": must be an object");
      if (!je.contains("t") || !je["t"].is_number_integer()) throw ParseError(where + ": 't' must be an integer");
      if (!je.contains("id") || !je["id"].is_number_integer()) throw ParseError(where + ": 'id' must be an integer");
      if (!je.contains("action") || !je["action"].is_string()) throw ParseError(where + ": 'action' must be a string");
      SceneEvent ev;
      ev.time_step = je["t"].get<int>();
      ev.object_id = je["id"].get<int>();
      const std::string action = je["action"].get<std::string>();
      if (ev.time_step < 0) throw InvariantError(where + ": time step must be >= 0");
      if (action == "move") {
        if (!je.contains("pose")) throw ParseError(where + ": move needs a 'pose'");
        ev.new_placement = parse_placement(je["pose"], where);
      } else if (action != "remove") {
        throw ParseError(where + ": unknown action '" + action + "'");
      }
      out.events.push_back(ev);
    }
    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const SceneEvent& a, const SceneEvent& b) { return a.time_step < b.time_step; });
    // Replaying validates that every event names an object alive at its time.
    Scene replay = out.scene;
    for (const auto& ev : out.events) {
      try {
        replay = apply_event(replay, ev);
      } catch (const UnknownObject& e) {
        throw InvariantError("event at t=" + std::to_string(ev.time_step) + ": " + e.what());
      }
    }
  }
  return out;
}

SceneDescription load_scene_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scene file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scene(buf.str());
}

std::string save_scene(const SceneDescription& description) {
  json root;
  root["table_height"] = description.scene.table_height;
  root["objects"] = json::array();
  for (const auto& o : description.scene.objects) {
    root["objects"].push_back(
        {{"id", o.id}, {"shape", shape_json(o.shape)}, {"pose", placement_json(o.placement)}, {"mu", o.friction_mu}});
  }
  root["events"] = json::array();
  for (const auto& e : description.events) {
    json je = {{"t", e.time_step}, {"id", e.object_id}, {"action", e.new_placement ? "move" : "remove"}};
    if (e.new_placement) je["pose"] = placement_json(*e.new_placement);
    root["events"].push_back(je);
  }
  return root.dump(2) + "\n";
}

TriMesh tessellate(const SceneObject& object, int resolution) {
  if (resolution < 8) throw InvariantError("tessellation resolution must be >= 8");
  TriMesh mesh;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BoxShape>) {
          const Vec3 h(s.w / 2, s.d / 2, s.h / 2);
          for (int i = 0; i < 8; ++i) {
            mesh.vertices.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
          }
          // Outward winding, two triangles per face.
          mesh.triangles = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
                            {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
        } else if constexpr (std::is_same_v<T, CylinderShape>) {
          const int n = resolution;
          for (int k = 0; k < n; ++k) {
            const double a = 2.0 * std::numbers::pi * k / n;
            mesh.vertices.emplace_back(s.r * std::cos(a), s.r * std::sin(a), -s.h / 2);
          }
          for (int k = 0; k < n; ++k) {
            const double a = 2.0 * std::numbers::pi * k / n;
            mesh.vertices.emplace_back(s.r * std::cos(a), s.r * std::sin(a), s.h / 2);
          }
          const int bottom = static_cast<int>(mesh.vertices.size());
          mesh.vertices.emplace_back(0.0, 0.0, -s.h / 2);
          const int top = bottom + 1;
          mesh.vertices.emplace_back(0.0, 0.0, s.h / 2);
          for (int k = 0; k < n; ++k) {
            const int k1 = (k + 1) % n;
            mesh.triangles.push_back({k, k1, n + k1});
            mesh.triangles.push_back({k, n + k1, n + k});
            mesh.triangles.push_back({bottom, k1, k});
            mesh.triangles.push_back({top, n + k, n + k1});
          }
        } else {
          // UV sphere with poles on local z; pole vertices head each fan triangle.
          const int n = resolution;
          const int rings = std::max(4, resolution / 2);
          mesh.vertices.emplace_back(0.0, 0.0, s.r);
          for (int i = 1; i < rings; ++i) {
            const double theta = std::numbers::pi * i / rings;
            for (int k = 0; k < n; ++k) {
              const double phi = 2.0 * std::numbers::pi * k / n;
              mesh.vertices.emplace_back(s.r * std::sin(theta) * std::cos(phi), s.r * std::sin(theta) * std::sin(phi),
                                         s.r * std::cos(theta));
            }
          }
          const int south = static_cast<int>(mesh.vertices.size());
          mesh.vertices.emplace_back(0.0, 0.0, -s.r);
          auto ring = [n](int i, int k) { return 1 + (i - 1) * n + (k % n); };
          for (int k = 0; k < n; ++k) mesh.triangles.push_back({0, ring(1, k), ring(1, k + 1)});
          for (int i = 1; i < rings - 1; ++i) {
            for (int k = 0; k < n; ++k) {
              mesh.triangles.push_back({ring(i, k), ring(i + 1, k), ring(i + 1, k + 1)});
              mesh.triangles.push_back({ring(i, k), ring(i + 1, k + 1), ring(i, k + 1)});
            }
          }
          for (int k = 0; k < n; ++k) mesh.triangles.push_back({south, ring(rings - 1, k + 1), ring(rings - 1, k)});
        }
      },
      object.shape);
  return mesh;
}

Scene apply_event(const Scene& scene, const SceneEvent& event) {
  Scene out = scene;
  auto it = std::find_if(out.objects.begin(), out.objects.end(),
                         [&](const SceneObject& o) { return o.id == event.object_id; });
  if (it == out.objects.end()) throw UnknownObject(event.object_id);
  if (event.new_placement) {
    it->placement = *event.new_placement;
  } else {
    out.objects.erase(it);
  }
  return out;
}

}  // namespace grasppf
