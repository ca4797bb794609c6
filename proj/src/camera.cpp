#include "grasppf/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "grasppf/errors.hpp"
#include "grasppf/parallel.hpp"

namespace grasppf {
namespace {

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

void write_pgm(const std::string& path, int width, int height, int maxval, const std::vector<std::uint16_t>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "P5\n" << width << " " << height << "\n" << maxval << "\n";
  for (std::uint16_t v : values) {
    if (maxval > 255) {
      const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
      out.write(bytes, 2);
    } else {
      out.put(static_cast<char>(v));
    }
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace

void Intrinsics::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw InvariantError("intrinsics: fx and fy must be positive");
  if (width <= 0 || height <= 0) throw InvariantError("intrinsics: image size must be positive");
  if (!(cx > 0.0 && cx < width)) throw InvariantError("intrinsics: cx must lie inside the image");
  if (!(cy > 0.0 && cy < height)) throw InvariantError("intrinsics: cy must lie inside the image");
}

Observation render(const World& world, const Pose3& cam_pose, const Intrinsics& intr, const RenderOptions& options) {
  intr.validate();
  Observation obs;
  obs.cam_pose = cam_pose;
  obs.intrinsics = intr;
  obs.depth = Image<double>(intr.width, intr.height, 0.0);
  obs.object_id = Image<int>(intr.width, intr.height, kBackgroundId);
  obs.time_step = world.time_step();

  const Vec3 origin = cam_pose.translation;
  const double table = world.table_height();
  parallel_for(static_cast<std::size_t>(intr.height), options.jobs, [&](std::size_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < intr.width; ++u) {
      const Vec3 ray_cam((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
      const double ray_len = ray_cam.norm();
      const Vec3 dir = cam_pose.transform_direction(ray_cam / ray_len);

      double best = std::numeric_limits<double>::infinity();
      int id = kBackgroundId;
      if (dir.z() != 0.0) {
        const double t = (table - origin.z()) / dir.z();
        if (t > 1e-6) {
          const Vec3 p = origin + t * dir;
          if (p.head<2>().norm() <= kTableRadius) {
            best = t;
            id = kTableId;
          }
        }
      }
      if (const auto hit = world.cast(origin, dir, best); hit && hit->distance <= best) {
        best = hit->distance;
        id = hit->object_id;
      }
      if (id != kBackgroundId) {
        obs.depth.at(u, v) = best / ray_len;
        obs.object_id.at(u, v) = id;
      }
    }
  });

  if (options.depth_noise_sigma > 0.0) {
    Rng rng(options.noise_seed);
    for (std::size_t i = 0; i < obs.depth.size(); ++i) {
      if (obs.depth[i] > 0.0) obs.depth[i] = std::max(1e-6, obs.depth[i] + rng.normal(options.depth_noise_sigma));
    }
  }
  return obs;
}

Vec3 back_project(const Observation& obs, Pixel pixel) {
  if (!obs.depth.contains(pixel.u, pixel.v)) throw MissPixel("pixel outside the image");
  const double z = obs.depth.at(pixel.u, pixel.v);
  if (!(z > 0.0)) throw MissPixel("no depth at pixel (" + std::to_string(pixel.u) + ", " + std::to_string(pixel.v) + ")");
  const Intrinsics& k = obs.intrinsics;
  const Vec3 p_cam((pixel.u - k.cx) / k.fx * z, (pixel.v - k.cy) / k.fy * z, z);
  return obs.cam_pose * p_cam;
}

Pixel Projection::nearest() const { return {round_half_up(u), round_half_up(v)}; }

std::optional<Projection> project(const Observation& obs, const Vec3& point_world) {
  const Vec3 p = obs.cam_pose.inverse() * point_world;
  if (p.z() <= 1e-6) return std::nullopt;
  const Intrinsics& k = obs.intrinsics;
  return Projection{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy, p.z()};
}

Pixel rotated_source(const Intrinsics& intr, double alpha, int u, int v) {
  const double c = std::cos(alpha), s = std::sin(alpha);
  const double du = u - intr.cx, dv = v - intr.cy;
  return {round_half_up(intr.cx + c * du - s * dv), round_half_up(intr.cy + s * du + c * dv)};
}

RotatedView rotate_view(const Observation& obs, double alpha) {
  const Intrinsics& k = obs.intrinsics;
  RotatedView view;
  view.alpha = alpha;
  view.depth = Image<double>(k.width, k.height, 0.0);
  view.pixel_map = Image<int>(k.width, k.height, -1);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const Pixel src = rotated_source(k, alpha, u, v);
      if (!obs.depth.contains(src.u, src.v)) continue;
      view.pixel_map.at(u, v) = static_cast<int>(obs.depth.index(src.u, src.v));
      view.depth.at(u, v) = obs.depth.at(src.u, src.v);
    }
  }
  return view;
}

Pose3 look_down_pose(const Vec3& target, double height) {
  Mat3 r;
  r << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  return {Rotation3(r), target + Vec3(0.0, 0.0, height)};
}

void write_depth_pgm(const Image<double>& depth, const std::string& path) {
  std::vector<std::uint16_t> values(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    values[i] = static_cast<std::uint16_t>(std::clamp(std::round(depth[i] * 1000.0), 0.0, 65535.0));
  }
  write_pgm(path, depth.width(), depth.height(), 65535, values);
}

void write_object_id_pgm(const Image<int>& ids, const std::string& path) {
  std::vector<std::uint16_t> values(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    const int mapped = id == kBackgroundId ? 0 : id == kTableId ? 1 : id + 2;
    values[i] = static_cast<std::uint16_t>(std::clamp(mapped, 0, 65535));
  }
  write_pgm(path, ids.width(), ids.height(), 65535, values);
}

void write_unit_pgm(const Image<double>& img, const std::string& path) {
  std::vector<std::uint16_t> values(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    values[i] = static_cast<std::uint16_t>(std::clamp(std::round(img[i] * 255.0), 0.0, 255.0));
  }
  write_pgm(path, img.width(), img.height(), 255, values);
}

}  // namespace grasppf
