#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grasppf/geom.hpp"
#include "grasppf/world.hpp"

namespace grasppf {

/// Pinhole intrinsics. Pixel (u, v) = (column, row); pixel centers sit on
/// integer coordinates.
struct Intrinsics {
  double fx = 120.0;
  double fy = 120.0;
  double cx = 64.0;
  double cy = 64.0;
  int width = 128;
  int height = 128;

  /// Throws InvariantError.
  void validate() const;
};

template <class T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width_ + u; }

  T& at(int u, int v) { return data_[index(u, v)]; }
  const T& at(int u, int v) const { return data_[index(u, v)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

constexpr int kBackgroundId = -1;
constexpr int kTableId = -2;
/// Radius around the world origin beyond which the table plane ends.
constexpr double kTableRadius = 2.0;

struct Pixel {
  int u = 0;
  int v = 0;
  bool operator==(const Pixel&) const = default;
};

/// One observation z_t: camera pose, intrinsics, z-depth (0 = miss) and object ids.
struct Observation {
  Pose3 cam_pose;  // camera to world; camera z is the optical axis
  Intrinsics intrinsics;
  Image<double> depth;
  Image<int> object_id;
  int time_step = 0;
};

struct RenderOptions {
  double depth_noise_sigma = 0.0;  // i.i.d. Gaussian on hit pixels, meters
  std::uint64_t noise_seed = 0;
  int jobs = 1;
};

Observation render(const World& world, const Pose3& cam_pose, const Intrinsics& intr,
                   const RenderOptions& options = {});

/// Throws MissPixel when the depth is zero or the pixel is outside the image.
Vec3 back_project(const Observation& obs, Pixel pixel);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;  // camera-frame depth

  Pixel nearest() const;
};

/// nullopt when the point is behind the camera (camera z <= 1e-6).
std::optional<Projection> project(const Observation& obs, const Vec3& point_world);

/// Image rotated by -alpha about the principal point, nearest-neighbor.
struct RotatedView {
  double alpha = 0.0;
  Image<double> depth;
  Image<int> pixel_map;  // linear source index, -1 when out of bounds
};

RotatedView rotate_view(const Observation& obs, double alpha);
/// Source pixel that rotated pixel (u, v) reads from, before bounds checking.
Pixel rotated_source(const Intrinsics& intr, double alpha, int u, int v);

/// Looking straight down at `target` from `height` above it.
Pose3 look_down_pose(const Vec3& target, double height);

/// 16-bit binary PGM of depth in millimeters.
void write_depth_pgm(const Image<double>& depth, const std::string& path);
/// 16-bit binary PGM of ids: background 0, table 1, object k -> k + 2.
void write_object_id_pgm(const Image<int>& ids, const std::string& path);
/// 8-bit binary PGM of [0, 1] values scaled to 0..255.
void write_unit_pgm(const Image<double>& values, const std::string& path);

}  // namespace grasppf
