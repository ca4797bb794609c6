#include "grasppf/quality.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "grasppf/errors.hpp"
#include "grasppf/parallel.hpp"

namespace grasppf {
namespace {

double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

struct PadHit {
  double distance;
  Vec3 point;
  Vec3 normal;
  int object_index;
  bool front_facing;
};

// Sweeps a 5x5 grid on the inner face of one finger along `closing`. The
// contact is the patch of hits within kPadCompliance of the first one, on the
// same object: its centroid, with the normal of the first hit.
constexpr double kPadStandoff = 1e-4;

std::optional<PadHit> sweep_pad(const World& world, const GripperModel& gripper, const Pose3& grasp,
                                double face_x, const Vec3& closing, double reach) {
  struct Sample {
    double distance;
    Vec3 point;
    Vec3 normal;
    int object_index;
  };
  std::vector<Sample> hits;
  hits.reserve(kPadSamples * kPadSamples);
  const double half_depth = gripper.finger.y() / 2;
  const double length = gripper.finger.z();
  for (int iz = 0; iz < kPadSamples; ++iz) {
    for (int iy = 0; iy < kPadSamples; ++iy) {
      const double y = -half_depth + 2.0 * half_depth * iy / (kPadSamples - 1);
      const double z = -length * iz / (kPadSamples - 1);
      // Rays start just behind the pad so a face the pad already touches counts.
      const Vec3 origin = grasp * Vec3(face_x, y, z) - kPadStandoff * closing;
      const auto hit = world.cast(origin, closing, reach + kPadStandoff);
      if (hit) {
        hits.push_back({hit->distance - kPadStandoff, origin + hit->distance * closing, hit->normal, hit->object_index});
      }
    }
  }
  if (hits.empty()) return std::nullopt;
  const Sample& first = *std::min_element(hits.begin(), hits.end(),
                                          [](const Sample& a, const Sample& b) { return a.distance < b.distance; });
  Vec3 point = Vec3::Zero();
  int n = 0;
  for (const auto& h : hits) {
    if (h.object_index != first.object_index || h.distance > first.distance + kPadCompliance) continue;
    point += h.point;
    ++n;
  }
  return PadHit{first.distance, point / n, first.normal, first.object_index, first.normal.dot(closing) < 0.0};
}

}  // namespace

void GripperModel::validate() const {
  if (!(width_bins[0] > 0.0 && width_bins[0] < width_bins[1])) {
    throw InvariantError("gripper: width bins must be positive and strictly increasing");
  }
  if (!((finger.array() > 0.0).all() && (palm.array() > 0.0).all() && finger_stroke > 0.0)) {
    throw InvariantError("gripper: dimensions must be positive");
  }
  if (!(d_min < d_max)) throw InvariantError("gripper: d_min must be below d_max");
}

std::array<Obb, 3> GripperModel::boxes(const Pose3& grasp, int w_bin) const {
  const double w = width_bins.at(w_bin);
  const Vec3 finger_half = finger / 2;
  auto placed = [&](const Vec3& center, const Vec3& half) {
    return Obb{Pose3{grasp.rotation, grasp * center}, half};
  };
  return {placed(Vec3(w / 2 + finger_half.x(), 0.0, -finger_half.z()), finger_half),
          placed(Vec3(-w / 2 - finger_half.x(), 0.0, -finger_half.z()), finger_half),
          placed(Vec3(0.0, 0.0, -finger.z() - palm.z() / 2), palm / 2)};
}

Pose3 grasp_pose(const GraspConfig& g) {
  return {g.r, g.p + g.d * g.r.column(2)};
}

Rotation3 grasp_rotation(const Pose3& cam_pose, const EulerZXY& e) {
  return cam_pose.rotation * euler_zxy_compose(e);
}

bool collision_free(const World& world, const GripperModel& gripper, const Pose3& grasp, int w_bin) {
  const auto boxes = gripper.boxes(grasp, w_bin);
  const double table = world.table_height();
  for (const Obb& box : boxes) {
    for (const Vec3& c : box.corners()) {
      if (c.z() < table) return false;
    }
  }
  for (const Obb& box : boxes) {
    if (world.box_hits_objects(box)) return false;
  }
  return true;
}

std::optional<ContactPair> find_contacts(const World& world, const GripperModel& gripper, const Pose3& grasp,
                                         int w_bin) {
  const double w = gripper.width_bins.at(w_bin);
  const double reach = std::min(gripper.finger_stroke, w);
  const Vec3 x_axis = grasp.rotation.column(0);
  const auto first = sweep_pad(world, gripper, grasp, w / 2, -x_axis, reach);
  if (!first || !first->front_facing) return std::nullopt;
  const auto second = sweep_pad(world, gripper, grasp, -w / 2, x_axis, reach);
  if (!second || !second->front_facing) return std::nullopt;
  return ContactPair{{first->point, first->normal, first->object_index},
                     {second->point, second->normal, second->object_index}};
}

std::array<double, 2> contact_cone_angles(const ContactPair& c) {
  const Vec3 line = c.second.point - c.first.point;
  if (line.norm() < 1e-9) return {std::numbers::pi, std::numbers::pi};
  return {angle_between(-c.first.normal, line), angle_between(-c.second.normal, -line)};
}

int antipodal_level(const ContactPair& contacts) {
  if (contacts.first.object_index != contacts.second.object_index) return 0;
  const auto angles = contact_cone_angles(contacts);
  const double worst = std::max(angles[0], angles[1]);
  for (int level = 3; level >= 1; --level) {
    if (worst <= std::atan(kLevelFriction[level - 1])) return level;
  }
  return 0;
}

int force_closure_level(const World& world, const GripperModel& gripper, const Pose3& grasp, int w_bin) {
  const auto contacts = find_contacts(world, gripper, grasp, w_bin);
  return contacts ? antipodal_level(*contacts) : 0;
}

double success_probability(double q_v, double q_mc, double q_mo) { return q_v * q_mc * q_mo; }

GraspChannels grasp_channels(const World& world, const GripperModel& gripper, const Pose3& grasp, bool on_obj) {
  GraspChannels ch{};
  ch[kObjectMask] = on_obj ? 1.0 : 0.0;
  ch[kFreeNarrow] = collision_free(world, gripper, grasp, 0) ? 1.0 : 0.0;
  ch[kFreeWide] = collision_free(world, gripper, grasp, 1) ? 1.0 : 0.0;
  const int bin = ch[kFreeNarrow] > 0.0 ? 0 : ch[kFreeWide] > 0.0 ? 1 : -1;
  if (bin >= 0) {
    const int level = force_closure_level(world, gripper, grasp, bin);
    for (int k = 1; k <= 3; ++k) ch[kLevel1 + k - 1] = level >= k ? 1.0 : 0.0;
  }
  return ch;
}

QualityValue channels_quality(const GraspChannels& ch) {
  const double mean_level = (ch[kLevel1] + ch[kLevel2] + ch[kLevel3]) / 3.0;
  return {{success_probability(mean_level, ch[kFreeNarrow], ch[kObjectMask]),
           success_probability(mean_level, ch[kFreeWide], ch[kObjectMask])}};
}

QualityMaps directional_quality_maps(const Observation& obs, const World& world, const EulerZXY& e, double d,
                                     const GripperModel& gripper, int jobs) {
  if (obs.time_step != world.time_step()) {
    throw FrameMismatch("observation is from step " + std::to_string(obs.time_step) + ", scene snapshot from step " +
                        std::to_string(world.time_step()));
  }
  QualityMaps maps;
  maps.euler = e;
  maps.d = d;
  maps.view = rotate_view(obs, e.alpha);
  const int width = obs.intrinsics.width, height = obs.intrinsics.height;
  for (auto& c : maps.channel) c = Image<double>(width, height, 0.0);

  const Rotation3 r = grasp_rotation(obs.cam_pose, e);
  parallel_for(static_cast<std::size_t>(height), jobs, [&](std::size_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < width; ++u) {
      const int src = maps.view.pixel_map.at(u, v);
      if (src < 0 || !(maps.view.depth.at(u, v) > 0.0)) continue;
      const Pixel sp{src % width, src / width};
      const GraspConfig g{back_project(obs, sp), r, d, 0};
      const GraspChannels ch = grasp_channels(world, gripper, grasp_pose(g), obs.object_id[src] >= 0);
      for (int k = 0; k < kChannels; ++k) maps.channel[k].at(u, v) = ch[k];
    }
  });
  return maps;
}

std::optional<GraspConfig> grasp_at(const QualityMaps& maps, const Observation& obs, Pixel rotated, int w_bin) {
  if (!maps.view.pixel_map.contains(rotated.u, rotated.v)) return std::nullopt;
  const int src = maps.view.pixel_map.at(rotated.u, rotated.v);
  if (src < 0 || !(obs.depth[src] > 0.0)) return std::nullopt;
  const int width = obs.intrinsics.width;
  return GraspConfig{back_project(obs, {src % width, src / width}), grasp_rotation(obs.cam_pose, maps.euler), maps.d,
                     w_bin};
}

Image<double> gaussian_blur(const Image<double>& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (double& k : kernel) k /= total;

  const int w = img.width(), h = img.height();
  Image<double> tmp(w, h), out(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * img.at(std::clamp(u + i, 0, w - 1), v);
      tmp.at(u, v) = acc;
    }
  }
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.at(u, std::clamp(v + i, 0, h - 1));
      out.at(u, v) = acc;
    }
  }
  return out;
}

std::array<Image<double>, 2> continuous_quality(const QualityMaps& maps, double blur_sigma_px) {
  const int w = maps.channel[0].width(), h = maps.channel[0].height();
  std::array<Image<double>, 2> out;
  for (int bin = 0; bin < 2; ++bin) {
    Image<double> raw(w, h, 0.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      GraspChannels ch;
      for (int k = 0; k < kChannels; ++k) ch[k] = maps.channel[k][i];
      raw[i] = channels_quality(ch).q[bin];
    }
    out[bin] = gaussian_blur(raw, blur_sigma_px);
    for (std::size_t i = 0; i < out[bin].size(); ++i) out[bin][i] = std::clamp(out[bin][i], 0.0, 1.0);
  }
  return out;
}

bool on_object(const Observation& obs, const Vec3& p) {
  const auto proj = project(obs, p);
  if (!proj) return false;
  const Pixel px = proj->nearest();
  if (!obs.object_id.contains(px.u, px.v)) return false;
  return obs.object_id.at(px.u, px.v) >= 0;
}

QualityValue evaluate_grasp(const World& world, const Observation& obs, const GraspConfig& g,
                            const GripperModel& gripper) {
  return channels_quality(grasp_channels(world, gripper, grasp_pose(g), on_object(obs, g.p)));
}

}  // namespace grasppf
