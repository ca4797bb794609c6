#include "grasppf/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "grasppf/errors.hpp"

namespace grasppf {
namespace {

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw InvariantError("param " + key + ": not a number: '" + text + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw InvariantError("param " + key + ": not an integer: '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw InvariantError("param " + key + ": not a boolean: '" + text + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& text, std::size_t n) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_double(key, item));
  if (out.size() != n) throw InvariantError("param " + key + ": expected " + std::to_string(n) + " comma-separated values");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <class Get>
Setter real(Get get) {
  return [get](RunConfig& c, const std::string& k, const std::string& v) { get(c) = to_double(k, v); };
}
template <class Get>
Setter integer(Get get) {
  return [get](RunConfig& c, const std::string& k, const std::string& v) { get(c) = static_cast<int>(to_int(k, v)); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      // filter
      {"num_particles", integer([](RunConfig& c) -> int& { return c.episode.filter.num_particles; })},
      {"sigma_p", real([](RunConfig& c) -> double& { return c.episode.filter.sigma_p; })},
      {"sigma_rot", real([](RunConfig& c) -> double& { return c.episode.filter.sigma_rot; })},
      {"sigma_d", real([](RunConfig& c) -> double& { return c.episode.filter.sigma_d; })},
      {"n_dirs", integer([](RunConfig& c) -> int& { return c.episode.filter.n_dirs; })},
      {"quality_threshold", real([](RunConfig& c) -> double& { return c.episode.filter.quality_threshold; })},
      {"fresh_fraction", real([](RunConfig& c) -> double& { return c.episode.filter.fresh_fraction; })},
      {"beta_bound", real([](RunConfig& c) -> double& { return c.episode.filter.beta_bound; })},
      {"gamma_bound", real([](RunConfig& c) -> double& { return c.episode.filter.gamma_bound; })},
      {"blur_sigma_px", real([](RunConfig& c) -> double& { return c.episode.filter.blur_sigma_px; })},
      {"top_down", [](RunConfig& c, const std::string& k, const std::string& v) { c.episode.filter.top_down = to_bool(k, v); }},
      // gripper
      {"d_min", real([](RunConfig& c) -> double& { return c.episode.filter.gripper.d_min; })},
      {"d_max", real([](RunConfig& c) -> double& { return c.episode.filter.gripper.d_max; })},
      {"finger_stroke", real([](RunConfig& c) -> double& { return c.episode.filter.gripper.finger_stroke; })},
      {"width_bins",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const auto w = to_list(k, v, 2);
         c.episode.filter.gripper.width_bins = {w[0], w[1]};
       }},
      // reach
      {"reach_r_min", real([](RunConfig& c) -> double& { return c.episode.reach.r_min; })},
      {"reach_r_max", real([](RunConfig& c) -> double& { return c.episode.reach.r_max; })},
      {"reach_max_tilt", real([](RunConfig& c) -> double& { return c.episode.reach.max_tilt; })},
      {"reach_min_clearance", real([](RunConfig& c) -> double& { return c.episode.reach.min_clearance; })},
      {"reach_base",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const auto b = to_list(k, v, 3);
         c.episode.reach.base_origin = Vec3(b[0], b[1], b[2]);
       }},
      // episode
      {"cam_distance_min", real([](RunConfig& c) -> double& { return c.episode.cam_distance_min; })},
      {"cam_distance_max", real([](RunConfig& c) -> double& { return c.episode.cam_distance_max; })},
      {"approach_speed", real([](RunConfig& c) -> double& { return c.episode.approach_speed; })},
      {"close_distance", real([](RunConfig& c) -> double& { return c.episode.close_distance; })},
      {"pregrasp_offset", real([](RunConfig& c) -> double& { return c.episode.pregrasp_offset; })},
      {"max_turn", real([](RunConfig& c) -> double& { return c.episode.max_turn; })},
      {"max_steps", integer([](RunConfig& c) -> int& { return c.episode.max_steps; })},
      {"refine_steps", integer([](RunConfig& c) -> int& { return c.episode.refine_steps; })},
      {"exec_sigma_p", real([](RunConfig& c) -> double& { return c.episode.exec_sigma_p; })},
      {"exec_sigma_rot", real([](RunConfig& c) -> double& { return c.episode.exec_sigma_rot; })},
      {"sampling_lambda", real([](RunConfig& c) -> double& { return c.episode.sampling_lambda; })},
      {"hysteresis", real([](RunConfig& c) -> double& { return c.episode.hysteresis; })},
      {"drift_sigma", real([](RunConfig& c) -> double& { return c.episode.drift_sigma; })},
      {"depth_noise_sigma", real([](RunConfig& c) -> double& { return c.episode.depth_noise_sigma; })},
      // camera
      {"fx", real([](RunConfig& c) -> double& { return c.episode.intrinsics.fx; })},
      {"fy", real([](RunConfig& c) -> double& { return c.episode.intrinsics.fy; })},
      {"cx", real([](RunConfig& c) -> double& { return c.episode.intrinsics.cx; })},
      {"cy", real([](RunConfig& c) -> double& { return c.episode.intrinsics.cy; })},
      {"image_width", integer([](RunConfig& c) -> int& { return c.episode.intrinsics.width; })},
      {"image_height", integer([](RunConfig& c) -> int& { return c.episode.intrinsics.height; })},
      {"camera_height", real([](RunConfig& c) -> double& { return c.camera_height; })},
      {"camera",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const auto x = to_list(k, v, 6);
         c.camera = Pose3{Rotation3::from_rpy(x[3], x[4], x[5]), Vec3(x[0], x[1], x[2])};
       }},
      {"bench_modes",
       [](RunConfig& c, const std::string&, const std::string& v) {
         std::vector<Mode> modes;
         std::stringstream in(v);
         std::string item;
         while (std::getline(in, item, ',')) modes.push_back(parse_mode(item));
         c.bench_modes = modes;
       }},
  };
  return table;
}

}  // namespace

void apply_param(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw InvariantError("unknown param '" + key + "'");
  it->second(cfg, key, value);
}

void apply_params(RunConfig& cfg, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw InvariantError("param '" + a + "' is not key=value");
    apply_param(cfg, a.substr(0, eq), a.substr(eq + 1));
  }
}

std::vector<std::string> param_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

Pose3 render_camera(const RunConfig& cfg, const Scene& scene) {
  if (cfg.camera) return *cfg.camera;
  const Vec3 c = scene.centroid();
  return look_down_pose({c.x(), c.y(), scene.table_height}, cfg.camera_height);
}

}  // namespace grasppf
