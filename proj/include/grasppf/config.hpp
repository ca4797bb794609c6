#pragma once

#include <optional>
#include <string>
#include <vector>

#include "grasppf/sim.hpp"

namespace grasppf {

/// Everything a CLI invocation needs besides the scene itself.
struct RunConfig {
  EpisodeConfig episode;              // `scene` is filled in by the caller
  std::optional<Pose3> camera;        // explicit render camera
  double camera_height = 0.55;        // otherwise look down from here above the centroid
  std::vector<Mode> bench_modes{Mode::kClosedLoop, Mode::kOpenLoop, Mode::kSamplingOpenLoop, Mode::kTopDown};
};

/// Sets one named parameter. Unknown keys and malformed values raise InvariantError.
void apply_param(RunConfig& cfg, const std::string& key, const std::string& value);
/// Each entry is "key=value".
void apply_params(RunConfig& cfg, const std::vector<std::string>& assignments);
std::vector<std::string> param_keys();

Pose3 render_camera(const RunConfig& cfg, const Scene& scene);

}  // namespace grasppf
