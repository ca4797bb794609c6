#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "grasppf/camera.hpp"
#include "grasppf/filter.hpp"
#include "grasppf/reach.hpp"
#include "grasppf/scene.hpp"

namespace grasppf {

enum class Mode { kClosedLoop, kOpenLoop, kSamplingOpenLoop, kSamplingClosedLoop, kTopDown };

const char* mode_name(Mode mode);
/// Accepts "closed_loop"/"cl", "open_loop"/"ol", "sampling_ol", "sampling_cl", "top_down"/"td".
Mode parse_mode(const std::string& name);

struct EpisodeConfig {
  std::shared_ptr<const SceneDescription> scene;
  std::string scene_label;  // for logs and summaries
  double cam_distance_min = 0.45;
  double cam_distance_max = 0.65;
  double approach_speed = 0.02;
  double close_distance = 0.08;
  double pregrasp_offset = 0.10;
  double max_turn = 0.15;  // camera rotation per step, radians
  int max_steps = 200;
  int refine_steps = 10;   // open-loop refinement iterations
  double exec_sigma_p = 0.003;
  double exec_sigma_rot = 0.02;
  double sampling_lambda = 5.0;  // per meter, closed-loop sampling regularizer
  double hysteresis = 0.05;
  double depth_noise_sigma = 0.0;
  // Lateral arm drift, m per sqrt(m) of camera travel (random walk in x, y).
  double drift_sigma = 0.01;
  Mode mode = Mode::kClosedLoop;
  std::uint64_t seed = 0;
  FilterParams filter;
  ReachModel reach;
  Intrinsics intrinsics;

  void validate() const;
};

enum class Outcome { kSuccess, kFailure, kTimeout, kCleared };
const char* outcome_name(Outcome outcome);

struct StepRecord {
  int step = 0;
  Pose3 camera;
  std::optional<GraspConfig> target;
  double target_quality = 0.0;
  double best_quality = 0.0;
  int target_object_id = -1;
  bool reinitialized = false;
  bool switched = false;
  std::vector<std::string> events;
};

struct EpisodeResult {
  Outcome outcome = Outcome::kFailure;
  bool success = false;
  int steps = 0;
  std::optional<GraspConfig> executed;  // target before execution noise
  std::optional<Pose3> executed_pose;   // after execution noise
  int executed_object_id = -1;
  std::vector<StepRecord> trace;
  std::string message;
};

EpisodeResult run_episode(const EpisodeConfig& cfg);

/// Object whose surface the grasp point sits on, or -1.
int grasp_object_id(const World& world, const GraspConfig& g);

void write_trace_jsonl(const EpisodeResult& result, const EpisodeConfig& cfg, std::ostream& out);

struct ModeSummary {
  Mode mode = Mode::kClosedLoop;
  int episodes = 0;
  int successes = 0;
  int timeouts = 0;
  int cleared = 0;
  double rate = 0.0;
  double ci_low = 0.0;   // Wilson 95%
  double ci_high = 0.0;
};

struct EpisodeRecord {
  int index = 0;
  Mode mode = Mode::kClosedLoop;
  std::uint64_t seed = 0;
  std::string scene_label;
  Outcome outcome = Outcome::kFailure;
  int steps = 0;
  int executed_object_id = -1;
  std::string message;
};

struct BenchmarkSummary {
  std::vector<ModeSummary> modes;  // in first-seen order of the suite
  std::vector<EpisodeRecord> episodes;
};

/// Runs every config `repeats` times (seed + repeat index); episodes run on
/// up to `jobs` threads and are merged by index.
BenchmarkSummary run_benchmark(const std::vector<EpisodeConfig>& suite, int repeats, int jobs = 1);

std::pair<double, double> wilson_interval(int successes, int trials, double z = 1.959963984540054);

void write_summary_csv(const BenchmarkSummary& summary, std::ostream& out);
void write_summary_table(const BenchmarkSummary& summary, std::ostream& out);
void write_episodes_jsonl(const BenchmarkSummary& summary, std::ostream& out);

}  // namespace grasppf
