#include "grasppf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "grasppf/errors.hpp"
#include "grasppf/parallel.hpp"

namespace grasppf {
namespace {

using nlohmann::json;

Rotation3 turn_toward(const Rotation3& from, const Rotation3& to, double max_angle) {
  const Eigen::AngleAxisd rel(from.matrix().transpose() * to.matrix());
  if (rel.angle() <= max_angle) return to;
  return from * Rotation3::from_axis_angle(rel.axis() * max_angle);
}

// Target orientation tilted so its approach axis points from the camera at the
// grasp; equals the target orientation once the camera sits on the approach line.
Rotation3 aim_at(const Pose3& camera, const Pose3& goal) {
  const Vec3 to_goal = goal.translation - camera.translation;
  if (to_goal.norm() < 1e-9) return goal.rotation;
  const Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(goal.rotation.column(2), to_goal.normalized());
  return Rotation3(q.toRotationMatrix() * goal.rotation.matrix());
}

json pose_json(const Pose3& pose) {
  const Vec3 rpy = pose.rotation.rpy();
  return {{"xyz", {pose.translation.x(), pose.translation.y(), pose.translation.z()}},
          {"rpy", {rpy.x(), rpy.y(), rpy.z()}}};
}

json grasp_json(const GraspConfig& g) {
  const Vec3 rpy = g.r.rpy();
  return {{"p", {g.p.x(), g.p.y(), g.p.z()}}, {"rpy", {rpy.x(), rpy.y(), rpy.z()}}, {"d", g.d}, {"bin", g.w_bin}};
}

// Ground truth evolving with scripted events, seen from the robot's believed
// frame: the true scene shifted by minus the accumulated base drift. Rendering
// and the oracle both use this view, so the filter's world frame is the one the
// arm thinks it is in.
class EventClock {
 public:
  explicit EventClock(const SceneDescription& description)
      : scene_(description.scene), events_(description.events), world_(scene_, 0) {}

  std::vector<std::string> advance_to(int step) {
    std::vector<std::string> fired;
    while (next_ < events_.size() && events_[next_].time_step <= step) {
      const SceneEvent& ev = events_[next_++];
      scene_ = apply_event(scene_, ev);
      fired.push_back((ev.new_placement ? "move " : "remove ") + std::to_string(ev.object_id));
      dirty_ = true;
    }
    if (dirty_) {
      Scene perceived = scene_;
      for (auto& o : perceived.objects) o.placement.xyz -= drift_;
      world_ = World(std::move(perceived), step);
      dirty_ = false;
    } else {
      world_ = world_.at_step(step);
    }
    return fired;
  }

  void add_drift(const Vec3& delta) {
    if (delta.isZero(0.0)) return;
    drift_ += delta;
    dirty_ = true;
  }

  const World& world() const { return world_; }

 private:
  Scene scene_;
  std::vector<SceneEvent> events_;
  std::size_t next_ = 0;
  Vec3 drift_ = Vec3::Zero();
  bool dirty_ = false;
  World world_;
};

// Lateral base drift accumulated over `distance` of camera travel.
Vec3 drift_increment(double sigma_per_sqrt_m, double distance, Rng& rng) {
  if (sigma_per_sqrt_m <= 0.0 || distance <= 0.0) return Vec3::Zero();
  const double s = sigma_per_sqrt_m * std::sqrt(distance);
  const double dx = rng.normal(s);
  const double dy = rng.normal(s);
  return {dx, dy, 0.0};
}

// One approach-speed increment toward the pre-grasp pose, then along the
// final segment to the grasp. Returns the distance moved.
double advance_camera(Pose3& camera, const Pose3& goal, bool& final_segment, const EpisodeConfig& cfg,
                      bool top_down) {
  const Vec3 start = camera.translation;
  const Vec3 pregrasp = goal.translation - cfg.pregrasp_offset * goal.rotation.column(2);
  if (!final_segment) {
    const Vec3 delta = pregrasp - camera.translation;
    if (delta.norm() <= cfg.approach_speed) {
      camera.translation = pregrasp;
      final_segment = true;
    } else {
      camera.translation += cfg.approach_speed * delta.normalized();
    }
  } else {
    const Vec3 delta = goal.translation - camera.translation;
    camera.translation += std::min(cfg.approach_speed, delta.norm()) * delta.normalized();
  }
  camera.rotation = turn_toward(camera.rotation, aim_at(camera, goal), cfg.max_turn);
  if (top_down) camera.rotation = snap_top_down(camera.rotation);
  return (camera.translation - start).norm();
}

struct Execution {
  bool success = false;
  Pose3 pose;
  int object_id = -1;
};

Execution execute(const World& world, const GraspConfig& target, const EpisodeConfig& cfg, Rng& rng) {
  const Pose3 planned = grasp_pose(target);
  Execution out;
  out.pose.translation = planned.translation + Vec3(rng.normal(cfg.exec_sigma_p), rng.normal(cfg.exec_sigma_p),
                                                    rng.normal(cfg.exec_sigma_p));
  out.pose.rotation = perturb_rotation(planned.rotation, cfg.exec_sigma_rot, rng);
  const GripperModel& gripper = cfg.filter.gripper;
  const bool free = collision_free(world, gripper, out.pose, target.w_bin);
  const auto contacts = find_contacts(world, gripper, out.pose, target.w_bin);
  const int level = contacts ? antipodal_level(*contacts) : 0;
  out.success = free && level >= 1;
  out.object_id = contacts ? world.scene().objects[contacts->first.object_index].id : grasp_object_id(world, target);
  return out;
}

std::uint64_t noise_seed(std::uint64_t seed, int step) { return mix64(seed ^ mix64(static_cast<std::uint64_t>(step) + 17)); }

}  // namespace

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::kClosedLoop: return "closed_loop";
    case Mode::kOpenLoop: return "open_loop";
    case Mode::kSamplingOpenLoop: return "sampling_ol";
    case Mode::kSamplingClosedLoop: return "sampling_cl";
    case Mode::kTopDown: return "top_down";
  }
  return "unknown";
}

Mode parse_mode(const std::string& name) {
  if (name == "closed_loop" || name == "cl") return Mode::kClosedLoop;
  if (name == "open_loop" || name == "ol") return Mode::kOpenLoop;
  if (name == "sampling_ol" || name == "sampling_only" || name == "sampling_only-ol") return Mode::kSamplingOpenLoop;
  if (name == "sampling_cl" || name == "sampling_only-cl") return Mode::kSamplingClosedLoop;
  if (name == "top_down" || name == "td") return Mode::kTopDown;
  throw InvariantError("unknown mode '" + name + "'");
}

const char* outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::kSuccess: return "success";
    case Outcome::kFailure: return "failure";
    case Outcome::kTimeout: return "timeout";
    case Outcome::kCleared: return "cleared";
  }
  return "unknown";
}

void EpisodeConfig::validate() const {
  if (!scene) throw InvariantError("episode: no scene");
  if (!(cam_distance_min > 0.0 && cam_distance_min <= cam_distance_max)) throw InvariantError("episode: bad camera distance range");
  if (!(approach_speed > 0.0 && close_distance > 0.0 && pregrasp_offset > 0.0 && max_turn > 0.0)) {
    throw InvariantError("episode: distances must be positive");
  }
  if (max_steps < 1 || refine_steps < 0) throw InvariantError("episode: step counts out of range");
  if (exec_sigma_p < 0.0 || exec_sigma_rot < 0.0 || depth_noise_sigma < 0.0 || drift_sigma < 0.0) throw InvariantError("episode: negative noise");
  filter.validate();
  reach.validate();
  intrinsics.validate();
}

int grasp_object_id(const World& world, const GraspConfig& g) {
  const Vec3 approach = g.r.column(2);
  const auto hit = world.cast(g.p - 0.02 * approach, approach, 0.04);
  return hit ? hit->object_id : -1;
}

EpisodeResult run_episode(const EpisodeConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  Rng setup = root.split(0);
  Rng filter_rng = root.split(1);
  Rng exec_rng = root.split(2);
  Rng drift_rng = root.split(3);

  FilterParams params = cfg.filter;
  if (cfg.mode == Mode::kTopDown) params.top_down = true;
  ReachModel reach = cfg.reach;
  reach.table_height = cfg.scene->scene.table_height;

  EventClock clock(*cfg.scene);
  const Vec3 centroid = cfg.scene->scene.centroid();
  const double height = setup.uniform(cfg.cam_distance_min, cfg.cam_distance_max);
  Pose3 camera = look_down_pose({centroid.x(), centroid.y(), cfg.scene->scene.table_height}, height);

  EpisodeResult result;
  auto observe = [&](int step) {
    RenderOptions ro;
    ro.depth_noise_sigma = cfg.depth_noise_sigma;
    ro.noise_seed = noise_seed(cfg.seed, step);
    return render(clock.world(), camera, cfg.intrinsics, ro);
  };
  // The last close_distance is covered blind by the scripted closing motion.
  auto finish = [&](const GraspConfig& target, int step, int steps) {
    const double remaining = (grasp_pose(target).translation - camera.translation).norm();
    clock.add_drift(drift_increment(cfg.drift_sigma, remaining, drift_rng));
    clock.advance_to(step);
    const Execution ex = execute(clock.world(), target, cfg, exec_rng);
    result.executed = target;
    result.executed_pose = ex.pose;
    result.executed_object_id = ex.object_id;
    result.success = ex.success;
    result.outcome = ex.success ? Outcome::kSuccess : Outcome::kFailure;
    result.steps = steps;
    return result;
  };

  const bool open_loop = cfg.mode == Mode::kOpenLoop || cfg.mode == Mode::kSamplingOpenLoop;
  if (open_loop) {
    StepRecord rec;
    rec.events = clock.advance_to(0);
    rec.camera = camera;
    const Observation obs = observe(0);
    const FilterContext ctx{obs, clock.world(), reach};
    Belief belief;
    try {
      belief = initial_distribution(ctx, params, filter_rng);
    } catch (const NoCandidates& e) {
      result.outcome = Outcome::kCleared;
      result.message = e.what();
      result.trace.push_back(rec);
      return result;
    }
    const int refinements = cfg.mode == Mode::kOpenLoop ? cfg.refine_steps : 0;
    for (int k = 0; k < refinements; ++k) belief = step(belief, ctx, params, filter_rng);
    const Target target = select_target(belief, std::nullopt, ctx, params, cfg.hysteresis);
    rec.target = target.g;
    rec.target_quality = target.quality;
    rec.best_quality = target.quality;
    rec.target_object_id = grasp_object_id(clock.world(), target.g);
    result.trace.push_back(rec);

    // The approach is flown blind; the scene and the drift keep evolving meanwhile.
    const Pose3 goal = grasp_pose(target.g);
    bool final_segment = false;
    int t = 0;
    while ((camera.translation - goal.translation).norm() > cfg.close_distance) {
      if (++t >= cfg.max_steps) {
        result.outcome = Outcome::kTimeout;
        result.steps = cfg.max_steps;
        result.message = "blind approach did not reach the target";
        return result;
      }
      const double moved = advance_camera(camera, goal, final_segment, cfg, params.top_down);
      clock.add_drift(drift_increment(cfg.drift_sigma, moved, drift_rng));
      clock.advance_to(t);
    }
    return finish(target.g, t, 1 + refinements);
  }

  Belief belief;
  std::optional<GraspConfig> target;
  bool final_segment = false;
  for (int t = 0; t < cfg.max_steps; ++t) {
    StepRecord rec;
    rec.step = t;
    rec.events = clock.advance_to(t);
    rec.camera = camera;
    const Observation obs = observe(t);
    const FilterContext ctx{obs, clock.world(), reach};

    Target chosen;
    try {
      if (cfg.mode == Mode::kSamplingClosedLoop) {
        belief = initial_distribution(ctx, params, filter_rng);
        double best_score = -std::numeric_limits<double>::infinity();
        for (const auto& p : belief.particles) {
          const double score = p.quality - (target ? cfg.sampling_lambda * (p.g.p - target->p).norm() : 0.0);
          if (score > best_score) {
            best_score = score;
            chosen = Target{p.g, p.quality};
          }
        }
      } else {
        if (t == 0) {
          belief = initial_distribution(ctx, params, filter_rng);
          rec.reinitialized = true;
        } else {
          const auto previous_pool = belief.pool;
          belief = step(belief, ctx, params, filter_rng);
          rec.reinitialized = belief.pool != previous_pool;
        }
        try {
          chosen = select_target(belief, target, ctx, params, cfg.hysteresis);
        } catch (const Degenerate&) {
          belief = initial_distribution(ctx, params, filter_rng);
          rec.reinitialized = true;
          chosen = select_target(belief, std::nullopt, ctx, params, cfg.hysteresis);
        }
      }
    } catch (const NoCandidates& e) {
      if (!target || clock.world().scene().objects.empty()) {
        result.outcome = Outcome::kCleared;
        result.message = e.what();
        result.steps = t;
        result.trace.push_back(rec);
        return result;
      }
      // Nothing graspable in view any more (camera close in, or occluded): hold the last target.
      spdlog::debug("step {}: {}; holding target", t, e.what());
      int bin = target->w_bin;
      chosen = Target{*target, grasp_quality(*target, FilterContext{obs, clock.world(), reach}, params, &bin)};
    }

    double best = 0.0;
    for (const auto& p : belief.particles) best = std::max(best, p.quality);
    rec.switched = !target || !same_mode(*target, chosen.g);
    if (rec.switched) final_segment = false;
    target = chosen.g;
    rec.target = chosen.g;
    rec.target_quality = chosen.quality;
    rec.best_quality = best;
    rec.target_object_id = grasp_object_id(clock.world(), chosen.g);
    result.trace.push_back(rec);
    spdlog::debug("step {} target quality {:.4f}", t, chosen.quality);

    const Pose3 goal = grasp_pose(*target);
    if ((camera.translation - goal.translation).norm() <= cfg.close_distance) {
      return finish(*target, t, t + 1);
    }
    const double moved = advance_camera(camera, goal, final_segment, cfg, params.top_down);
    clock.add_drift(drift_increment(cfg.drift_sigma, moved, drift_rng));
  }
  result.outcome = Outcome::kTimeout;
  result.steps = cfg.max_steps;
  result.message = "no execution within " + std::to_string(cfg.max_steps) + " steps";
  return result;
}

void write_trace_jsonl(const EpisodeResult& result, const EpisodeConfig& cfg, std::ostream& out) {
  out << json{{"seed", cfg.seed}, {"mode", mode_name(cfg.mode)}, {"scene", cfg.scene_label}}.dump() << "\n";
  for (const auto& rec : result.trace) {
    json j;
    j["step"] = rec.step;
    j["camera"] = pose_json(rec.camera);
    j["target"] = rec.target ? grasp_json(*rec.target) : json(nullptr);
    j["target_quality"] = rec.target_quality;
    j["best_quality"] = rec.best_quality;
    j["target_object"] = rec.target_object_id;
    j["switched"] = rec.switched;
    j["reinitialized"] = rec.reinitialized;
    j["events"] = rec.events;
    out << j.dump() << "\n";
  }
  json fin;
  fin["result"] = outcome_name(result.outcome);
  fin["success"] = result.success;
  fin["steps"] = result.steps;
  fin["executed"] = result.executed ? grasp_json(*result.executed) : json(nullptr);
  fin["executed_pose"] = result.executed_pose ? pose_json(*result.executed_pose) : json(nullptr);
  fin["object"] = result.executed_object_id;
  if (!result.message.empty()) fin["message"] = result.message;
  out << fin.dump() << "\n";
}

std::pair<double, double> wilson_interval(int successes, int trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = trials;
  const double p = successes / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

BenchmarkSummary run_benchmark(const std::vector<EpisodeConfig>& suite, int repeats, int jobs) {
  BenchmarkSummary summary;
  std::vector<EpisodeConfig> tasks;
  for (const auto& cfg : suite) {
    for (int r = 0; r < repeats; ++r) {
      EpisodeConfig c = cfg;
      c.seed = cfg.seed + static_cast<std::uint64_t>(r);
      tasks.push_back(c);
    }
  }
  summary.episodes.resize(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const EpisodeConfig& cfg = tasks[i];
    EpisodeRecord& rec = summary.episodes[i];
    rec.index = static_cast<int>(i);
    rec.mode = cfg.mode;
    rec.seed = cfg.seed;
    rec.scene_label = cfg.scene_label;
    try {
      const EpisodeResult res = run_episode(cfg);
      rec.outcome = res.outcome;
      rec.steps = res.steps;
      rec.executed_object_id = res.executed_object_id;
      rec.message = res.message;
    } catch (const std::exception& e) {
      rec.outcome = Outcome::kFailure;
      rec.message = e.what();
      spdlog::warn("episode {} failed: {}", i, e.what());
    }
  });

  std::map<Mode, std::size_t> slot;
  for (const auto& rec : summary.episodes) {
    auto [it, inserted] = slot.try_emplace(rec.mode, summary.modes.size());
    if (inserted) summary.modes.push_back(ModeSummary{rec.mode});
    ModeSummary& m = summary.modes[it->second];
    ++m.episodes;
    if (rec.outcome == Outcome::kSuccess) ++m.successes;
    if (rec.outcome == Outcome::kTimeout) ++m.timeouts;
    if (rec.outcome == Outcome::kCleared) ++m.cleared;
  }
  for (auto& m : summary.modes) {
    m.rate = m.episodes ? static_cast<double>(m.successes) / m.episodes : 0.0;
    std::tie(m.ci_low, m.ci_high) = wilson_interval(m.successes, m.episodes);
  }
  return summary;
}

void write_summary_csv(const BenchmarkSummary& summary, std::ostream& out) {
  out << "mode,episodes,successes,rate,ci_low,ci_high,timeouts,cleared\n";
  for (const auto& m : summary.modes) {
    out << mode_name(m.mode) << "," << m.episodes << "," << m.successes << "," << std::setprecision(6) << m.rate << ","
        << m.ci_low << "," << m.ci_high << "," << m.timeouts << "," << m.cleared << "\n";
  }
}

void write_summary_table(const BenchmarkSummary& summary, std::ostream& out) {
  out << std::left << std::setw(14) << "mode" << std::right << std::setw(10) << "episodes" << std::setw(11)
      << "successes" << std::setw(9) << "rate" << std::setw(20) << "95% interval" << "\n";
  for (const auto& m : summary.modes) {
    std::ostringstream interval;
    interval << std::fixed << std::setprecision(1) << "[" << 100 * m.ci_low << ", " << 100 * m.ci_high << "]";
    out << std::left << std::setw(14) << mode_name(m.mode) << std::right << std::setw(10) << m.episodes
        << std::setw(11) << m.successes << std::setw(8) << std::fixed << std::setprecision(1) << 100 * m.rate << "%"
        << std::setw(20) << interval.str() << "\n";
    out.unsetf(std::ios::fixed);
  }
}

void write_episodes_jsonl(const BenchmarkSummary& summary, std::ostream& out) {
  for (const auto& e : summary.episodes) {
    json j = {{"index", e.index},   {"mode", mode_name(e.mode)},     {"seed", e.seed},
              {"scene", e.scene_label}, {"outcome", outcome_name(e.outcome)}, {"success", e.outcome == Outcome::kSuccess},
              {"steps", e.steps},   {"object", e.executed_object_id}};
    if (!e.message.empty()) j["message"] = e.message;
    out << j.dump() << "\n";
  }
}

}  // namespace grasppf
