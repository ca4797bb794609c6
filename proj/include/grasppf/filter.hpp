#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "grasppf/camera.hpp"
#include "grasppf/quality.hpp"
#include "grasppf/reach.hpp"
#include "grasppf/rng.hpp"
#include "grasppf/world.hpp"

namespace grasppf {

struct FilterParams {
  int num_particles = 512;
  double sigma_p = 0.01;
  double sigma_rot = 0.1;
  double sigma_d = 0.005;
  int n_dirs = 16;
  double quality_threshold = 0.5;
  double fresh_fraction = 0.1;
  double beta_bound = std::numbers::pi / 4;
  double gamma_bound = std::numbers::pi / 4;
  double blur_sigma_px = 1.0;
  bool top_down = false;  // restrict every grasp to a vertical approach
  int jobs = 1;
  GripperModel gripper;

  void validate() const;
};

struct Particle {
  GraspConfig g;
  double weight = 0.0;
  double quality = 0.0;  // Q^R * max_w Q^S from the last evaluation
};

struct Candidate {
  GraspConfig g;
  double quality = 0.0;
};

/// Thresholded grasp candidates recovered from the quality maps.
struct CandidatePool {
  std::vector<Candidate> candidates;
  std::vector<double> cumulative;  // running quality sum for proportional draws

  const Candidate& draw(double u01) const;
};

struct Belief {
  std::vector<Particle> particles;
  int time_step = 0;
  bool degenerate = false;
  std::shared_ptr<const CandidatePool> pool;
};

/// Everything a measurement needs: the current observation, the matching
/// ground-truth snapshot and the reachability model.
struct FilterContext {
  const Observation& obs;
  const World& world;
  const ReachModel& reach;
};

/// Builds the candidate pool from n_dirs sampled (rotation, depth) maps.
/// Throws NoCandidates.
CandidatePool build_candidate_pool(const FilterContext& ctx, const FilterParams& params, Rng& rng);
Belief initial_distribution(const FilterContext& ctx, const FilterParams& params, Rng& rng);

Belief transition(const Belief& b, const FilterParams& params, Rng& rng);
Belief project_to_surface(const Belief& b, const Observation& obs);

/// Q^R * max_w Q^S per particle; also stores the argmax bin and the quality.
std::vector<double> measure(Belief& b, const FilterContext& ctx, const FilterParams& params);
/// weight_i <- weight_i * q_i, normalized; flags degeneracy below 1e-12 total.
Belief reweight(const Belief& b, std::span<const double> q);
Belief evaluate(const Belief& b, const FilterContext& ctx, const FilterParams& params);

/// Systematic selector with offset in [0, 1/count).
std::vector<int> systematic_select(std::span<const double> weights, int count, double offset);
/// Degenerate beliefs are re-seeded from `reseed` when given, else Degenerate is thrown.
Belief resample(const Belief& b, const FilterParams& params, Rng& rng, const FilterContext* reseed = nullptr);

/// transition -> project_to_surface -> evaluate -> resample.
Belief step(const Belief& b, const FilterContext& ctx, const FilterParams& params, Rng& rng);

struct Target {
  GraspConfig g;
  double quality = 0.0;
};

/// Same width bin and close in position, rotation and depth: the neighbourhood
/// inside which select_target refines the target without hysteresis.
bool same_mode(const GraspConfig& a, const GraspConfig& b);

/// Best particle, keeping `previous` unless the best beats its re-evaluated
/// quality by more than `hysteresis`. Throws Degenerate.
Target select_target(const Belief& b, const std::optional<GraspConfig>& previous, const FilterContext& ctx,
                     const FilterParams& params, double hysteresis = 0.05);

/// Q^R * max_w Q^S for a single grasp.
double grasp_quality(const GraspConfig& g, const FilterContext& ctx, const FilterParams& params, int* best_bin = nullptr);

/// Vertical approach with the given yaw of the closing axis.
Rotation3 top_down_rotation(double yaw);
Rotation3 snap_top_down(const Rotation3& r);

/// One JSON record per particle.
void write_belief_jsonl(const Belief& b, std::ostream& out);

}  // namespace grasppf
