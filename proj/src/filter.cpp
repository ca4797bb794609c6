#include "grasppf/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "grasppf/errors.hpp"
#include "grasppf/parallel.hpp"

namespace grasppf {
namespace {

constexpr double kMinThreshold = 1e-3;
constexpr double kDegenerateMass = 1e-12;
// Particles closer than this in position and rotation count as support for
// each other when the best quality is tied.
constexpr double kSupportRadius = 0.02;
constexpr double kSupportAngle = 0.35;
constexpr double kSupportDepth = 0.01;

struct DirectionSample {
  EulerZXY euler;
  double d;
};

}  // namespace

void FilterParams::validate() const {
  if (num_particles < 1) throw InvariantError("filter: M must be >= 1");
  if (sigma_p < 0 || sigma_rot < 0 || sigma_d < 0) throw InvariantError("filter: noise sigmas must be >= 0");
  if (!(quality_threshold > 0.0 && quality_threshold < 1.0)) throw InvariantError("filter: tau must lie in (0, 1)");
  if (!(fresh_fraction >= 0.0 && fresh_fraction < 1.0)) throw InvariantError("filter: fresh fraction must lie in [0, 1)");
  if (n_dirs < 1) throw InvariantError("filter: n_dirs must be >= 1");
  if (blur_sigma_px < 0.0) throw InvariantError("filter: blur sigma must be >= 0");
  if (!(beta_bound >= 0.0 && beta_bound < std::numbers::pi / 2 - kGimbalBand) ||
      !(gamma_bound >= 0.0 && gamma_bound <= std::numbers::pi)) {
    throw InvariantError("filter: euler bounds out of range");
  }
  gripper.validate();
}

const Candidate& CandidatePool::draw(double u01) const {
  const double target = u01 * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  const auto index = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), candidates.size() - 1);
  return candidates[index];
}

Rotation3 top_down_rotation(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Mat3 m;
  m << c, -s, 0, -s, -c, 0, 0, 0, -1;
  return Rotation3(m);
}

Rotation3 snap_top_down(const Rotation3& r) {
  Vec3 x = r.column(0);
  if (x.head<2>().norm() < 1e-6) x = -r.column(1).cross(Vec3(0, 0, -1));
  return top_down_rotation(std::atan2(-x.y(), x.x()));
}

CandidatePool build_candidate_pool(const FilterContext& ctx, const FilterParams& params, Rng& rng) {
  const GripperModel& gripper = params.gripper;
  std::vector<DirectionSample> dirs(params.n_dirs);
  for (auto& s : dirs) {
    s.euler.alpha = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double beta = rng.uniform(-params.beta_bound, params.beta_bound);
    const double gamma = rng.uniform(-params.gamma_bound, params.gamma_bound);
    s.euler.beta = params.top_down ? 0.0 : beta;
    s.euler.gamma = params.top_down ? 0.0 : gamma;
    s.d = rng.uniform(gripper.d_min, gripper.d_max);
  }

  std::vector<std::vector<Candidate>> per_dir(dirs.size());
  parallel_for(dirs.size(), params.jobs, [&](std::size_t k) {
    const QualityMaps maps = directional_quality_maps(ctx.obs, ctx.world, dirs[k].euler, dirs[k].d, gripper);
    const auto smooth = continuous_quality(maps, params.blur_sigma_px);
    const int width = maps.view.depth.width(), height = maps.view.depth.height();
    for (int v = 0; v < height; ++v) {
      for (int u = 0; u < width; ++u) {
        const int bin = smooth[1].at(u, v) > smooth[0].at(u, v) ? 1 : 0;
        const double q = smooth[bin].at(u, v);
        if (!(q > kMinThreshold / 2)) continue;
        // Blur bleeds onto neighbours; only pixels that are graspable themselves qualify.
        GraspChannels ch;
        for (int c = 0; c < kChannels; ++c) ch[c] = maps.channel[c].at(u, v);
        if (!(channels_quality(ch).q[bin] > 0.0)) continue;
        auto g = grasp_at(maps, ctx.obs, {u, v}, bin);
        if (!g) continue;
        if (params.top_down) g->r = snap_top_down(g->r);
        if (!reachable(ctx.reach, grasp_pose(*g))) continue;
        per_dir[k].push_back({*g, q});
      }
    }
  });

  std::vector<Candidate> all;
  for (auto& list : per_dir) all.insert(all.end(), list.begin(), list.end());

  const std::size_t wanted = static_cast<std::size_t>(std::max(params.num_particles / 8, 1));
  double tau = params.quality_threshold;
  auto count_above = [&](double t) {
    return static_cast<std::size_t>(std::count_if(all.begin(), all.end(), [t](const Candidate& c) { return c.quality > t; }));
  };
  while (count_above(tau) < wanted && tau >= kMinThreshold) tau /= 2.0;

  CandidatePool pool;
  for (const auto& c : all) {
    if (c.quality > tau) pool.candidates.push_back(c);
  }
  if (pool.candidates.empty()) throw NoCandidates("no grasp candidate exceeds the minimum quality threshold");
  double running = 0.0;
  for (const auto& c : pool.candidates) {
    running += c.quality;
    pool.cumulative.push_back(running);
  }
  return pool;
}

Belief initial_distribution(const FilterContext& ctx, const FilterParams& params, Rng& rng) {
  auto pool = std::make_shared<const CandidatePool>(build_candidate_pool(ctx, params, rng));
  Belief b;
  b.time_step = ctx.obs.time_step;
  b.pool = pool;
  b.particles.resize(params.num_particles);
  const double w = 1.0 / params.num_particles;
  for (auto& p : b.particles) {
    const Candidate& c = pool->draw(rng.uniform());
    p = Particle{c.g, w, c.quality};
  }
  return b;
}

Belief transition(const Belief& b, const FilterParams& params, Rng& rng) {
  Belief out = b;
  const Rng base(rng());
  const double d_min = params.gripper.d_min, d_max = params.gripper.d_max;
  parallel_for(out.particles.size(), params.jobs, [&](std::size_t i) {
    Rng stream = base.split(i);
    GraspConfig& g = out.particles[i].g;
    g.p += Vec3(stream.normal(params.sigma_p), stream.normal(params.sigma_p), stream.normal(params.sigma_p));
    g.r = perturb_rotation(g.r, params.sigma_rot, stream);
    if (params.top_down) g.r = snap_top_down(g.r);
    g.d = std::clamp(g.d + stream.normal(params.sigma_d), d_min, d_max);
  });

  const auto fresh = static_cast<std::size_t>(std::floor(params.fresh_fraction * static_cast<double>(out.particles.size())));
  if (fresh > 0 && out.pool && !out.pool->candidates.empty()) {
    std::vector<std::size_t> order(out.particles.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
      return out.particles[a].weight < out.particles[c].weight;
    });
    Rng inject = base.split(out.particles.size());
    for (std::size_t k = 0; k < fresh; ++k) {
      Particle& p = out.particles[order[k]];
      const Candidate& c = out.pool->draw(inject.uniform());
      p.g = c.g;
      p.quality = c.quality;
    }
  }
  return out;
}

Belief project_to_surface(const Belief& b, const Observation& obs) {
  Belief out = b;
  for (auto& particle : out.particles) {
    const auto proj = project(obs, particle.g.p);
    if (!proj) {
      particle.weight = 0.0;
      continue;
    }
    const Pixel px = proj->nearest();
    if (!obs.depth.contains(px.u, px.v) || !(obs.depth.at(px.u, px.v) > 0.0)) {
      particle.weight = 0.0;
      continue;
    }
    particle.g.p = back_project(obs, px);
  }
  return out;
}

double grasp_quality(const GraspConfig& g, const FilterContext& ctx, const FilterParams& params, int* best_bin) {
  const QualityValue qs = evaluate_grasp(ctx.world, ctx.obs, g, params.gripper);
  if (best_bin) *best_bin = qs.best_bin();
  const double qr = reachable(ctx.reach, grasp_pose(g));
  return qr * qs.best();
}

std::vector<double> measure(Belief& b, const FilterContext& ctx, const FilterParams& params) {
  std::vector<double> q(b.particles.size(), 0.0);
  parallel_for(b.particles.size(), params.jobs, [&](std::size_t i) {
    Particle& p = b.particles[i];
    if (p.weight == 0.0) {
      p.quality = 0.0;
      return;
    }
    int bin = p.g.w_bin;
    q[i] = grasp_quality(p.g, ctx, params, &bin);
    p.g.w_bin = bin;
    p.quality = q[i];
  });
  return q;
}

Belief reweight(const Belief& b, std::span<const double> q) {
  Belief out = b;
  double total = 0.0;
  for (std::size_t i = 0; i < out.particles.size(); ++i) {
    out.particles[i].weight *= q[i];
    total += out.particles[i].weight;
  }
  out.degenerate = !(total >= kDegenerateMass);
  const double n = static_cast<double>(out.particles.size());
  for (auto& p : out.particles) p.weight = out.degenerate ? 1.0 / n : p.weight / total;
  return out;
}

Belief evaluate(const Belief& b, const FilterContext& ctx, const FilterParams& params) {
  Belief tmp = b;
  const auto q = measure(tmp, ctx, params);
  return reweight(tmp, q);
}

std::vector<int> systematic_select(std::span<const double> weights, int count, double offset) {
  std::vector<int> out;
  out.reserve(count);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const int n = static_cast<int>(weights.size());
  int i = 0;
  double cumulative = weights.empty() ? 0.0 : weights[0] / total;
  for (int m = 0; m < count; ++m) {
    const double u = offset + static_cast<double>(m) / count;
    // Slack keeps exact boundaries (u == C_i) on the side exact arithmetic puts them.
    while (i < n - 1 && u >= cumulative - 1e-12) {
      ++i;
      cumulative += weights[i] / total;
    }
    out.push_back(i);
  }
  return out;
}

Belief resample(const Belief& b, const FilterParams& params, Rng& rng, const FilterContext* reseed) {
  if (b.degenerate) {
    if (!reseed) throw Degenerate("belief has no mass and no observation to re-seed from");
    Belief fresh = initial_distribution(*reseed, params, rng);
    fresh.time_step = b.time_step;
    return fresh;
  }
  const int count = static_cast<int>(b.particles.size());
  std::vector<double> weights(b.particles.size());
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = b.particles[i].weight;
  const double offset = rng.uniform() / count;
  const auto picks = systematic_select(weights, count, offset);

  Belief out;
  out.time_step = b.time_step;
  out.pool = b.pool;
  out.particles.reserve(count);
  for (int index : picks) {
    Particle p = b.particles[index];
    p.weight = 1.0 / count;
    out.particles.push_back(p);
  }
  return out;
}

Belief step(const Belief& b, const FilterContext& ctx, const FilterParams& params, Rng& rng) {
  Belief moved = transition(b, params, rng);
  Belief projected = project_to_surface(moved, ctx.obs);
  Belief weighted = evaluate(projected, ctx, params);
  Belief out = resample(weighted, params, rng, &ctx);
  out.time_step = b.time_step + 1;
  return out;
}

bool same_mode(const GraspConfig& a, const GraspConfig& b) {
  if (a.w_bin != b.w_bin || (a.p - b.p).norm() > kSupportRadius || std::abs(a.d - b.d) > kSupportDepth) return false;
  return (a.r.matrix().transpose() * b.r.matrix()).trace() >= 1.0 + 2.0 * std::cos(kSupportAngle);
}

constexpr std::size_t kStencilCandidates = 64;

// Mean quality of the grasp shifted by one transition sigma along the gripper
// x and y axes and turned by one sigma about the approach axis.
double neighbourhood_quality(const GraspConfig& g, const FilterContext& ctx, const FilterParams& params) {
  const double hp = params.sigma_p;
  double sum = 0.0;
  for (const Vec3& off : {Vec3(hp, 0, 0), Vec3(-hp, 0, 0), Vec3(0, hp, 0), Vec3(0, -hp, 0)}) {
    GraspConfig shifted = g;
    shifted.p += g.r.matrix() * off;
    sum += grasp_quality(shifted, ctx, params);
  }
  for (const double a : {params.sigma_rot, -params.sigma_rot}) {
    GraspConfig turned = g;
    turned.r = Rotation3(g.r.matrix() * Rotation3::from_axis_angle(Vec3(0, 0, a)).matrix());
    sum += grasp_quality(turned, ctx, params);
  }
  return sum / 6.0;
}

// Highest-quality particle accepted by `keep`. Ties are common (raw quality
// saturates at 1): the densest kStencilCandidates of them (quality-weighted
// Gaussian kernel, transition noise as bandwidth) are rescored by their
// neighbourhood quality, density breaking what remains.
template <class Keep>
std::optional<std::size_t> best_particle(const Belief& b, const FilterContext& ctx, const FilterParams& params,
                                         Keep&& keep) {
  double best = 0.0;
  for (const auto& p : b.particles) {
    if (keep(p.g)) best = std::max(best, p.quality);
  }
  if (!(best > 0.0)) return std::nullopt;
  const double hp = std::max(params.sigma_p, 1e-6), hr = std::max(params.sigma_rot, 1e-6);
  const double hd = std::max(params.sigma_d, 1e-6);
  std::vector<std::pair<double, std::size_t>> ties;
  for (std::size_t i = 0; i < b.particles.size(); ++i) {
    if (b.particles[i].quality != best || !keep(b.particles[i].g)) continue;
    const GraspConfig& gi = b.particles[i].g;
    double density = 0.0;
    for (const auto& other : b.particles) {
      if (!(other.quality > 0.0) || other.g.w_bin != gi.w_bin) continue;
      const double angle = Rotation3::angle_between(gi.r, other.g.r);
      const double e = (gi.p - other.g.p).squaredNorm() / (hp * hp) + angle * angle / (hr * hr) +
                       (gi.d - other.g.d) * (gi.d - other.g.d) / (hd * hd);
      density += other.quality * std::exp(-0.5 * e);
    }
    ties.emplace_back(density, i);
  }
  std::stable_sort(ties.begin(), ties.end(), [](const auto& a, const auto& c) { return a.first > c.first; });
  if (ties.size() == 1) return ties.front().second;
  ties.resize(std::min(ties.size(), kStencilCandidates));
  std::vector<double> score(ties.size());
  parallel_for(ties.size(), params.jobs,
               [&](std::size_t k) { score[k] = neighbourhood_quality(b.particles[ties[k].second].g, ctx, params); });
  std::size_t chosen = 0;
  for (std::size_t k = 1; k < ties.size(); ++k)
    if (score[k] > score[chosen]) chosen = k;
  return ties[chosen].second;
}

Target select_target(const Belief& b, const std::optional<GraspConfig>& previous, const FilterContext& ctx,
                     const FilterParams& params, double hysteresis) {
  const auto top = best_particle(b, ctx, params, [](const GraspConfig&) { return true; });
  if (!top) throw Degenerate("no particle has positive quality");
  const Target candidate{b.particles[*top].g, b.particles[*top].quality};
  if (!previous || same_mode(*previous, candidate.g)) return candidate;

  // The previous target's mode is kept, refreshed to its best current particle.
  Target incumbent;
  if (const auto tracked = best_particle(b, ctx, params, [&](const GraspConfig& g) { return same_mode(*previous, g); })) {
    incumbent = Target{b.particles[*tracked].g, b.particles[*tracked].quality};
  } else {
    int bin = previous->w_bin;
    incumbent = Target{*previous, grasp_quality(*previous, ctx, params, &bin)};
  }
  if (candidate.quality > incumbent.quality + hysteresis) return candidate;
  return incumbent;
}

void write_belief_jsonl(const Belief& b, std::ostream& out) {
  for (std::size_t i = 0; i < b.particles.size(); ++i) {
    const Particle& p = b.particles[i];
    nlohmann::json rec;
    rec["step"] = b.time_step;
    rec["index"] = i;
    rec["p"] = {p.g.p.x(), p.g.p.y(), p.g.p.z()};
    try {
      const EulerZXY e = euler_zxy_decompose(p.g.r);
      rec["euler_zxy"] = {e.alpha, e.beta, e.gamma};
    } catch (const GimbalLock&) {
      rec["euler_zxy"] = nullptr;
    }
    rec["d"] = p.g.d;
    rec["bin"] = p.g.w_bin;
    rec["weight"] = p.weight;
    rec["quality"] = p.quality;
    out << rec.dump() << "\n";
  }
}

}  // namespace grasppf
