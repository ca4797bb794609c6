#include <cmath>
#include "grasppf/grasppf.h"

#include <filesystem>
#include <fstream>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "grasppf/config.hpp"
#include "grasppf/errors.hpp"
#include "grasppf/quality.hpp"
#include "grasppf/scene.hpp"
#include "grasppf/sim.hpp"

struct gpf_scene {
  std::shared_ptr<const grasppf::SceneDescription> description;
  std::string label;
};

struct gpf_config {
  grasppf::RunConfig run;
  int jobs = 1;
};

namespace {

thread_local std::string g_last_error;

gpf_status fail(gpf_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class Fn>
gpf_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const grasppf::ParseError& e) {
    return fail(GPF_ERR_PARSE, e.what());
  } catch (const grasppf::InvariantError& e) {
    return fail(GPF_ERR_INVALID, e.what());
  } catch (const grasppf::GimbalLock& e) {
    return fail(GPF_ERR_INVALID, e.what());
  } catch (const grasppf::UnknownObject& e) {
    return fail(GPF_ERR_INVALID, e.what());
  } catch (const grasppf::Timeout& e) {
    return fail(GPF_ERR_TIMEOUT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(GPF_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(GPF_ERR_RUNTIME, e.what());
  }
}

std::filesystem::path prepare_dir(const char* out_dir) {
  if (!out_dir || !*out_dir) throw grasppf::InvariantError("output directory required");
  std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::filesystem::filesystem_error("cannot write", path, std::make_error_code(std::errc::io_error));
  return out;
}

grasppf::EpisodeConfig episode_for(const gpf_scene* scene, const gpf_config* cfg) {
  grasppf::EpisodeConfig ep = cfg->run.episode;
  ep.scene = scene->description;
  ep.scene_label = scene->label;
  ep.filter.jobs = cfg->jobs;
  return ep;
}

}  // namespace

extern "C" {

const char* gpf_last_error(void) { return g_last_error.c_str(); }

const char* gpf_version(void) { return "0.1.0"; }

gpf_status gpf_set_log_level(const char* level) {
  if (!level) return fail(GPF_ERR_INVALID, "null argument");
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && std::string(level) != "off") {
    return fail(GPF_ERR_INVALID, std::string("unknown log level '") + level + "'");
  }
  static const bool installed = [] {
    spdlog::set_default_logger(spdlog::stderr_logger_mt("grasppf"));
    return true;
  }();
  (void)installed;
  spdlog::set_level(parsed);
  return GPF_OK;
}

gpf_status gpf_scene_load(const char* path, gpf_scene** out) {
  if (!path || !out) return fail(GPF_ERR_INVALID, "null argument");
  return guarded([&] {
    auto d = std::make_shared<grasppf::SceneDescription>(grasppf::load_scene_file(path));
    *out = new gpf_scene{std::move(d), std::filesystem::path(path).filename().string()};
    return GPF_OK;
  });
}

gpf_status gpf_scene_parse(const char* json_text, gpf_scene** out) {
  if (!json_text || !out) return fail(GPF_ERR_INVALID, "null argument");
  return guarded([&] {
    auto d = std::make_shared<grasppf::SceneDescription>(grasppf::load_scene(json_text));
    *out = new gpf_scene{std::move(d), "inline"};
    return GPF_OK;
  });
}

void gpf_scene_free(gpf_scene* scene) { delete scene; }

int gpf_scene_object_count(const gpf_scene* scene) {
  return scene ? static_cast<int>(scene->description->scene.objects.size()) : 0;
}

gpf_status gpf_config_new(gpf_config** out) {
  if (!out) return fail(GPF_ERR_INVALID, "null argument");
  *out = new gpf_config{};
  return GPF_OK;
}

void gpf_config_free(gpf_config* cfg) { delete cfg; }

gpf_status gpf_config_set(gpf_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(GPF_ERR_INVALID, "null argument");
  return guarded([&] {
    const std::string k(key), v(value);
    if (k == "seed") {
      cfg->run.episode.seed = std::stoull(v);
    } else if (k == "mode") {
      cfg->run.episode.mode = grasppf::parse_mode(v);
    } else if (k == "jobs") {
      const int jobs = std::stoi(v);
      if (jobs < 1) throw grasppf::InvariantError("jobs must be >= 1");
      cfg->jobs = jobs;
    } else {
      grasppf::apply_param(cfg->run, k, v);
    }
    return GPF_OK;
  });
}

gpf_status gpf_render(const gpf_scene* scene, const gpf_config* cfg, const char* out_dir, long* object_pixels) {
  if (!scene || !cfg) return fail(GPF_ERR_INVALID, "null argument");
  return guarded([&] {
    const auto dir = prepare_dir(out_dir);
    const auto& s = scene->description->scene;
    const grasppf::World world(s);
    grasppf::RenderOptions ro;
    ro.depth_noise_sigma = cfg->run.episode.depth_noise_sigma;
    ro.noise_seed = cfg->run.episode.seed;
    ro.jobs = cfg->jobs;
    const auto obs = grasppf::render(world, grasppf::render_camera(cfg->run, s), cfg->run.episode.intrinsics, ro);
    grasppf::write_depth_pgm(obs.depth, (dir / "depth.pgm").string());
    grasppf::write_object_id_pgm(obs.object_id, (dir / "object_id.pgm").string());
    if (object_pixels) {
      long n = 0;
      for (int id : obs.object_id.data()) n += id >= 0;
      *object_pixels = n;
    }
    return GPF_OK;
  });
}

gpf_status gpf_label(const gpf_scene* scene, const gpf_config* cfg, double alpha, double beta, double gamma,
                     double depth, const char* out_dir) {
  if (!scene || !cfg) return fail(GPF_ERR_INVALID, "null argument");
  return guarded([&] {
    const auto& params = cfg->run.episode.filter;
    if (std::abs(beta) > params.beta_bound || std::abs(gamma) > params.gamma_bound) {
      throw grasppf::InvariantError("euler angles outside the sampling bounds");
    }
    const auto& g = params.gripper;
    if (depth < g.d_min || depth > g.d_max) throw grasppf::InvariantError("depth outside [d_min, d_max]");
    const auto dir = prepare_dir(out_dir);
    const auto& s = scene->description->scene;
    const grasppf::World world(s);
    grasppf::RenderOptions ro;
    ro.jobs = cfg->jobs;
    const auto obs = grasppf::render(world, grasppf::render_camera(cfg->run, s), cfg->run.episode.intrinsics, ro);
    const auto maps = grasppf::directional_quality_maps(obs, world, {alpha, beta, gamma}, depth, g, cfg->jobs);
    static const char* kNames[] = {"q_level1", "q_level2", "q_level3", "object_mask", "free_narrow", "free_wide"};
    for (int c = 0; c < 6; ++c) grasppf::write_unit_pgm(maps.channel[c], (dir / (std::string(kNames[c]) + ".pgm")).string());
    return GPF_OK;
  });
}

gpf_status gpf_run(const gpf_scene* scene, const gpf_config* cfg, const char* trace_path, gpf_episode_result* out) {
  if (!scene || !cfg) return fail(GPF_ERR_INVALID, "null argument");
  return guarded([&] {
    const auto ep = episode_for(scene, cfg);
    const auto result = grasppf::run_episode(ep);
    if (trace_path) {
      const std::filesystem::path path(trace_path);
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      auto f = open_out(path);
      grasppf::write_trace_jsonl(result, ep, f);
    }
    if (out) {
      out->success = result.success ? 1 : 0;
      out->cleared = result.outcome == grasppf::Outcome::kCleared ? 1 : 0;
      out->steps = result.steps;
      out->executed_object_id = result.executed_object_id;
    }
    if (result.outcome == grasppf::Outcome::kTimeout) return fail(GPF_ERR_TIMEOUT, result.message);
    return GPF_OK;
  });
}

gpf_status gpf_bench(const gpf_scene* scene, const gpf_config* cfg, int episodes, const char* out_dir) {
  if (!scene || !cfg) return fail(GPF_ERR_INVALID, "null argument");
  if (episodes < 0) return fail(GPF_ERR_INVALID, "episodes must be >= 0");
  return guarded([&] {
    const auto dir = prepare_dir(out_dir);
    std::vector<grasppf::EpisodeConfig> suite;
    if (episodes > 0) {
      for (auto mode : cfg->run.bench_modes) {
        auto ep = episode_for(scene, cfg);
        ep.filter.jobs = 1;
        ep.mode = mode;
        suite.push_back(ep);
      }
    }
    const auto summary = grasppf::run_benchmark(suite, episodes, cfg->jobs);
    auto csv = open_out(dir / "summary.csv");
    grasppf::write_summary_csv(summary, csv);
    auto table = open_out(dir / "summary.txt");
    grasppf::write_summary_table(summary, table);
    auto jsonl = open_out(dir / "episodes.jsonl");
    grasppf::write_episodes_jsonl(summary, jsonl);
    return GPF_OK;
  });
}

}  // extern "C"
