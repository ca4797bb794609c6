// grasp_pf: render / label / run / bench front end over the C interface.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grasppf/grasppf.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int exit_code(gpf_status s) {
  switch (s) {
    case GPF_OK: return 0;
    case GPF_ERR_PARSE:
    case GPF_ERR_INVALID: return kExitConfig;
    default: return kExitRuntime;
  }
}

int report(gpf_status s, const char* what) {
  if (s != GPF_OK) std::fprintf(stderr, "grasp_pf: %s: %s\n", what, gpf_last_error());
  return exit_code(s);
}

struct Common {
  std::string scene;
  unsigned long long seed = 0;
  std::string mode = "closed_loop";
  std::string out = "out";
  int jobs = 1;
  std::vector<std::string> params;
};

void add_common(CLI::App* cmd, Common& c, bool with_mode) {
  cmd->add_option("--scene", c.scene, "scene file (JSON)")->required();
  cmd->add_option("--seed", c.seed, "random seed");
  if (with_mode) cmd->add_option("--mode", c.mode, "closed_loop | open_loop | sampling_ol | sampling_cl | top_down");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--params", c.params, "parameter overrides, key=value");
}

// Loads the scene and a populated config; returns an exit code, 0 on success.
int setup(const Common& c, gpf_scene** scene, gpf_config** cfg) {
  if (gpf_status s = gpf_scene_load(c.scene.c_str(), scene); s != GPF_OK) return report(s, "scene");
  gpf_config_new(cfg);
  const std::string seed = std::to_string(c.seed), jobs = std::to_string(c.jobs);
  if (gpf_status s = gpf_config_set(*cfg, "seed", seed.c_str()); s != GPF_OK) return report(s, "seed");
  if (gpf_status s = gpf_config_set(*cfg, "jobs", jobs.c_str()); s != GPF_OK) return report(s, "jobs");
  if (gpf_status s = gpf_config_set(*cfg, "mode", c.mode.c_str()); s != GPF_OK) return report(s, "mode");
  for (const auto& kv : c.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "grasp_pf: --params expects key=value, got '%s'\n", kv.c_str());
      return kExitConfig;
    }
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (gpf_status s = gpf_config_set(*cfg, key.c_str(), value.c_str()); s != GPF_OK) return report(s, "params");
  }
  return 0;
}

struct Handles {
  gpf_scene* scene = nullptr;
  gpf_config* cfg = nullptr;
  ~Handles() {
    gpf_scene_free(scene);
    gpf_config_free(cfg);
  }
};

}  // namespace

int main(int argc, char** argv) {
  if (const char* level = std::getenv("GRASP_PF_LOG")) {
    if (gpf_set_log_level(level) != GPF_OK) std::fprintf(stderr, "grasp_pf: %s\n", gpf_last_error());
  } else {
    gpf_set_log_level("warn");
  }

  CLI::App app{"Particle-filter grasp inference over a simulated scene"};
  app.require_subcommand(1);

  Common c;
  auto* render = app.add_subcommand("render", "render depth and object-id images");
  add_common(render, c, false);

  auto* label = app.add_subcommand("label", "write the six quality label channels for one grasp direction");
  add_common(label, c, false);
  double alpha = 0.0, beta = 0.0, gamma = 0.0, depth = 0.02;
  label->add_option("--alpha", alpha, "rotation about the camera axis, rad");
  label->add_option("--beta", beta, "rad");
  label->add_option("--gamma", gamma, "rad");
  label->add_option("--depth", depth, "grasp depth, m");

  auto* run = app.add_subcommand("run", "run one episode");
  add_common(run, c, true);

  auto* bench = app.add_subcommand("bench", "run the mode benchmark");
  add_common(bench, c, false);
  int episodes = 10;
  bench->add_option("--episodes", episodes, "episodes per mode")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  Handles h;
  if (int rc = setup(c, &h.scene, &h.cfg); rc != 0) return rc;

  if (*render) {
    long pixels = 0;
    if (gpf_status s = gpf_render(h.scene, h.cfg, c.out.c_str(), &pixels); s != GPF_OK) return report(s, "render");
    std::printf("{\"out\":\"%s\",\"object_pixels\":%ld}\n", c.out.c_str(), pixels);
    return 0;
  }
  if (*label) {
    gpf_status s = gpf_label(h.scene, h.cfg, alpha, beta, gamma, depth, c.out.c_str());
    return report(s, "label");
  }
  if (*run) {
    const std::string trace = c.out + "/trace.jsonl";
    gpf_episode_result r{};
    gpf_status s = gpf_run(h.scene, h.cfg, trace.c_str(), &r);
    if (s != GPF_OK && s != GPF_ERR_TIMEOUT) return report(s, "run");
    const char* outcome = s == GPF_ERR_TIMEOUT ? "timeout" : r.cleared ? "cleared" : r.success ? "success" : "failure";
    std::printf("{\"result\":\"%s\",\"success\":%s,\"steps\":%d,\"object\":%d,\"seed\":%llu,\"trace\":\"%s\"}\n",
                outcome, r.success ? "true" : "false", r.steps, r.executed_object_id, c.seed, trace.c_str());
    if (s == GPF_ERR_TIMEOUT) return report(s, "run");
    return r.success || r.cleared ? 0 : kExitRuntime;
  }
  if (*bench) {
    if (gpf_status s = gpf_bench(h.scene, h.cfg, episodes, c.out.c_str()); s != GPF_OK) return report(s, "bench");
    std::ifstream table(c.out + "/summary.txt");
    std::cout << table.rdbuf();
    return 0;
  }
  return kExitConfig;
}
