#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <string>

#include "grasppf/grasppf.h"
#include "pgm.hpp"

namespace fs = std::filesystem;
using grasppf::test::read_pgm;

namespace {

std::string data(const std::string& name) { return std::string(GRASPPF_DATA_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("grasppf_capi_" + name);
  fs::remove_all(p);
  return p;
}

struct Handles {
  gpf_scene* scene = nullptr;
  gpf_config* cfg = nullptr;
  explicit Handles(const std::string& file) {
    EXPECT_EQ(gpf_scene_load(data(file).c_str(), &scene), GPF_OK) << gpf_last_error();
    EXPECT_EQ(gpf_config_new(&cfg), GPF_OK);
  }
  ~Handles() {
    gpf_scene_free(scene);
    gpf_config_free(cfg);
  }
};

}  // namespace

TEST(CApi, VersionAndLogLevel) {
  EXPECT_STRNE(gpf_version(), "");
  EXPECT_EQ(gpf_set_log_level("error"), GPF_OK);
  EXPECT_EQ(gpf_set_log_level("chatty"), GPF_ERR_INVALID);
}

TEST(CApi, SceneErrors) {
  gpf_scene* s = nullptr;
  EXPECT_EQ(gpf_scene_load("/nonexistent/x.scene", &s), GPF_ERR_PARSE);
  EXPECT_EQ(s, nullptr);
  EXPECT_NE(std::string(gpf_last_error()).find("x.scene"), std::string::npos);
  EXPECT_EQ(gpf_scene_parse("{\"table_height\": 0, \"objects\": 5}", &s), GPF_ERR_PARSE);
  EXPECT_EQ(gpf_scene_parse(nullptr, &s), GPF_ERR_INVALID);
  ASSERT_EQ(gpf_scene_parse("{\"table_height\": 0, \"objects\": []}", &s), GPF_OK);
  EXPECT_EQ(gpf_scene_object_count(s), 0);
  gpf_scene_free(s);
  gpf_scene_free(nullptr);
}

TEST(CApi, ConfigKeys) {
  gpf_config* cfg = nullptr;
  ASSERT_EQ(gpf_config_new(&cfg), GPF_OK);
  EXPECT_EQ(gpf_config_set(cfg, "num_particles", "128"), GPF_OK);
  EXPECT_EQ(gpf_config_set(cfg, "mode", "td"), GPF_OK);
  EXPECT_EQ(gpf_config_set(cfg, "width_bins", "0.03,0.07"), GPF_OK);
  EXPECT_EQ(gpf_config_set(cfg, "no_such_key", "1"), GPF_ERR_INVALID);
  EXPECT_EQ(gpf_config_set(cfg, "num_particles", "lots"), GPF_ERR_INVALID);
  EXPECT_EQ(gpf_config_set(cfg, "mode", "sideways"), GPF_ERR_INVALID);
  gpf_config_free(cfg);
}

TEST(CApi, RenderCountsObjectPixels) {
  Handles clutter("bench_clutter_12.scene");
  EXPECT_EQ(gpf_scene_object_count(clutter.scene), 12);
  long pixels = -1;
  const fs::path out = scratch("render");
  ASSERT_EQ(gpf_render(clutter.scene, clutter.cfg, out.c_str(), &pixels), GPF_OK) << gpf_last_error();
  EXPECT_GT(pixels, 500);
  const auto ids = read_pgm((out / "object_id.pgm").string());
  EXPECT_EQ(ids.width, 128);
  EXPECT_EQ(std::count_if(ids.values.begin(), ids.values.end(), [](int v) { return v >= 2; }), pixels);

  Handles empty("empty.scene");
  ASSERT_EQ(gpf_render(empty.scene, empty.cfg, out.c_str(), &pixels), GPF_OK);
  EXPECT_EQ(pixels, 0);
}

TEST(CApi, LabelChecksBounds) {
  Handles h("single_box.scene");
  const fs::path out = scratch("label");
  EXPECT_EQ(gpf_label(h.scene, h.cfg, 0.0, 1.2, 0.0, 0.02, out.c_str()), GPF_ERR_INVALID);
  EXPECT_EQ(gpf_label(h.scene, h.cfg, 0.0, 0.0, 0.0, 0.5, out.c_str()), GPF_ERR_INVALID);
  ASSERT_EQ(gpf_label(h.scene, h.cfg, 0.0, 0.0, 0.0, 0.02, out.c_str()), GPF_OK) << gpf_last_error();
  for (const char* name : {"q_level1", "q_level2", "q_level3", "object_mask", "free_narrow", "free_wide"})
    EXPECT_TRUE(fs::exists(out / (std::string(name) + ".pgm"))) << name;
  const auto q = read_pgm((out / "q_level1.pgm").string());
  EXPECT_GT(std::count(q.values.begin(), q.values.end(), 255), 0);
}

TEST(CApi, RunAndTimeout) {
  Handles h("single_box.scene");
  const fs::path out = scratch("run");
  gpf_episode_result r{};
  ASSERT_EQ(gpf_config_set(h.cfg, "seed", "3"), GPF_OK);
  ASSERT_EQ(gpf_run(h.scene, h.cfg, (out / "trace.jsonl").c_str(), &r), GPF_OK) << gpf_last_error();
  EXPECT_TRUE(fs::exists(out / "trace.jsonl"));
  EXPECT_GT(r.steps, 0);
  ASSERT_EQ(gpf_config_set(h.cfg, "max_steps", "1"), GPF_OK);
  EXPECT_EQ(gpf_run(h.scene, h.cfg, (out / "t2.jsonl").c_str(), &r), GPF_ERR_TIMEOUT);
  EXPECT_TRUE(fs::exists(out / "t2.jsonl"));
  EXPECT_EQ(gpf_run(nullptr, h.cfg, nullptr, &r), GPF_ERR_INVALID);

  Handles empty("empty.scene");
  ASSERT_EQ(gpf_run(empty.scene, empty.cfg, nullptr, &r), GPF_OK);
  EXPECT_EQ(r.cleared, 1);
  EXPECT_EQ(r.success, 0);
}

TEST(CApi, BenchWritesArtifacts) {
  Handles h("single_box.scene");
  ASSERT_EQ(gpf_config_set(h.cfg, "bench_modes", "cl"), GPF_OK);
  const fs::path out = scratch("bench");
  ASSERT_EQ(gpf_bench(h.scene, h.cfg, 1, out.c_str()), GPF_OK) << gpf_last_error();
  for (const char* f : {"summary.csv", "summary.txt", "episodes.jsonl"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_EQ(gpf_bench(h.scene, h.cfg, -1, out.c_str()), GPF_ERR_INVALID);
}
