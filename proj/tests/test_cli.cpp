#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include "pgm.hpp"

namespace fs = std::filesystem;
using grasppf::test::read_bytes;
using grasppf::test::read_pgm;

namespace {

struct Exit {
  int code = -1;
  std::string out;
};

Exit cli(const std::string& args) {
  const std::string cmd = std::string(GRASP_PF_BIN) + " " + args + " 2>/dev/null";
  Exit r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(GRASPPF_DATA_DIR) + "/" + name; }

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("grasppf_cli_" + name);
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST(Cli, BadScenePathIsConfigError) {
  EXPECT_EQ(cli("render --scene /nonexistent.scene --out " + scratch("bad")).code, 2);
  EXPECT_EQ(cli("run --scene /nonexistent.scene --out " + scratch("bad")).code, 2);
}

TEST(Cli, UsageErrorsAreConfigErrors) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("render").code, 2);
  EXPECT_EQ(cli("run --scene " + data("single_box.scene") + " --params nonsense=1").code, 2);
  EXPECT_EQ(cli("run --scene " + data("single_box.scene") + " --mode sideways").code, 2);
}

TEST(Cli, RenderEmptySceneHasNoObjectPixels) {
  const std::string out = scratch("render_empty");
  const Exit r = cli("render --scene " + data("empty.scene") + " --out " + out);
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\"object_pixels\":0"), std::string::npos) << r.out;
  const auto ids = read_pgm(out + "/object_id.pgm");
  ASSERT_EQ(ids.values.size(), 128u * 128u);
  EXPECT_TRUE(std::all_of(ids.values.begin(), ids.values.end(), [](int v) { return v < 2; }));
}

TEST(Cli, RenderClutterHasObjectPixels) {
  const std::string out = scratch("render_clutter");
  ASSERT_EQ(cli("render --scene " + data("bench_clutter_12.scene") + " --out " + out).code, 0);
  const auto ids = read_pgm(out + "/object_id.pgm");
  EXPECT_GT(std::count_if(ids.values.begin(), ids.values.end(), [](int v) { return v >= 2; }), 500);
  const auto depth = read_pgm(out + "/depth.pgm");
  EXPECT_EQ(depth.maxval, 65535);
}

TEST(Cli, LabelEmptySceneIsAllZero) {
  const std::string out = scratch("label_empty");
  ASSERT_EQ(cli("label --scene " + data("empty.scene") + " --out " + out).code, 0);
  for (const char* name : {"q_level1", "q_level2", "q_level3", "object_mask"}) {
    const auto img = read_pgm(out + "/" + name + ".pgm");
    ASSERT_EQ(img.values.size(), 128u * 128u) << name;
    EXPECT_TRUE(std::all_of(img.values.begin(), img.values.end(), [](int v) { return v == 0; })) << name;
  }
}

TEST(Cli, LabelBoxHasQualityBandAndIsReproducible) {
  const std::string a = scratch("label_a"), b = scratch("label_b");
  const std::string args = "label --scene " + data("single_box.scene") + " --alpha 0 --depth 0.02 --out ";
  ASSERT_EQ(cli(args + a).code, 0);
  ASSERT_EQ(cli(args + b).code, 0);
  const auto q = read_pgm(a + "/q_level3.pgm");
  EXPECT_GT(std::count(q.values.begin(), q.values.end(), 255), 10);
  for (const char* name : {"q_level1", "q_level2", "q_level3", "object_mask", "free_narrow", "free_wide"})
    EXPECT_EQ(read_bytes(a + "/" + name + ".pgm"), read_bytes(b + "/" + name + ".pgm")) << name;
}

TEST(Cli, LabelRejectsEulerOutOfBounds) {
  EXPECT_EQ(cli("label --scene " + data("single_box.scene") + " --beta 1.3 --out " + scratch("label_bad")).code, 2);
}

TEST(Cli, RunIdealBoxSucceedsAndReproduces) {
  const std::string a = scratch("run_a"), b = scratch("run_b");
  const std::string args = "run --scene " + data("single_box.scene") + " --seed 2 --out ";
  const Exit ra = cli(args + a);
  EXPECT_EQ(ra.code, 0) << ra.out;
  EXPECT_NE(ra.out.find("\"success\":true"), std::string::npos) << ra.out;
  EXPECT_NE(ra.out.find("\"seed\":2"), std::string::npos);
  const Exit rb = cli(args + b);
  EXPECT_EQ(read_bytes(a + "/trace.jsonl"), read_bytes(b + "/trace.jsonl"));
  EXPECT_FALSE(read_bytes(a + "/trace.jsonl").empty());
}

TEST(Cli, RunOneStepBudgetTimesOut) {
  const Exit r = cli("run --scene " + data("single_box.scene") + " --params max_steps=1 --out " + scratch("run_to"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("timeout"), std::string::npos) << r.out;
}

TEST(Cli, RunEmptySceneIsCleared) {
  const Exit r = cli("run --scene " + data("empty.scene") + " --out " + scratch("run_empty"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("cleared"), std::string::npos) << r.out;
}

TEST(Cli, BenchOneEpisodeGivesOneRow) {
  const std::string out = scratch("bench1");
  const Exit r = cli("bench --scene " + data("single_box.scene") + " --episodes 1 --params bench_modes=cl --out " + out);
  ASSERT_EQ(r.code, 0);
  const std::string csv = read_bytes(out + "/summary.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2) << csv;
  EXPECT_EQ(csv.rfind("closed_loop,1,", csv.find('\n') + 1), csv.find('\n') + 1) << csv;
  EXPECT_NE(r.out.find("closed_loop"), std::string::npos);
}

TEST(Cli, BenchZeroEpisodesGivesHeaderOnlyCsv) {
  const std::string out = scratch("bench0");
  ASSERT_EQ(cli("bench --scene " + data("single_box.scene") + " --episodes 0 --out " + out).code, 0);
  EXPECT_EQ(read_bytes(out + "/summary.csv"), "mode,episodes,successes,rate,ci_low,ci_high,timeouts,cleared\n");
}
