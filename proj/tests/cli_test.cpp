#include "graspforge/cli/cli.hpp"
#include "graspforge/cli/run_config.hpp"
#include "graspforge/error.hpp"
#include "graspforge/geometry/mesh.hpp"
#include "graspforge/io.hpp"
#include "graspforge/scene/scene.hpp"
#include "json.hpp"

#include <fmt/format.h>
#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

using namespace graspforge;
namespace fs = std::filesystem;

namespace {

template <class F>
std::string error_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return "";
}

struct CliRun {
  int code = -1;
  std::string out, err;
  nlohmann::json line;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "graspforge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  if (!r.out.empty() && r.out.front() == '{') r.line = nlohmann::json::parse(r.out);
  return r;
}

// Fresh directory per test.
class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("graspforge_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("GRASPFORGE_CONFIG");
  }
  void TearDown() override {
    unsetenv("GRASPFORGE_CONFIG");
    fs::remove_all(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small but complete pipeline settings.
  std::string write_small_config() const {
    const std::string text = fmt::format(
        "seed = 7\n"
        "jobs = 2\n"
        "[paths]\n"
        "scenes = \"{0}/scenes\"\n"
        "candidates = \"{0}/candidates.json\"\n"
        "dataset = \"{0}/dataset.idx\"\n"
        "checkpoint = \"{0}/model.gfqn\"\n"
        "metrics = \"{0}/metrics.csv\"\n"
        "stats = \"{0}/stats.json\"\n"
        "report = \"{0}/report\"\n"
        "[scenes]\n"
        "library_size = 4\n"
        "max_cables = 4\n"
        "[dataset]\n"
        "scene_count = 5\n"
        "target_samples = 30\n"
        "[sampler]\n"
        "n = 8\n"
        "patch_size = 16\n"
        "[train]\n"
        "epochs = 2\n"
        "[eval]\n"
        "trials = 4\n"
        "min_cables = 2\n"
        "max_cables = 4\n"
        "candidates = 10\n",
        dir_.string());
    write_file_atomic(dir_ / "small.toml", text);
    return path("small.toml");
  }

  fs::path dir_;
};

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[e.path().string()] = read_file(e.path());
  }
  return out;
}

}  // namespace

TEST(RunConfig, DefaultsRoundTripThroughText) {
  RunConfig a;
  const std::string text = a.to_text();
  RunConfig b;
  b.settings().seed = 99;
  b.settings().paths.report = "elsewhere";
  b.merge_text(text);
  EXPECT_EQ(b.to_text(), text);
  EXPECT_EQ(a.get("policy.lambda"), "0.2");
  EXPECT_EQ(a.get("train.epochs"), "50");
}

TEST(RunConfig, ParsesSectionsCommentsAndQuotes) {
  RunConfig c;
  c.merge_text(
      "# run settings\n"
      "seed = 123  # trailing comment\n"
      "\n"
      "[policy]\n"
      "kind = random\n"
      "lambda = 0.5\n"
      "[paths]\n"
      "dataset = \"my data.idx\"\n"
      "[train]\n"
      "augment = false\n");
  EXPECT_EQ(c.settings().seed, 123u);
  EXPECT_EQ(c.settings().policy.kind, PolicyKind::random);
  EXPECT_DOUBLE_EQ(c.settings().policy.lambda, 0.5);
  EXPECT_EQ(c.settings().paths.dataset, "my data.idx");
  EXPECT_FALSE(c.settings().train.augment);
}

TEST(RunConfig, RejectsBadInput) {
  RunConfig c;
  EXPECT_EQ(error_kind([&] { c.set("no.such.key", "1"); }), "InvalidConfig");
  EXPECT_EQ(error_kind([&] { c.set("train.epochs", "ten"); }), "InvalidConfig");
  EXPECT_EQ(error_kind([&] { c.set("train.epochs", "10.5"); }), "InvalidConfig");
  EXPECT_EQ(error_kind([&] { c.set("policy.lambda", "nan"); }), "InvalidConfig");
  EXPECT_EQ(error_kind([&] { c.set("train.augment", "yes"); }), "InvalidConfig");
  EXPECT_EQ(error_kind([&] { c.set("policy.kind", "greedy"); }), "InvalidConfig");
  EXPECT_EQ(error_kind([&] { c.merge_text("seed 5\n"); }), "InvalidConfig");
  EXPECT_EQ(error_kind([&] { c.merge_text("[paths\n"); }), "InvalidConfig");
  EXPECT_EQ(error_kind([&] { c.load("/nonexistent/run.toml"); }), "ConfigNotFound");
}

TEST(RunConfig, EvalConfigUsesSharedSceneSettings) {
  RunConfig c;
  c.set("sampler.patch_size", "48");
  c.set("eval.min_cables", "6");
  c.set("eval.candidates", "33");
  const EvalConfig e = c.settings().eval_config();
  EXPECT_EQ(e.sampler.patch_size, 48);
  EXPECT_EQ(e.sampler.n, 33);
  EXPECT_EQ(e.scenes.min_cables, 6);
  EXPECT_EQ(e.trials, 200);
  EXPECT_EQ(c.settings().train_config().seed, c.settings().seed);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  const auto r = cli({"train", "--no-such-flag"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--dataset"), std::string::npos) << "usage errors list the valid flags";
  EXPECT_EQ(cli({"train", "--train.epochs", "many"}).code, kExitUsage);
  EXPECT_EQ(cli({"train", "--help"}).code, kExitOk);
}

TEST_F(Cli, MissingDatasetIsADomainError) {
  const auto r = cli({"train", "--dataset", path("missing.idx")});
  EXPECT_EQ(r.code, kExitDomainError);
  EXPECT_EQ(r.line["status"], "error");
  EXPECT_EQ(r.line["error"], "DatasetNotFound");
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
}

TEST_F(Cli, DecomposeWritesManifestAndPieces) {
  const std::vector<Vec2> l_shape = {{0, 0}, {40, 0}, {40, 10}, {10, 10}, {10, 40}, {0, 40}};
  write_obj(dir_ / "cable.obj", extrude_polygon(l_shape, 0, 10));
  const auto before = snapshot(dir_);
  const auto r = cli({"decompose", "--mesh", path("cable.obj"), "--tol", "0.05", "--out", path("pieces")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.line["status"], "ok");
  const auto manifest = nlohmann::json::parse(read_file(dir_ / "pieces" / "manifest.json"));
  const int pieces = r.line["pieces"].get<int>();
  EXPECT_GE(pieces, 2);
  EXPECT_EQ(static_cast<int>(manifest["pieces"].size()), pieces);
  for (const auto& p : manifest["pieces"]) {
    EXPECT_TRUE(fs::exists(dir_ / "pieces" / p["file"].get<std::string>()));
    EXPECT_LE(p["concavity"].get<double>(), 0.05);
  }
  for (const auto& [file, bytes] : before) EXPECT_EQ(read_file(file), bytes);
}

TEST_F(Cli, FlagsOverrideConfigFileOverrideEnvironment) {
  write_file_atomic(dir_ / "env.toml", "[paths]\ndataset = \"" + path("from_env.idx") + "\"\ncheckpoint = \"" +
                                           path("env.gfqn") + "\"\n");
  write_file_atomic(dir_ / "file.toml", "[paths]\ndataset = \"" + path("from_file.idx") + "\"\n");
  setenv("GRASPFORGE_CONFIG", path("env.toml").c_str(), 1);
  auto r = cli({"train"});
  EXPECT_NE(r.line["message"].get<std::string>().find("from_env.idx"), std::string::npos);
  r = cli({"train", "--config", path("file.toml")});
  EXPECT_NE(r.line["message"].get<std::string>().find("from_file.idx"), std::string::npos);
  r = cli({"train", "--config", path("file.toml"), "--dataset", path("from_flag.idx")});
  EXPECT_NE(r.line["message"].get<std::string>().find("from_flag.idx"), std::string::npos);
  r = cli({"train", "--config", path("file.toml"), "--paths.dataset", path("long_flag.idx")});
  EXPECT_NE(r.line["message"].get<std::string>().find("long_flag.idx"), std::string::npos);
  setenv("GRASPFORGE_CONFIG", path("absent.toml").c_str(), 1);
  EXPECT_EQ(cli({"train"}).line["error"], "ConfigNotFound");
}

TEST_F(Cli, RefusesToOverwriteInputs) {
  const std::string cfg = write_small_config();
  ASSERT_EQ(cli({"make-scenes", "--config", cfg}).code, kExitOk);
  ASSERT_EQ(cli({"sample", "--config", cfg}).code, kExitOk);
  const auto r = cli({"label", "--config", cfg, "--out", path("candidates.json")});
  EXPECT_EQ(r.code, kExitDomainError);
  EXPECT_EQ(r.line["error"], "InvalidArgument");
}

TEST_F(Cli, PipelineMatchesInMemoryDatasetAndLeavesInputsAlone) {
  const std::string cfg = write_small_config();
  ASSERT_EQ(cli({"make-scenes", "--config", cfg}).code, kExitOk);
  const auto scenes = snapshot(dir_ / "scenes");
  ASSERT_EQ(cli({"sample", "--config", cfg}).code, kExitOk);
  ASSERT_EQ(cli({"label", "--config", cfg}).code, kExitOk);
  EXPECT_EQ(snapshot(dir_ / "scenes"), scenes);

  RunConfig rc;
  rc.load(cfg);
  const Dataset ds = generate_dataset(rc.settings().dataset_config(), 2);
  write_dataset(ds, dir_ / "direct.idx");
  EXPECT_EQ(read_file(dir_ / "dataset.idx"), read_file(dir_ / "direct.idx"));
  EXPECT_EQ(read_file(dir_ / "dataset.bin"), read_file(dir_ / "direct.bin"));
  EXPECT_EQ(read_file(dir_ / "dataset.summary.json"), read_file(dir_ / "direct.summary.json"));

  const auto inputs = snapshot(dir_);
  const auto t = cli({"train", "--config", cfg});
  ASSERT_EQ(t.code, kExitOk) << t.err;
  EXPECT_EQ(t.line["epochs"], 2);
  for (const auto& [file, bytes] : inputs) EXPECT_EQ(read_file(file), bytes) << file;
  const auto e = cli({"evaluate", "--config", cfg, "--policy", "cgcnn"});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  EXPECT_EQ(e.line["trials"], 4);
  const auto rep = cli({"report", "--config", cfg});
  ASSERT_EQ(rep.code, kExitOk) << rep.err;
  EXPECT_NE(read_file(dir_ / "report" / "success_by_cable_count.svg").find("<svg"), std::string::npos);
  EXPECT_NE(read_file(dir_ / "report" / "loss_curve.svg").find("<polyline"), std::string::npos);
}

TEST_F(Cli, EvaluateIsByteIdenticalAcrossRuns) {
  const std::string cfg = write_small_config();
  const auto a = cli({"evaluate", "--config", cfg, "--policy", "random", "--trials", "6", "--seed", "7", "--out",
                      path("a.json")});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  const auto b = cli({"evaluate", "--config", cfg, "--policy", "random", "--trials", "6", "--seed", "7", "--jobs",
                      "1", "--out", path("b.json")});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  EXPECT_EQ(read_file(dir_ / "a.json"), read_file(dir_ / "b.json"));
  EXPECT_EQ(read_file(dir_ / "a.csv"), read_file(dir_ / "b.csv"));
  EXPECT_EQ(cli({"evaluate", "--config", cfg, "--policy", "cgcnn", "--checkpoint", path("none.gfqn")}).line["error"],
            "CheckpointNotFound");
}

TEST(Report, StatsRoundTripAndCharts) {
  EvalStats s;
  s.policy = "cgcnn";
  s.overall = wilson(7, 10);
  s.failures_by_reason = {{"multi_object", 2}, {"no_candidates", 1}};
  s.by_cable_count = {{5, wilson(3, 4)}, {9, wilson(4, 6)}};
  const EvalStats back = parse_stats(s.to_json());
  EXPECT_EQ(back.to_json(), s.to_json());
  EXPECT_EQ(error_kind([] { parse_stats("{\"policy\": 1}"); }), "InvalidStats");
  EXPECT_EQ(error_kind([] { parse_stats("not json"); }), "InvalidStats");

  EvalStats r = s;
  r.policy = "random";
  const std::string chart = success_chart_svg({s, r});
  std::size_t bars = 0;
  for (auto p = chart.find("<rect x="); p != std::string::npos; p = chart.find("<rect x=", p + 1)) ++bars;
  EXPECT_EQ(bars, 1u + 4u);  // frame plus two policies at two cable counts
  EXPECT_NE(chart.find("cgcnn (70.0%)"), std::string::npos);

  const std::string curve = loss_curve_svg({{1, 0.7, 0.6, 0.5, 0.5}, {2, 0.5, 0.7, 0.6, 0.6}, {3, 0.3, 0.8, 0.7, 0.7}});
  EXPECT_EQ(std::count(curve.begin(), curve.end(), ','), 2 * 3);
}
