#include "graspforge/cli/cli.hpp"
#include "graspforge/cli/run_config.hpp"

#include "graspforge/depthproc/image.hpp"
#include "graspforge/error.hpp"
#include "graspforge/geometry/decompose.hpp"
#include "graspforge/io.hpp"
#include "graspforge/parallel.hpp"
#include "json.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <deque>
#include <functional>
#include <map>
#include <optional>

namespace graspforge {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

fs::path required_path(const std::string& value, const char* key) {
  if (value.empty()) throw Error("InvalidConfig", fmt::format("{} is not set", key));
  return fs::path(value);
}

bool same_file(const fs::path& a, const fs::path& b) {
  std::error_code ec;
  return fs::weakly_canonical(a, ec) == fs::weakly_canonical(b, ec);
}

// Outputs are always new files; refuse to write over an input.
void require_distinct(const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
  for (const auto& out : outputs) {
    for (const auto& in : inputs) {
      if (same_file(in, out)) throw Error("InvalidArgument", fmt::format("output {} would overwrite input", out.string()));
    }
  }
}

Json parse_json_file(const fs::path& path, const char* missing_kind, const char* invalid_kind) {
  try {
    return Json::parse(read_file(path, missing_kind));
  } catch (const Json::exception& e) {
    throw Error(invalid_kind, fmt::format("{}: {}", path.string(), e.what()));
  }
}

Json pose_json(const GraspPose& p) { return {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"theta", p.theta}, {"w", p.w}}; }

GraspPose pose_from_json(const Json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>(), j.at("theta").get<double>(),
          j.at("w").get<double>()};
}

fs::path sibling(const fs::path& path, const char* extension) {
  fs::path p = path;
  p.replace_extension(extension);
  return p;
}

// ---------------------------------------------------------------------------

Json cmd_decompose(const Settings& s, int) {
  const fs::path mesh_path = required_path(s.paths.mesh, "paths.mesh");
  const fs::path out_dir = required_path(s.paths.decomposition, "paths.decomposition");
  const TriMesh mesh = read_obj(mesh_path);
  const DecompositionResult result = decompose(mesh, s.dataset.scenes.decompose);
  require_distinct({mesh_path}, {out_dir / "manifest.json"});
  for (std::size_t i = 0; i < result.pieces.size(); ++i) {
    require_distinct({mesh_path}, {out_dir / fmt::format("piece_{:03}.obj", i)});
  }
  write_decomposition(result, out_dir, mesh_path.filename().string());
  double worst = 0.0;
  for (double c : result.concavity) worst = std::max(worst, c);
  return {{"pieces", result.pieces.size()},
          {"max_concavity", worst},
          {"tol", result.concavity_tol},
          {"budget_exceeded", result.budget_exceeded},
          {"manifest", (out_dir / "manifest.json").string()}};
}

// Scene index written by make-scenes: one entry per scene index, with
// overfilled draws recorded so later stages keep the scene numbering.
Json cmd_make_scenes(const Settings& s, int jobs) {
  const fs::path dir = required_path(s.paths.scenes, "paths.scenes");
  const SceneGenConfig& cfg = s.dataset.scenes;
  cfg.validate();
  if (s.dataset.scene_count < 1) throw Error("InvalidArgument", "dataset.scene_count must be >= 1");
  const auto library = build_library(cfg, jobs);
  const int count = s.dataset.scene_count;
  std::vector<std::optional<GeneratedScene>> scenes(static_cast<std::size_t>(count));
  parallel_for(scenes.size(), jobs, [&](std::size_t i) {
    try {
      scenes[i] = generate_scene(cfg, library, dataset_scene_seed(s.dataset_config().seed, static_cast<int>(i)));
    } catch (const Error& e) {
      if (e.kind() != "Overfilled") throw;
    }
  });
  std::vector<DepthImage> depth(scenes.size());
  parallel_for(scenes.size(), jobs, [&](std::size_t i) {
    if (scenes[i]) depth[i] = observe(cfg, *scenes[i], 0);
  });

  Json index = {{"seed", s.seed}, {"scenes", Json::array()}};
  int written = 0;
  for (int i = 0; i < count; ++i) {
    const auto& gs = scenes[static_cast<std::size_t>(i)];
    const std::uint64_t seed = dataset_scene_seed(s.dataset_config().seed, i);
    if (!gs) {
      index["scenes"].push_back({{"index", i}, {"seed", seed}, {"status", "overfilled"}});
      continue;
    }
    const std::string manifest = fmt::format("scene_{:04}.json", i);
    const std::string image = fmt::format("scene_{:04}.gfd", i);
    write_scene(gs->scene, dir / manifest);
    write_gfd1(dir / image, depth[static_cast<std::size_t>(i)]);
    index["scenes"].push_back({{"index", i},
                               {"seed", seed},
                               {"status", "ok"},
                               {"manifest", manifest},
                               {"depth", image},
                               {"friction", gs->friction},
                               {"cable_count", gs->scene.cables.size()}});
    ++written;
  }
  write_file_atomic(dir / "index.json", index.dump(2) + "\n");
  return {{"scenes", count},
          {"written", written},
          {"skipped_overfilled", count - written},
          {"index", (dir / "index.json").string()}};
}

struct LoadedScenes {
  fs::path dir;
  Json entries;
  std::vector<std::optional<GeneratedScene>> scenes;  // per entry; empty unless status ok
};

LoadedScenes load_scenes(const fs::path& dir, const Settings& s) {
  LoadedScenes out;
  out.dir = dir;
  const Json index = parse_json_file(dir / "index.json", "ScenesNotFound", "InvalidScenes");
  try {
    out.entries = index.at("scenes");
    ModelCache cache;
    for (const auto& e : out.entries) {
      if (e.at("status") != "ok") {
        out.scenes.emplace_back();
        continue;
      }
      GeneratedScene gs;
      gs.scene = read_scene(dir / e.at("manifest").get<std::string>(), s.dataset.scenes.decompose, &cache);
      gs.friction = e.at("friction").get<double>();
      gs.seed = e.at("seed").get<std::uint64_t>();
      out.scenes.emplace_back(std::move(gs));
    }
  } catch (const Json::exception& e) {
    throw Error("InvalidScenes", e.what());
  }
  return out;
}

Json cmd_sample(const Settings& s, int jobs) {
  const fs::path dir = required_path(s.paths.scenes, "paths.scenes");
  const fs::path out_path = required_path(s.paths.candidates, "paths.candidates");
  const fs::path blob_path = sibling(out_path, ".bin");
  require_distinct({dir / "index.json"}, {out_path, blob_path});
  s.dataset.sampler.validate();
  const LoadedScenes loaded = load_scenes(dir, s);

  struct Result {
    std::vector<GraspCandidate> candidates;
    bool no_candidates = false;
  };
  std::vector<Result> results(loaded.scenes.size());
  parallel_for(results.size(), jobs, [&](std::size_t i) {
    if (!loaded.scenes[i]) return;
    try {
      results[i].candidates = sample_scene(s.dataset.scenes, *loaded.scenes[i], s.dataset.sampler);
    } catch (const Error& e) {
      if (e.kind() != "NoCandidates") throw;
      results[i].no_candidates = true;
    }
  });

  std::string blob;
  // Scene directory relative to the candidate index, so the pair can move together.
  const fs::path base = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
  Json doc = {{"scenes", fs::proximate(dir, base).generic_string()}, {"blob", blob_path.filename().string()},
              {"entries", Json::array()}};
  int total = 0, empty = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    Json entry = {{"index", loaded.entries[i].at("index")}, {"seed", loaded.entries[i].at("seed")}};
    if (!loaded.scenes[i]) {
      entry["status"] = "overfilled";
    } else if (results[i].no_candidates) {
      entry["status"] = "no_candidates";
      ++empty;
    } else {
      entry["status"] = "ok";
      entry["manifest"] = loaded.entries[i].at("manifest");
      entry["friction"] = loaded.entries[i].at("friction");
      entry["candidates"] = Json::array();
      for (const auto& c : results[i].candidates) {
        entry["candidates"].push_back({{"pose", pose_json(c.pose)}, {"patch_offset", blob.size()}});
        blob += encode_gfd1(c.patch);
        ++total;
      }
    }
    doc["entries"].push_back(std::move(entry));
  }
  write_file_atomic(blob_path, blob);
  write_file_atomic(out_path, doc.dump(2) + "\n");
  return {{"scenes", results.size()}, {"candidates", total}, {"skipped_no_candidates", empty}, {"output", out_path.string()}};
}

Json cmd_label(const Settings& s, int jobs) {
  const fs::path cand_path = required_path(s.paths.candidates, "paths.candidates");
  const fs::path out_path = required_path(s.paths.dataset, "paths.dataset");
  const Json doc = parse_json_file(cand_path, "CandidatesNotFound", "InvalidCandidates");
  s.dataset.gripper.validate();
  if (s.dataset.target_samples < 0) throw Error("InvalidArgument", "dataset.target_samples must be >= 0");

  Dataset ds;
  try {
    const fs::path base = cand_path.has_parent_path() ? cand_path.parent_path() : fs::path(".");
    const fs::path scenes_dir = base / doc.at("scenes").get<std::string>();
    const fs::path blob_path = base / doc.at("blob").get<std::string>();
    require_distinct({cand_path, blob_path, scenes_dir / "index.json"},
                     {out_path, sibling(out_path, ".bin"), sibling(out_path, ".summary.json")});
    const std::string blob = read_file(blob_path, "CandidatesNotFound");
    const Json& entries = doc.at("entries");

    std::vector<SceneSamples> results(entries.size());
    std::vector<GeneratedScene> scenes(entries.size());
    std::vector<std::vector<GraspCandidate>> candidates(entries.size());
    ModelCache cache;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const Json& e = entries[i];
      const std::string status = e.at("status").get<std::string>();
      results[i].overfilled = status == "overfilled";
      results[i].no_candidates = status == "no_candidates";
      if (status != "ok") continue;
      scenes[i].scene = read_scene(scenes_dir / e.at("manifest").get<std::string>(), s.dataset.scenes.decompose, &cache);
      scenes[i].friction = e.at("friction").get<double>();
      scenes[i].seed = e.at("seed").get<std::uint64_t>();
      for (const auto& c : e.at("candidates")) {
        GraspCandidate gc;
        gc.pose = pose_from_json(c.at("pose"));
        gc.patch = decode_gfd1(blob, c.at("patch_offset").get<std::size_t>());
        candidates[i].push_back(std::move(gc));
      }
    }
    parallel_for(entries.size(), jobs, [&](std::size_t i) {
      if (entries[i].at("status") != "ok") return;
      results[i].samples = label_scene(scenes[i], std::move(candidates[i]), s.dataset.gripper,
                                       entries[i].at("index").get<int>());
    });
    for (auto& r : results) {
      if (!append_scene(ds, std::move(r), s.dataset.target_samples)) break;
    }
  } catch (const Json::exception& e) {
    throw Error("InvalidCandidates", e.what());
  }
  write_dataset(ds, out_path);
  return {{"samples", ds.summary.samples},
          {"positives", ds.summary.positives},
          {"negatives", ds.summary.negatives},
          {"scenes", ds.summary.scenes},
          {"output", out_path.string()}};
}

Json cmd_train(const Settings& s, int jobs) {
  const fs::path data_path = required_path(s.paths.dataset, "paths.dataset");
  const fs::path ckpt_path = required_path(s.paths.checkpoint, "paths.checkpoint");
  const fs::path metrics_path = required_path(s.paths.metrics, "paths.metrics");
  require_distinct({data_path, sibling(data_path, ".bin")}, {ckpt_path, metrics_path});
  const Dataset ds = read_dataset(data_path);
  const TrainResult r = train(ds.samples, s.train_config(), jobs);
  save_checkpoint(r.net, ckpt_path);
  write_metrics_csv(r.log, metrics_path);
  const EpochMetrics& best = r.log[static_cast<std::size_t>(r.best_epoch - 1)];
  return {{"samples", ds.samples.size()},
          {"epochs", r.log.size()},
          {"best_epoch", r.best_epoch},
          {"best_val_acc", best.val_acc},
          {"first_loss", r.log.front().train_loss},
          {"final_loss", r.log.back().train_loss},
          {"checkpoint", ckpt_path.string()},
          {"metrics", metrics_path.string()}};
}

Json cmd_evaluate(const Settings& s, int jobs) {
  const fs::path stats_path = required_path(s.paths.stats, "paths.stats");
  const fs::path csv_path = sibling(stats_path, ".csv");
  s.policy.validate();
  std::optional<QualityNet> net;
  if (s.policy.kind == PolicyKind::cgcnn) {
    const fs::path ckpt = required_path(s.paths.checkpoint, "paths.checkpoint");
    require_distinct({ckpt}, {stats_path, csv_path});
    net = load_checkpoint(ckpt);
    if (net->input_size != s.dataset.sampler.patch_size) {
      throw Error("ShapeMismatch", fmt::format("checkpoint expects {} px patches, sampler.patch_size is {}",
                                               net->input_size, s.dataset.sampler.patch_size));
    }
  }
  const EvalStats stats = evaluate_policy({s.policy, net ? &*net : nullptr}, s.eval_config(), jobs);
  write_file_atomic(stats_path, stats.to_json() + "\n");
  write_file_atomic(csv_path, stats.to_csv());
  return {{"policy", stats.policy},
          {"trials", stats.overall.trials},
          {"successes", stats.overall.successes},
          {"rate", stats.overall.rate},
          {"wilson_low", stats.overall.wilson_low},
          {"wilson_high", stats.overall.wilson_high},
          {"stats", stats_path.string()},
          {"csv", csv_path.string()}};
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

Json cmd_report(const Settings& s, int) {
  const fs::path dir = required_path(s.paths.report, "paths.report");
  std::vector<std::string> stats_files = split_list(s.report_stats);
  if (stats_files.empty() && !s.paths.stats.empty()) stats_files.push_back(s.paths.stats);
  std::vector<fs::path> inputs(stats_files.begin(), stats_files.end());
  if (!s.paths.metrics.empty()) inputs.emplace_back(s.paths.metrics);
  if (inputs.empty()) throw Error("InvalidConfig", "report needs stats files or a metrics CSV");
  const fs::path chart = dir / "success_by_cable_count.svg", curve = dir / "loss_curve.svg";
  require_distinct(inputs, {chart, curve});

  std::vector<EvalStats> stats;
  for (const auto& f : stats_files) stats.push_back(parse_stats(read_file(f, "StatsNotFound")));
  std::vector<EpochMetrics> log;
  if (!s.paths.metrics.empty()) log = read_metrics_csv(s.paths.metrics);

  Json files = Json::array();
  if (!stats.empty()) {
    write_file_atomic(chart, success_chart_svg(stats));
    files.push_back(chart.string());
  }
  if (!s.paths.metrics.empty()) {
    write_file_atomic(curve, loss_curve_svg(log));
    files.push_back(curve.string());
  }
  return {{"files", files}};
}

// ---------------------------------------------------------------------------

struct Command {
  const char* name;
  const char* help;
  std::map<std::string, std::string> aliases;  // short flag -> config key
  std::function<Json(const Settings&, int)> run;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"decompose", "convex decomposition of an OBJ mesh",
       {{"mesh", "paths.mesh"}, {"tol", "decompose.tol"}, {"out", "paths.decomposition"}}, cmd_decompose},
      {"make-scenes", "generate settled cable scenes with depth images",
       {{"out", "paths.scenes"}, {"count", "dataset.scene_count"}}, cmd_make_scenes},
      {"sample", "sample grasp candidates from every scene",
       {{"scenes", "paths.scenes"}, {"out", "paths.candidates"}}, cmd_sample},
      {"label", "label candidates with the grasp oracle into a dataset",
       {{"candidates", "paths.candidates"}, {"out", "paths.dataset"}}, cmd_label},
      {"train", "train the grasp quality network",
       {{"dataset", "paths.dataset"}, {"out", "paths.checkpoint"}, {"metrics", "paths.metrics"},
        {"epochs", "train.epochs"}},
       cmd_train},
      {"evaluate", "measure a grasp policy's success rate on fresh scenes",
       {{"policy", "policy.kind"}, {"trials", "eval.trials"}, {"checkpoint", "paths.checkpoint"},
        {"lambda", "policy.lambda"}, {"out", "paths.stats"}},
       cmd_evaluate},
      {"report", "SVG charts from stats files and training metrics",
       {{"stats", "report.stats"}, {"metrics", "paths.metrics"}, {"out", "paths.report"}}, cmd_report},
  };
  return list;
}

struct BoundFlag {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cable grasp planning: scenes, grasp sampling, labeling, training and evaluation"};
  app.name("graspforge");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string config_path;
  std::map<const CLI::App*, std::deque<BoundFlag>> bound;
  std::map<const CLI::App*, const Command*> by_app;
  for (const auto& cmd : commands()) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_path, "settings file of key = value lines");
    std::map<std::string, std::string> alias_of;
    for (const auto& [alias, key] : cmd.aliases) alias_of[key] = alias;
    auto& flags = bound[sub];
    for (const auto& info : RunConfig::keys()) {
      std::string names = "--" + info.key;
      if (auto it = alias_of.find(info.key); it != alias_of.end()) names = "--" + it->second + "," + names;
      flags.push_back({info.key, "", nullptr});
      flags.back().option = sub->add_option(names, flags.back().value, info.help);
    }
    by_app[sub] = &cmd;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const Command& cmd = *by_app.at(sub);
  auto report_error = [&](const std::string& kind, const std::string& message) {
    out << Json{{"status", "error"}, {"command", cmd.name}, {"error", kind}, {"message", message}}.dump() << "\n";
    err << "graspforge " << cmd.name << ": " << message << "\n";
  };

  RunConfig config;
  try {
    if (const char* env = std::getenv("GRASPFORGE_CONFIG"); env && *env) config.load(env);
    if (!config_path.empty()) config.load(config_path);
    for (const auto& flag : bound.at(sub)) {
      if (flag.option->count() > 0) config.set(flag.key, flag.value);
    }
  } catch (const Error& e) {
    report_error(e.kind(), e.what());
    if (e.kind() == "InvalidConfig") err << sub->help();
    return e.kind() == "InvalidConfig" ? kExitUsage : kExitDomainError;
  }

  try {
    const Settings& s = config.settings();
    const int jobs = s.jobs > 0 ? s.jobs : default_jobs();
    Json summary = cmd.run(s, jobs);
    Json line = {{"status", "ok"}, {"command", cmd.name}};
    line.update(summary);
    out << line.dump() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    report_error(e.kind(), e.what());
    return e.kind() == "InvalidConfig" ? kExitUsage : kExitDomainError;
  } catch (const std::exception& e) {
    report_error("IoError", e.what());
    return kExitDomainError;
  }
}

}  // namespace graspforge
