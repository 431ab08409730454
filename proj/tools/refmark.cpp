#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "refmark/cloud_io.hpp"
#include "refmark/config.hpp"
#include "refmark/error.hpp"
#include "refmark/pipeline.hpp"
#include "refmark/report.hpp"
#include "refmark/synth.hpp"

namespace fs = std::filesystem;
using namespace refmark;

namespace {

constexpr const char* kCloudExt = ".cloud";
constexpr const char* kLabelExt = ".labels";
constexpr const char* kLinesExt = ".lines";

struct CommonOptions {
  std::string config;
  std::string channel;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
};

struct SourceOptions {
  std::string dir;
  std::string profile;
  std::size_t frames{0};
  std::uint64_t scene_seed{1};
  std::string scene;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool batch) {
  cmd->add_option("--config", o.config, "INI configuration file");
  cmd->add_option("--channel", o.channel, "histogram channel: reflectivity|intensity");
  cmd->add_option("--seed", o.seed, "RANSAC seed for the plane and line stages");
  cmd->add_option("--out", o.out, "output directory");
  if (batch) cmd->add_option("--workers", o.workers, "frames processed concurrently");
}

void add_source(CLI::App* cmd, SourceOptions& s) {
  auto* dir = cmd->add_option("--dir", s.dir, "directory of *.cloud files (+ .labels sidecars)");
  auto* profile =
      cmd->add_option("--profile", s.profile, "synthetic suite profile: test_track|highway");
  dir->excludes(profile);
  cmd->add_option("--frames", s.frames, "number of synthetic frames");
  cmd->add_option("--scene-seed", s.scene_seed, "seed of the synthetic suite");
  cmd->add_option("--scene", s.scene, "INI file with [scene] overrides");
}

PipelineConfig build_config(const CommonOptions& o) {
  PipelineConfig c = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (!o.channel.empty()) c.threshold.channel = parse_channel(o.channel);
  if (o.seed) c.set_seed(*o.seed);
  if (o.workers) c.workers = *o.workers;
  c.validate();
  return c;
}

fs::path output_dir(const CommonOptions& o) {
  fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  return dir;
}

SceneConfig scene_for(const SourceOptions& s, Profile profile, std::size_t index) {
  auto cfg = profile_config(profile, s.scene_seed, index);
  if (!s.scene.empty()) apply_scene_overrides(s.scene, cfg);
  return cfg;
}

struct Source {
  std::string dataset;
  std::size_t n{0};
  FrameSource fn;
};

Source make_source(const SourceOptions& s) {
  if (!s.dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(s.dir))
      if (e.is_regular_file() && e.path().extension() == kCloudExt) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError(fmt::format("no {} files in '{}'", kCloudExt, s.dir));
    Source src{fs::path(s.dir).filename().string(), files.size(), {}};
    src.fn = [files](std::size_t k) {
      LabeledFrame f;
      f.name = files[k].stem().string();
      f.cloud = read_cloud(files[k]);
      auto labels = fs::path(files[k]).replace_extension(kLabelExt);
      if (fs::exists(labels)) f.truth = read_labels(labels, f.cloud.size());
      return f;
    };
    return src;
  }
  if (s.profile.empty()) throw ConfigError("either --dir or --profile is required");
  if (s.frames == 0) throw ConfigError("--frames must be > 0 with --profile");
  const auto profile = parse_profile(s.profile);
  if (!s.scene.empty()) scene_for(s, profile, 0);  // surface config errors early
  Source src{std::string(to_string(profile)), s.frames, {}};
  src.fn = [s, profile](std::size_t k) {
    auto frame = generate(scene_for(s, profile, k));
    LabeledFrame f;
    f.name = frame.cloud.frame_id();
    f.cloud = std::move(frame.cloud);
    f.truth = std::move(frame.truth.labels);
    return f;
  };
  return src;
}

void print_failures(const BatchResult& b) {
  for (auto k : b.failed())
    std::cerr << fmt::format("frame {} failed: {}\n", b.frames[k].name, b.frames[k].error);
}

int cmd_run(const CommonOptions& o, const std::string& cloud_path, const std::string& truth) {
  const auto cfg = build_config(o);
  const auto cloud = read_cloud(cloud_path);
  const auto dir = output_dir(o);
  const auto stem = fs::path(cloud_path).stem().string();
  const auto r = run_frame(cloud, cfg);
  write_labels(r.labels, dir / (stem + kLabelExt));
  write_text(dir / (stem + kLinesExt), lines_text(r.lines));
  const auto& t = r.timings;
  std::cout << fmt::format(
      "{}: {} points, {} pre-filtered, {} plane inliers, {} road, {} candidates, "
      "{} accepted lines, {} marking points\n",
      stem, cloud.size(), r.pb.size(), r.pc.size(), r.road.size(), r.candidates.size(),
      r.accepted_lines(), r.predicted_markings());
  std::cout << fmt::format(
      "timing ms: prefilter {:.2f} plane {:.2f} normals {:.2f} region {:.2f} "
      "threshold {:.2f} lines {:.2f} total {:.2f}\n",
      t.prefilter, t.plane, t.normals, t.region, t.threshold, t.lines, t.total);
  if (!r.stopped_at.empty()) std::cout << "stopped early: empty output of " << r.stopped_at << "\n";
  if (!truth.empty()) {
    const auto labels = read_labels(truth, cloud.size());
    std::vector<ReportRow> rows{{stem, evaluate(r.labels, labels,
                                                std::string(to_string(cfg.threshold.channel)))}};
    write_text(dir / "report.csv", report_csv(rows));
    write_text(dir / "report.json", report_json(rows));
    std::cout << report_csv(rows);
  }
  return 0;
}

int cmd_batch(const CommonOptions& o, const SourceOptions& s, bool save_frames) {
  const auto cfg = build_config(o);
  const auto src = make_source(s);
  const auto dir = output_dir(o);
  FrameSink sink;
  if (save_frames)
    sink = [&dir](std::size_t, const LabeledFrame& f, const FrameResult& r) {
      write_labels(r.labels, dir / (f.name + kLabelExt));
      write_text(dir / (f.name + kLinesExt), lines_text(r.lines));
    };
  const auto batch = run_batch(src.n, src.fn, cfg, sink);
  std::vector<ReportRow> rows{{src.dataset, batch.report}};
  std::vector<FrameSummary> failures;
  for (auto k : batch.failed()) failures.push_back(batch.frames[k]);
  write_text(dir / "report.csv", report_csv(rows));
  write_text(dir / "report.json", report_json(rows, failures));
  write_text(dir / "frames.csv", frames_csv(batch.frames));
  std::cout << report_csv(rows);
  std::cout << fmt::format("{} frames, {} failed\n", batch.frames.size(), failures.size());
  print_failures(batch);
  return 0;
}

int cmd_compare(const CommonOptions& o, const SourceOptions& s) {
  const auto cfg = build_config(o);
  const auto src = make_source(s);
  const auto dir = output_dir(o);
  const auto cmp = compare_channels(src.n, src.fn, cfg);
  std::vector<ReportRow> rows{{src.dataset, cmp.reflectivity.report},
                              {src.dataset, cmp.intensity.report}};
  std::vector<FrameSummary> failures;
  for (auto k : cmp.reflectivity.failed()) failures.push_back(cmp.reflectivity.frames[k]);
  const auto table = channel_table(src.dataset, cmp);
  write_text(dir / "channels.txt", table);
  write_text(dir / "report.csv", report_csv(rows));
  write_text(dir / "report.json", report_json(rows, failures));
  std::cout << table;
  print_failures(cmp.reflectivity);
  return 0;
}

int cmd_synth(const SourceOptions& s, std::uint64_t seed, const std::string& out,
              const std::string& layout_name) {
  if (s.profile.empty()) throw ConfigError("--profile is required");
  if (s.frames == 0) throw ConfigError("--frames must be > 0");
  const auto profile = parse_profile(s.profile);
  const auto layout = parse_layout(layout_name);
  CommonOptions o;
  o.out = out;
  const auto dir = output_dir(o);
  auto opts = s;
  opts.scene_seed = seed;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(s.frames); ++i) {
    const auto frame = generate(scene_for(opts, profile, static_cast<std::size_t>(i)));
    // Only returns are stored, so the sidecar skips invalid slots as well.
    std::vector<Label> labels;
    labels.reserve(frame.cloud.valid_count());
    for (std::size_t k = 0; k < frame.cloud.size(); ++k)
      if (frame.cloud[k].valid) labels.push_back(frame.truth.labels[k]);
    const auto name = frame.cloud.frame_id();
    write_cloud(compact(frame.cloud), dir / (name + kCloudExt), layout);
    write_labels(labels, dir / (name + kLabelExt));
  }
  std::cout << fmt::format("wrote {} {} frames to {}\n", s.frames, s.profile, dir.string());
  return 0;
}

int cmd_eval(const std::string& pred, const std::string& truth, const std::string& out) {
  const auto p = read_labels(pred);
  const auto t = read_labels(truth, p.size());
  std::vector<ReportRow> rows{{fs::path(pred).stem().string(), evaluate(p, t)}};
  if (!out.empty()) {
    CommonOptions o;
    o.out = out;
    const auto dir = output_dir(o);
    write_text(dir / "report.csv", report_csv(rows));
    write_text(dir / "report.json", report_json(rows));
  }
  std::cout << report_csv(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Road-marking extraction from lidar reflectivity"};
  app.require_subcommand(1);

  CommonOptions common;
  SourceOptions source;

  auto* run = app.add_subcommand("run", "process one cloud file");
  std::string cloud_path, truth_path;
  run->add_option("cloud", cloud_path, "input cloud file")->required();
  run->add_option("--truth", truth_path, "ground-truth label sidecar");
  add_common(run, common, false);

  auto* batch = app.add_subcommand("batch", "process a directory or a synthetic suite");
  bool save_frames = false;
  add_common(batch, common, true);
  add_source(batch, source);
  batch->add_flag("--save-frames", save_frames, "write labels and lines for every frame");

  auto* cmp = app.add_subcommand("compare-channels", "reflectivity vs intensity on one set");
  add_common(cmp, common, true);
  add_source(cmp, source);

  auto* synth = app.add_subcommand("synth", "write a synthetic suite to disk");
  std::uint64_t synth_seed = 1;
  std::string synth_out = ".", layout = "binary";
  synth->add_option("--profile", source.profile, "test_track|highway")->required();
  synth->add_option("--frames", source.frames, "number of frames")->required();
  synth->add_option("--seed", synth_seed, "suite seed");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--layout", layout, "text|binary");
  synth->add_option("--scene", source.scene, "INI file with [scene] overrides");

  auto* eval = app.add_subcommand("eval", "score predicted labels against ground truth");
  std::string pred_path, eval_truth, eval_out;
  eval->add_option("predicted", pred_path, "predicted label file")->required();
  eval->add_option("truth", eval_truth, "ground-truth label file")->required();
  eval->add_option("--out", eval_out, "directory for report.csv and report.json");

  auto* defaults = app.add_subcommand("defaults", "print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(common, cloud_path, truth_path);
    if (*batch) return cmd_batch(common, source, save_frames);
    if (*cmp) return cmd_compare(common, source);
    if (*synth) return cmd_synth(source, synth_seed, synth_out, layout);
    if (*eval) return cmd_eval(pred_path, eval_truth, eval_out);
    if (*defaults) {
      write_config(PipelineConfig{}, std::cout);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
