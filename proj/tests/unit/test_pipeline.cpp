#include <gtest/gtest.h>

#include "helpers.hpp"
#include "refmark/error.hpp"
#include "refmark/pipeline.hpp"
#include "refmark/synth.hpp"

namespace refmark {
namespace {

LabeledFrame labeled(const SynthFrame& f, std::string name = "f") {
  return {std::move(name), f.cloud, f.truth.labels};
}

TEST(Pipeline, TestTrackFrame) {
  const auto frame = generate(profile_config(Profile::test_track, 3, 0));
  const auto r = run_frame(frame.cloud, PipelineConfig{});
  EXPECT_TRUE(r.stopped_at.empty());
  EXPECT_GE(r.accepted_lines(), 2u);
  const auto truth = static_cast<double>(
      std::count(frame.truth.labels.begin(), frame.truth.labels.end(), Label::marking));
  EXPECT_NEAR(static_cast<double>(r.predicted_markings()), truth, 0.15 * truth);
  EXPECT_NO_THROW(r.check_chain());
  EXPECT_GT(r.timings.total, 0.0);
  EXPECT_GE(r.timings.total, r.timings.normals);
}

TEST(Pipeline, MaskChainAndDeterminism) {
  for (auto profile : {Profile::test_track, Profile::highway}) {
    const auto frame = generate(profile_config(profile, 4, 1));
    const auto a = run_frame(frame.cloud, PipelineConfig{});
    const auto b = run_frame(frame.cloud, PipelineConfig{});
    EXPECT_TRUE(a.same_outputs(b));
    EXPECT_TRUE(a.candidates.is_subset_of(a.road));
    EXPECT_TRUE(a.road.is_subset_of(a.pc));
    EXPECT_TRUE(a.pc.is_subset_of(a.pb));
    EXPECT_TRUE(a.pb.is_subset_of(a.pa));
    EXPECT_EQ(a.labels.size(), frame.cloud.size());
  }
}

TEST(Pipeline, DifferentSeedsMayDifferButStayConsistent) {
  const auto frame = generate(profile_config(Profile::highway, 4, 2));
  PipelineConfig cfg;
  cfg.set_seed(1234);
  EXPECT_EQ(cfg.plane.seed, 1234u);
  EXPECT_EQ(cfg.lines.seed, 1234u);
  const auto r = run_frame(frame.cloud, cfg);
  EXPECT_NO_THROW(r.check_chain());
}

TEST(Pipeline, NoGroundReturnsShortCircuits) {
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 200; ++i) pts.emplace_back(5.0 + 0.1 * i, 2.0, 1.0);
  const auto c = test::cloud_of(pts, 1024, 64);
  const auto r = run_frame(c, PipelineConfig{});
  EXPECT_EQ(r.stopped_at, "prefilter");
  EXPECT_TRUE(r.pb.empty());
  EXPECT_TRUE(r.lines.empty());
  EXPECT_EQ(r.predicted_markings(), 0u);
  EXPECT_EQ(r.labels.size(), c.size());
}

TEST(Pipeline, MarkingFreeRoadStopsAtThreshold) {
  auto cfg = profile_config(Profile::test_track, 3, 0);
  cfg.stripes.clear();
  cfg.clutter_count = 0;
  const auto frame = generate(cfg);
  const auto r = run_frame(frame.cloud, PipelineConfig{});
  EXPECT_EQ(r.stopped_at, "threshold");
  EXPECT_EQ(r.predicted_markings(), 0u);
}

TEST(Pipeline, DegenerateStageIsNamed) {
  // Two points survive the pre-filter: the plane stage cannot fit.
  const auto c = test::cloud_of({{5, 0, -1.9}, {6, 0, -1.9}, {7, 0, 3.0}}, 1024, 64);
  try {
    run_frame(c, PipelineConfig{});
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "plane");
  }
  // Plane fits but there are fewer inliers than k_neighbors.
  std::vector<Eigen::Vector3d> few;
  for (int i = 0; i < 10; ++i) few.emplace_back(5.0 + i, 0.3 * (i % 3), -1.9);
  try {
    run_frame(test::cloud_of(few, 1024, 64), PipelineConfig{});
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "normals");
  }
}

TEST(Pipeline, ConfigValidation) {
  PipelineConfig cfg;
  cfg.workers = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.plane.th_plane = 0.0;
  EXPECT_THROW(run_frame(PointCloud({}, 64, 1024), cfg), ConfigError);
}

TEST(Batch, ZeroFramesIsConfigError) {
  EXPECT_THROW(run_batch(0, [](std::size_t) { return LabeledFrame{}; }, PipelineConfig{}),
               ConfigError);
}

TEST(Batch, FailuresAreRecordedPerFrame) {
  const auto frames = scene_suite(Profile::test_track, 3, 9);
  const FrameSource source = [&](std::size_t k) -> LabeledFrame {
    if (k == 1) {
      // Degenerate: two ground points only.
      return {"bad", test::cloud_of({{5, 0, -1.9}, {6, 0, -1.9}}, 1024, 64), std::nullopt};
    }
    if (k == 3) throw IoError("unreadable");
    return labeled(frames[k], "good" + std::to_string(k));
  };
  const auto res = run_batch(4, source, PipelineConfig{});
  EXPECT_EQ(res.failed(), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(res.frames[1].name, "bad");
  EXPECT_NE(res.frames[1].error.find("plane"), std::string::npos);
  EXPECT_EQ(res.frames[3].name, "frame_0003");
  EXPECT_EQ(res.report.frames.size(), 2u);
  Counts sum = *res.frames[0].counts;
  sum += *res.frames[2].counts;
  EXPECT_EQ(res.report.counts, sum);
}

TEST(Batch, WorkerCountDoesNotChangeResults) {
  const auto frames = scene_suite(Profile::highway, 4, 10);
  const FrameSource source = [&](std::size_t k) { return labeled(frames[k]); };
  PipelineConfig one, three;
  three.workers = 3;
  const auto a = run_batch(4, source, one);
  const auto b = run_batch(4, source, three);
  EXPECT_EQ(a.report.counts, b.report.counts);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(a.frames[k].counts, b.frames[k].counts);
}

TEST(Batch, SinkSeesEverySuccessfulFrame) {
  const auto frames = scene_suite(Profile::test_track, 2, 11);
  std::vector<std::size_t> seen(2, 0);
  run_batch(
      2, [&](std::size_t k) { return labeled(frames[k]); }, PipelineConfig{},
      [&](std::size_t k, const LabeledFrame&, const FrameResult& r) {
        ++seen[k];
        EXPECT_NO_THROW(r.check_chain());
      });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 1}));
}

TEST(CompareChannels, MatchesSeparateRuns) {
  const auto frames = scene_suite(Profile::test_track, 2, 12);
  const FrameSource source = [&](std::size_t k) { return labeled(frames[k]); };
  const auto cmp = compare_channels(2, source, PipelineConfig{});
  PipelineConfig inten;
  inten.threshold.channel = Channel::intensity;
  EXPECT_EQ(cmp.reflectivity.report.counts, run_batch(2, source, PipelineConfig{}).report.counts);
  EXPECT_EQ(cmp.intensity.report.counts, run_batch(2, source, inten).report.counts);
  EXPECT_EQ(cmp.reflectivity.frames.size(), cmp.intensity.frames.size());
}

TEST(CompareChannels, IdenticalChannelsGiveIdenticalMetrics) {
  const auto frame = generate(profile_config(Profile::test_track, 13, 0));
  std::vector<LidarPoint> pts(frame.cloud.points().begin(), frame.cloud.points().end());
  for (auto& p : pts) p.intensity = p.reflectivity;
  const PointCloud cloud(pts, 64, 1024);
  const auto cmp = compare_channels(
      1, [&](std::size_t) { return LabeledFrame{"same", cloud, frame.truth.labels}; },
      PipelineConfig{});
  EXPECT_EQ(cmp.reflectivity.report.counts, cmp.intensity.report.counts);
  EXPECT_EQ(cmp.reflectivity.report.f1, cmp.intensity.report.f1);
}

}  // namespace
}  // namespace refmark
