#include <cmath>

#include <gtest/gtest.h>

#include "refmark/error.hpp"
#include "refmark/ground.hpp"
#include "refmark/synth.hpp"

namespace refmark {
namespace {

SceneConfig flat_scene() {
  SceneConfig cfg;
  cfg.curbs = false;
  cfg.range_noise = 0.0;
  cfg.seed = 77;
  return cfg;
}

bool same_frame(const SynthFrame& a, const SynthFrame& b) {
  return a.cloud.same_content(b.cloud) && a.truth.labels == b.truth.labels &&
         a.truth.stripe_id == b.truth.stripe_id;
}

TEST(Synth, FullGridHasEverySlot) {
  const auto frame = generate(profile_config(Profile::test_track, 1, 0));
  EXPECT_EQ(frame.cloud.size(), 65536u);
  EXPECT_EQ(frame.truth.labels.size(), 65536u);
  EXPECT_EQ(frame.cloud.n_layers(), 64);
  EXPECT_EQ(frame.cloud.n_cols(), 1024);
  for (std::size_t i = 0; i < frame.cloud.size(); ++i) {
    EXPECT_EQ(frame.cloud[i].ring, i / 1024);
    EXPECT_EQ(frame.cloud[i].col, i % 1024);
  }
}

TEST(Synth, ZeroNoiseRoadIsExactlyOnThePlane) {
  const auto frame = generate(flat_scene());
  std::size_t road = 0;
  for (std::size_t i = 0; i < frame.cloud.size(); ++i) {
    if (frame.truth.labels[i] == Label::other) continue;
    ++road;
    EXPECT_NEAR(frame.cloud[i].z, -1.9, 1e-12);
  }
  EXPECT_GT(road, 10000u);
  const auto plane = fit_plane_ransac(frame.cloud, IndexMask::valid(frame.cloud), PlaneParams{});
  EXPECT_NEAR(plane.d, 1.9, 1e-9);
  EXPECT_NEAR(plane.normal.z(), 1.0, 1e-12);
}

TEST(Synth, DeterministicPerSeed) {
  const auto cfg = profile_config(Profile::highway, 8, 3);
  EXPECT_TRUE(same_frame(generate(cfg), generate(cfg)));
  auto other = cfg;
  other.seed += 1;
  EXPECT_FALSE(same_frame(generate(cfg), generate(other)));
  const auto a = scene_suite(Profile::test_track, 3, 12);
  const auto b = scene_suite(Profile::test_track, 3, 12);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(same_frame(a[i], b[i]));
  EXPECT_TRUE(same_frame(a[2], generate(profile_config(Profile::test_track, 12, 2))));
}

TEST(Synth, LabelsAndStripeIdsAgree) {
  for (auto profile : {Profile::test_track, Profile::highway}) {
    const auto frame = generate(profile_config(profile, 4, 0));
    for (std::size_t i = 0; i < frame.cloud.size(); ++i) {
      EXPECT_EQ(frame.truth.labels[i] == Label::marking, frame.truth.stripe_id[i] >= 0);
      if (!frame.cloud[i].valid) {
        EXPECT_EQ(frame.truth.labels[i], Label::other);
      }
    }
  }
}

TEST(Synth, TestTrackHasAtLeastTwoStripes) {
  const auto cfg = profile_config(Profile::test_track, 6, 0);
  const auto frame = generate(cfg);
  const auto counts = stripe_returns(frame, cfg.stripes.size());
  EXPECT_GE(std::count_if(counts.begin(), counts.end(), [](auto n) { return n > 0; }), 2);
}

TEST(Synth, StripeReflectivityMatchesConfiguredMean) {
  auto cfg = profile_config(Profile::test_track, 14, 0);
  const auto frame = generate(cfg);
  for (std::size_t s = 0; s < cfg.stripes.size(); ++s) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < frame.cloud.size(); ++i)
      if (frame.truth.stripe_id[i] == static_cast<int>(s)) {
        sum += frame.cloud[i].reflectivity;
        ++n;
      }
    ASSERT_GT(n, 30u);
    const auto& d = cfg.stripes[s].reflectivity;
    EXPECT_NEAR(sum / n, d.mean, 2.0 * d.sigma / std::sqrt(static_cast<double>(n))) << "stripe " << s;
  }
}

TEST(Synth, FarStripePointsAreDimmerInIntensity) {
  const auto frame = generate(profile_config(Profile::test_track, 15, 0));
  std::vector<std::pair<double, double>> rv;
  for (std::size_t i = 0; i < frame.cloud.size(); ++i)
    if (frame.truth.labels[i] == Label::marking)
      rv.emplace_back(frame.cloud[i].range, frame.cloud[i].intensity);
  std::sort(rv.begin(), rv.end());
  const std::size_t half = rv.size() / 2;
  double near = 0, far = 0;
  for (std::size_t i = 0; i < rv.size(); ++i) (i < half ? near : far) += rv[i].second;
  EXPECT_LT(far / (rv.size() - half), near / half);
}

TEST(Synth, IntensityCorrelatesWithInverseSquareRange) {
  const auto frame = generate(profile_config(Profile::test_track, 16, 0));
  std::vector<double> x, y;
  for (std::size_t i = 0; i < frame.cloud.size(); ++i)
    if (frame.truth.labels[i] == Label::road) {
      const double r = frame.cloud[i].range;
      x.push_back(1.0 / (r * r));
      y.push_back(frame.cloud[i].intensity);
    }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cov += (x[i] - mx) * (y[i] - my);
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
  }
  EXPECT_GT(cov / std::sqrt(vx * vy), 0.3);
}

// Holds for the default stripe and asphalt distributions (the test_track
// profile). The highway profile wears its stripes down on purpose.
TEST(Synth, RingContrastIsAtLeastFourSigma) {
  for (auto profile : {Profile::test_track}) {
    const auto frame = generate(profile_config(profile, 18, 0));
    for (int ring = 0; ring < 30; ++ring) {
      std::vector<double> mark, road;
      for (std::size_t i = 0; i < frame.cloud.size(); ++i) {
        if (frame.cloud[i].ring != ring) continue;
        if (frame.truth.labels[i] == Label::marking) mark.push_back(frame.cloud[i].reflectivity);
        if (frame.truth.labels[i] == Label::road) road.push_back(frame.cloud[i].reflectivity);
      }
      if (mark.size() < 5 || road.size() < 5) continue;
      auto stats = [](const std::vector<double>& v) {
        double m = 0, s = 0;
        for (double x : v) m += x / v.size();
        for (double x : v) s += (x - m) * (x - m) / v.size();
        return std::pair{m, s};
      };
      const auto [mm, vm] = stats(mark);
      const auto [mr, vr] = stats(road);
      EXPECT_GE(mm - mr, 4.0 * std::sqrt(vm + vr)) << to_string(profile) << " ring " << ring;
    }
  }
}

TEST(Synth, HighwayHasSparseDashes) {
  std::size_t sparse = 0;
  for (std::size_t f = 0; f < 20; ++f) {
    const auto cfg = profile_config(Profile::highway, 5, f);
    const auto frame = generate(cfg);
    const auto counts = stripe_returns(frame, cfg.stripes.size(), 30);
    for (std::size_t s = 0; s < counts.size(); ++s)
      if (cfg.stripes[s].dashed && counts[s] <= 10) ++sparse;
  }
  EXPECT_GT(sparse, 0u);
}

TEST(Synth, DropoutRemovesReturns) {
  auto cfg = flat_scene();
  cfg.dropout = 0.2;
  const auto frame = generate(cfg);
  const auto full = generate(flat_scene());
  EXPECT_EQ(frame.cloud.size(), 65536u);
  EXPECT_LT(frame.cloud.valid_count(), full.cloud.valid_count() * 0.85);
  EXPECT_GT(frame.cloud.valid_count(), full.cloud.valid_count() * 0.75);
}

TEST(Synth, ConfigValidation) {
  auto cfg = flat_scene();
  cfg.stripes.push_back({});
  cfg.stripes.back().width = 0.0;
  EXPECT_THROW(generate(cfg), ConfigError);
  cfg = flat_scene();
  cfg.n_layers = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = flat_scene();
  cfg.dropout = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(parse_profile("city"), ConfigError);
  EXPECT_EQ(parse_profile("highway"), Profile::highway);
}

}  // namespace
}  // namespace refmark
