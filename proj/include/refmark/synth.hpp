#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "refmark/cloud.hpp"
#include "refmark/labels.hpp"

namespace refmark {

struct Distribution {
  double mean{0.0};
  double sigma{0.0};
};

// Painted stripe along the road axis (world x). Dashed stripes are painted
// where frac((x - phase) / period) < duty.
struct StripeSpec {
  double offset{0.0};  // lateral position of the stripe center, m
  double width{0.15};
  bool dashed{false};
  double period{9.0};
  double duty{1.0 / 3.0};
  double phase{0.0};
  Distribution reflectivity{180.0, 8.0};
};

// Axis-aligned box in the road frame (road surface at z = 0).
struct Box {
  Eigen::Vector3d min{0.0, 0.0, 0.0};
  Eigen::Vector3d max{0.0, 0.0, 0.0};
};

// Straight road along world x, surface at z = 0, optional curbs at
// |y| = road_half_width with a raised sidewalk beyond them. The sensor sits at
// (0, lateral_offset, sensor_height) with heading yaw_deg; points are emitted
// in the sensor frame, so the road plane is z = -sensor_height there.
struct SceneConfig {
  double sensor_height{1.9};
  double lateral_offset{0.0};
  double yaw_deg{0.0};
  int n_layers{64};
  int n_cols{1024};
  // Beam elevations are spaced uniformly; ring 0 is the lowest beam.
  double elevation_min_deg{-25.0};
  double elevation_max_deg{15.0};
  double max_range{120.0};

  double road_half_width{4.5};
  std::vector<StripeSpec> stripes;
  Distribution asphalt{40.0, 5.0};

  bool curbs{true};
  double curb_height{0.15};
  Distribution sidewalk{70.0, 8.0};

  std::vector<Box> vehicles;
  Distribution vehicle{60.0, 20.0};

  // Returns from small objects (vegetation, debris) scattered inside a box:
  // clutter_count rays get a return at a random depth inside it.
  std::size_t clutter_count{0};
  Box clutter_box{};
  Distribution clutter{50.0, 20.0};

  double range_noise{0.01};  // sigma, m
  double dropout{0.0};       // per-slot probability of no return

  // intensity = R * (ref_range / r)^2 * max(cos(incidence), floor) * gain
  //             + N(0, noise), clamped to [0, max]
  double intensity_ref_range{8.0};
  double intensity_gain{1.0};
  double intensity_floor{0.05};
  double intensity_noise{2.0};
  double intensity_max{1023.0};

  std::uint64_t seed{1};
  std::string frame_id{"synth"};

  void validate() const;
};

struct GroundTruth {
  std::vector<Label> labels;
  std::vector<std::int32_t> stripe_id;  // -1 unless label == marking
};

struct SynthFrame {
  PointCloud cloud;
  GroundTruth truth;
};

// Casts one ray per (ring, col) and labels each return by the surface hit.
// Reflectivity is drawn from the surface's distribution independent of range;
// intensity follows the attenuation model above. Deterministic per seed.
SynthFrame generate(const SceneConfig& config);

enum class Profile { test_track, highway };
Profile parse_profile(std::string_view name);
std::string_view to_string(Profile profile);

// Scene configuration of frame `index` of a suite.
SceneConfig profile_config(Profile profile, std::uint64_t seed, std::size_t index);

std::vector<SynthFrame> scene_suite(Profile profile, std::size_t n_frames,
                                    std::uint64_t seed);

// Number of ground-truth returns per stripe id (index = stripe id), counting
// only rings below max_ring when max_ring > 0.
std::vector<std::size_t> stripe_returns(const SynthFrame& frame,
                                        std::size_t n_stripes, int max_ring = 0);

}  // namespace refmark
