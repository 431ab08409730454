#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "refmark/pipeline.hpp"
#include "refmark/synth.hpp"

namespace refmark {

// INI-style configuration:
//
//   [prefilter]  max_ring z_low z_high z_band_absolute
//   [ground]     th_plane max_iter seed k_neighbors th_angle_deg th_curve
//                min_road_cluster bound_to_seed
//   [threshold]  n_bins channel t0_mode min_separability
//   [lines]      th_lines max_lines min_support max_iter seed project_to_plane
//   [batch]      workers
//
// Missing keys keep their defaults. Unknown sections or keys and values that
// do not parse are ConfigErrors.
PipelineConfig parse_config(std::istream& in, const std::string& source = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);
void write_config(const PipelineConfig& config, std::ostream& out);

// Scene overrides in the same format, section [scene]: scalar SceneConfig
// fields (sensor_height, lateral_offset, yaw_deg, n_layers, n_cols,
// elevation_min_deg, elevation_max_deg, max_range, road_half_width, curbs,
// curb_height, clutter_count, range_noise, dropout, intensity_ref_range,
// intensity_gain, intensity_floor, intensity_noise, intensity_max). Values
// present in the file replace those of `scene`.
void apply_scene_overrides(std::istream& in, SceneConfig& scene,
                           const std::string& source = "<scene>");
void apply_scene_overrides(const std::filesystem::path& path, SceneConfig& scene);

}  // namespace refmark
