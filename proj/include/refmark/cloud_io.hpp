#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "refmark/cloud.hpp"
#include "refmark/labels.hpp"

namespace refmark {

// On-disk cloud file:
//
//   FIELDS x y z range intensity reflectivity ring col [valid]
//   COUNT <n>
//   LAYERS <n_layers>
//   COLS <n_cols>
//   [FRAME <frame id>]
//   DATA text|binary
//   <payload>
//
// Text payload: one whitespace-separated row per point in FIELDS order; the
// writer emits valid points only. Binary payload: every slot, little-endian,
// 43 bytes per point: x y z range (f64), intensity (f32), reflectivity ring
// col (u16), valid (u8).
enum class Layout { text, binary };

PointCloud read_cloud(const std::filesystem::path& path);
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                 Layout layout);

// Label sidecar: one token per line, line k labels point k.
std::vector<Label> read_labels(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_count = {});
void write_labels(std::span<const Label> labels,
                  const std::filesystem::path& path);

Layout parse_layout(std::string_view name);

}  // namespace refmark
