#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "refmark/cloud.hpp"
#include "refmark/ground.hpp"
#include "refmark/labels.hpp"

namespace refmark {

struct LineModel {
  Eigen::Vector3d anchor{0.0, 0.0, 0.0};
  Eigen::Vector3d direction{1.0, 0.0, 0.0};  // unit length
  IndexMask support;                         // original frame indices
  bool accepted{false};

  double distance(const Eigen::Vector3d& p) const {
    return (p - anchor).cross(direction).norm();
  }
  friend bool operator==(const LineModel& a, const LineModel& b) {
    return a.anchor == b.anchor && a.direction == b.direction &&
           a.support == b.support && a.accepted == b.accepted;
  }
};

struct LineParams {
  double th_lines{0.15};
  int max_lines{10};
  // A line needs more than this many supporting points to be accepted.
  int min_support{10};
  int max_iter{500};
  std::uint64_t seed{7};
  // Fit on candidates projected onto the road plane.
  bool project_to_plane{false};

  void validate() const;
};

// Sequential RANSAC: fit one line on the remaining candidates (2-point
// hypotheses, least-squares refit of the best consensus), remove its support,
// repeat. Stops after max_lines lines, after a line with support <= min_support
// (kept in the output, accepted = false), or when fewer than 2 points remain.
std::vector<LineModel> fit_lines_sequential(const PointCloud& cloud,
                                            const IndexMask& candidates,
                                            const LineParams& params,
                                            const PlaneModel* plane = nullptr);

// marking for points supporting an accepted line, other everywhere else.
// Throws StructuralError when two accepted lines share a point.
std::vector<Label> marking_labels(const std::vector<LineModel>& lines,
                                  std::size_t frame_size);

namespace detail {

// Centroid and principal axis of pts[members]; false when they all coincide.
bool fit_line_lsq(const std::vector<Eigen::Vector3d>& pts,
                  std::span<const std::uint32_t> members, Eigen::Vector3d& anchor,
                  Eigen::Vector3d& dir);

// Flips dir so its first non-zero component is positive.
void canonicalize_direction(Eigen::Vector3d& dir);

}  // namespace detail
}  // namespace refmark
