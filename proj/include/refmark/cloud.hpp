#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace refmark {

// One return of a multi-beam spinning lidar. Slots without a return keep
// their (ring, col) address and have valid == false, range == 0.
struct LidarPoint {
  double x{0.0};
  double y{0.0};
  double z{0.0};
  double range{0.0};
  float intensity{0.0f};
  std::uint16_t reflectivity{0};
  std::uint16_t ring{0};
  std::uint16_t col{0};
  bool valid{true};

  Eigen::Vector3d xyz() const { return {x, y, z}; }

  friend bool operator==(const LidarPoint&, const LidarPoint&) = default;
};

// Organized cloud of n_layers x n_cols slots, stored ring-major. Slots may be
// omitted (compacted clouds) but (ring, col) must be strictly increasing.
// Immutable after construction.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(std::vector<LidarPoint> points, int n_layers, int n_cols,
             std::string frame_id = {});

  std::span<const LidarPoint> points() const { return points_; }
  const LidarPoint& operator[](std::size_t i) const { return points_[i]; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  int n_layers() const { return n_layers_; }
  int n_cols() const { return n_cols_; }
  const std::string& frame_id() const { return frame_id_; }
  std::uint64_t uid() const { return uid_; }
  std::size_t valid_count() const { return valid_count_; }

  // Half-open index range [first, last) of the slots belonging to `ring`.
  std::pair<std::size_t, std::size_t> ring_span(int ring) const;

  // Bitwise equality on points and metadata; uid is ignored.
  bool same_content(const PointCloud& other) const;

 private:
  std::vector<LidarPoint> points_;
  std::vector<std::size_t> ring_offsets_;
  int n_layers_{0};
  int n_cols_{0};
  std::string frame_id_;
  std::uint64_t uid_{0};
  std::size_t valid_count_{0};
};

// Strictly increasing indices into a parent cloud. Pipeline stages always
// produce masks over the original frame, so nested stage outputs stay
// directly comparable with per-point labels.
class IndexMask {
 public:
  IndexMask() = default;
  IndexMask(const PointCloud& parent, std::vector<std::uint32_t> indices);

  static IndexMask all(const PointCloud& cloud);
  static IndexMask valid(const PointCloud& cloud);
  static IndexMask none(const PointCloud& cloud);

  std::span<const std::uint32_t> indices() const { return indices_; }
  std::uint32_t operator[](std::size_t k) const { return indices_[k]; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::size_t parent_size() const { return parent_size_; }
  std::uint64_t parent_uid() const { return parent_uid_; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  bool belongs_to(const PointCloud& cloud) const {
    return parent_uid_ == cloud.uid() && parent_size_ == cloud.size();
  }
  bool is_subset_of(const IndexMask& other) const;

  friend bool operator==(const IndexMask& a, const IndexMask& b) {
    return a.parent_size_ == b.parent_size_ && a.indices_ == b.indices_;
  }

 private:
  std::vector<std::uint32_t> indices_;
  std::size_t parent_size_{0};
  std::uint64_t parent_uid_{0};
};

// Cloud holding exactly the masked points, order preserved.
PointCloud select(const PointCloud& cloud, const IndexMask& mask);

// Re-indexes `inner` (a mask over select(parent, outer)) into parent indices.
IndexMask compose(const PointCloud& parent, const IndexMask& outer,
                  const IndexMask& inner);

// Valid points of one ring.
std::vector<LidarPoint> points_of_ring(const PointCloud& cloud, int ring);

// Drops invalid slots.
PointCloud compact(const PointCloud& cloud);

}  // namespace refmark
