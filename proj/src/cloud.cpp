#include "refmark/cloud.hpp"

#include <algorithm>
#include <atomic>

#include <fmt/format.h>

#include "refmark/error.hpp"

namespace refmark {
namespace {

std::uint64_t next_uid() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

PointCloud::PointCloud(std::vector<LidarPoint> points, int n_layers, int n_cols,
                       std::string frame_id)
    : points_(std::move(points)),
      n_layers_(n_layers),
      n_cols_(n_cols),
      frame_id_(std::move(frame_id)),
      uid_(next_uid()) {
  if (n_layers <= 0 || n_cols <= 0 || n_layers > 65535 || n_cols > 65535)
    throw StructuralError(
        fmt::format("invalid cloud shape {}x{}", n_layers, n_cols));
  if (points_.size() > std::size_t{0xffffffffu})
    throw StructuralError("cloud exceeds 2^32 points");

  ring_offsets_.assign(static_cast<std::size_t>(n_layers) + 1, 0);
  long prev_key = -1;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (p.ring >= n_layers || p.col >= n_cols)
      throw StructuralError(fmt::format(
          "point {} at ring {} col {} outside {}x{} grid", i, p.ring, p.col,
          n_layers, n_cols));
    const long key = static_cast<long>(p.ring) * n_cols + p.col;
    if (key <= prev_key)
      throw StructuralError(fmt::format(
          "point {} breaks ring-major order or duplicates (ring {}, col {})",
          i, p.ring, p.col));
    prev_key = key;
    ++ring_offsets_[static_cast<std::size_t>(p.ring) + 1];
    if (p.valid) ++valid_count_;
  }
  for (std::size_t r = 1; r < ring_offsets_.size(); ++r)
    ring_offsets_[r] += ring_offsets_[r - 1];
}

std::pair<std::size_t, std::size_t> PointCloud::ring_span(int ring) const {
  if (ring < 0 || ring >= n_layers_)
    throw StructuralError(
        fmt::format("ring {} out of range [0, {})", ring, n_layers_));
  return {ring_offsets_[ring], ring_offsets_[ring + 1]};
}

bool PointCloud::same_content(const PointCloud& other) const {
  return n_layers_ == other.n_layers_ && n_cols_ == other.n_cols_ &&
         frame_id_ == other.frame_id_ && points_ == other.points_;
}

IndexMask::IndexMask(const PointCloud& parent, std::vector<std::uint32_t> indices)
    : indices_(std::move(indices)),
      parent_size_(parent.size()),
      parent_uid_(parent.uid()) {
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k] >= parent_size_)
      throw StructuralError(fmt::format("mask index {} out of bounds for {} points",
                                        indices_[k], parent_size_));
    if (k > 0 && indices_[k] <= indices_[k - 1])
      throw StructuralError(
          fmt::format("mask indices not strictly increasing at position {}", k));
  }
}

IndexMask IndexMask::all(const PointCloud& cloud) {
  std::vector<std::uint32_t> idx(cloud.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
  return IndexMask(cloud, std::move(idx));
}

IndexMask IndexMask::valid(const PointCloud& cloud) {
  std::vector<std::uint32_t> idx;
  idx.reserve(cloud.valid_count());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (cloud[i].valid) idx.push_back(static_cast<std::uint32_t>(i));
  return IndexMask(cloud, std::move(idx));
}

IndexMask IndexMask::none(const PointCloud& cloud) { return IndexMask(cloud, {}); }

bool IndexMask::is_subset_of(const IndexMask& other) const {
  return parent_size_ == other.parent_size_ &&
         std::includes(other.indices_.begin(), other.indices_.end(),
                       indices_.begin(), indices_.end());
}

PointCloud select(const PointCloud& cloud, const IndexMask& mask) {
  if (!mask.belongs_to(cloud))
    throw StructuralError("mask does not reference this cloud");
  std::vector<LidarPoint> out;
  out.reserve(mask.size());
  for (auto i : mask) out.push_back(cloud[i]);
  return PointCloud(std::move(out), cloud.n_layers(), cloud.n_cols(),
                    cloud.frame_id());
}

IndexMask compose(const PointCloud& parent, const IndexMask& outer,
                  const IndexMask& inner) {
  if (!outer.belongs_to(parent))
    throw StructuralError("outer mask does not reference the parent cloud");
  if (inner.parent_size() != outer.size())
    throw StructuralError("inner mask does not reference the selected cloud");
  std::vector<std::uint32_t> idx;
  idx.reserve(inner.size());
  for (auto k : inner) idx.push_back(outer[k]);
  return IndexMask(parent, std::move(idx));
}

std::vector<LidarPoint> points_of_ring(const PointCloud& cloud, int ring) {
  const auto [first, last] = cloud.ring_span(ring);
  std::vector<LidarPoint> out;
  out.reserve(last - first);
  for (std::size_t i = first; i < last; ++i)
    if (cloud[i].valid) out.push_back(cloud[i]);
  return out;
}

PointCloud compact(const PointCloud& cloud) {
  return select(cloud, IndexMask::valid(cloud));
}

}  // namespace refmark
