#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace refmark {

struct Neighbor {
  std::uint32_t index;
  double dist2;
};

// Static 3D kd-tree for exact k-nearest-neighbor queries. Results are
// ordered by (squared distance, index), so ties resolve the same way as a
// brute-force scan.
class KdTree {
 public:
  explicit KdTree(std::vector<Eigen::Vector3d> points, std::size_t leaf_size = 12);

  std::size_t size() const { return points_.size(); }
  const Eigen::Vector3d& point(std::size_t i) const { return points_[i]; }

  // Writes min(k, size()) neighbors of `query` into `out` (cleared first).
  void knn(const Eigen::Vector3d& query, std::size_t k,
           std::vector<Neighbor>& out) const;

 private:
  struct Node {
    // Leaf when axis < 0: [begin, end) into order_.
    int axis{-1};
    double split{0.0};
    std::uint32_t begin{0}, end{0};
    std::uint32_t left{0}, right{0};
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end, int depth);
  void search(std::uint32_t node, const Eigen::Vector3d& q, std::size_t k,
              std::vector<Neighbor>& heap) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

}  // namespace refmark
