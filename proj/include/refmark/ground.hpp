#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "refmark/cloud.hpp"

namespace refmark {

// Road plane a*x + b*y + c*z + d = 0 with unit normal (a, b, c). The sign is
// fixed so that d >= 0, i.e. the sensor origin is on the positive side.
struct PlaneModel {
  Eigen::Vector3d normal{0.0, 0.0, 1.0};
  double d{0.0};
  IndexMask inliers;
  int iterations{0};

  double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p) + d; }
};

struct PlaneParams {
  double th_plane{0.30};
  int max_iter{200};
  std::uint64_t seed{42};
};

// RANSAC over 3-point hypotheses followed by a least-squares refit on the best
// consensus (kept only when it does not shrink the consensus). The returned
// inlier mask is exactly {p : |n.p + d| <= th_plane} for the returned plane.
// Iterations run in parallel; each draws from its own (seed, iteration)
// stream so the result is independent of thread count.
PlaneModel fit_plane_ransac(const PointCloud& cloud, const IndexMask& input,
                            const PlaneParams& params);
PlaneModel fit_plane_ransac(const PointCloud& cloud, const PlaneParams& params);

struct SurfaceNormal {
  Eigen::Vector3d normal{0.0, 0.0, 1.0};
  // lambda_min / (lambda_0 + lambda_1 + lambda_2), in [0, 1/3].
  double curvature{0.0};
  std::uint32_t neighbors{0};
  // Zero-covariance neighborhood: curvature 0 and an arbitrary normal.
  bool degenerate{false};
};

// Normals for the points of one mask, plus the k-nearest-neighbor graph they
// were computed from. Position m refers to mask[m]; neighbor lists hold
// positions, not cloud indices.
struct NormalField {
  IndexMask points;
  std::vector<SurfaceNormal> normals;
  std::vector<std::uint32_t> neighbors;  // size() * k, row-major
  int k{0};

  std::size_t size() const { return normals.size(); }
  std::span<const std::uint32_t> neighbors_of(std::size_t m) const {
    return {neighbors.data() + m * static_cast<std::size_t>(k),
            static_cast<std::size_t>(k)};
  }
};

// Normal of each point = smallest-eigenvalue eigenvector of the covariance of
// its k nearest neighbors (the point itself included), flipped to face the
// sensor origin. Parallel over points.
NormalField estimate_normals(const PointCloud& cloud, const IndexMask& input, int k);

struct RegionParams {
  int k_neighbors{30};
  double th_angle_deg{2.0};
  // Compared against curvature differences and used as the seed cutoff.
  // The default 1 exceeds the maximum curvature 1/3, so neither test ever
  // rejects a point.
  double th_curve{1.0};
  // Clusters smaller than this are skipped when picking the road cluster.
  std::size_t min_road_cluster{50};
  // Also require the neighbor's normal to lie within th_angle of the region
  // seed's normal. Without it a region can follow a gradual bend, such as a
  // rounded curb edge, from the road onto the sidewalk.
  bool bound_to_seed{true};

  void validate() const;
};

struct Cluster {
  IndexMask members;
  std::uint32_t seed{0};  // cloud index
  Eigen::Vector3d mean_normal{0.0, 0.0, 1.0};
};

// Seeds in ascending curvature order; a neighbor joins when the angle between
// its normal and the current point's normal is below th_angle and their
// curvature difference is below th_curve (and, with bound_to_seed, its normal
// is within th_angle of the seed normal). Joined points with curvature below
// th_curve keep growing the region. Output partitions field.points.
std::vector<Cluster> region_grow(const PointCloud& cloud, const NormalField& field,
                                 const RegionParams& params);

// The road is the cluster that surrounds the sensor nadir (its points leave
// no azimuth gap of pi or more) and, among those, holds the point
// horizontally closest to the nadir. Clusters below min_cluster_size are
// ignored. When no cluster qualifies the largest one is returned.
IndexMask select_road_cluster(const std::vector<Cluster>& clusters,
                              const PointCloud& cloud,
                              std::size_t min_cluster_size = 1);

namespace detail {

// Least-squares plane through the points: centroid and smallest eigenvector.
// Returns false when fewer than 3 points or the points are collinear.
bool fit_plane_lsq(const PointCloud& cloud, std::span<const std::uint32_t> idx,
                   Eigen::Vector3d& normal, double& d);

// Plane through three points; false when they are (nearly) collinear.
bool plane_from_points(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                       const Eigen::Vector3d& c, Eigen::Vector3d& normal, double& d);

// Flip so d >= 0 (and c >= 0 when d == 0).
void canonicalize_plane(Eigen::Vector3d& normal, double& d);

// Sorted neighborhood -> normal/curvature. Shared by the kd-tree and the
// brute-force reference so both produce identical bits.
SurfaceNormal normal_from_neighborhood(const std::vector<Eigen::Vector3d>& pts,
                                       std::span<const std::uint32_t> neighborhood,
                                       const Eigen::Vector3d& query);

}  // namespace detail
}  // namespace refmark
