#include "refmark/ground.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "refmark/error.hpp"
#include "refmark/kdtree.hpp"
#include "refmark/random.hpp"
#include "ransac_common.hpp"

namespace refmark {
namespace detail {

void canonicalize_plane(Eigen::Vector3d& normal, double& d) {
  if (d < 0.0 || (d == 0.0 && normal.z() < 0.0)) {
    normal = -normal;
    d = -d;
  }
}

bool plane_from_points(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                       const Eigen::Vector3d& c, Eigen::Vector3d& normal, double& d) {
  const Eigen::Vector3d u = b - a;
  const Eigen::Vector3d v = c - a;
  const Eigen::Vector3d n = u.cross(v);
  const double len = n.norm();
  if (!(len > 1e-12 * u.norm() * v.norm()) || len == 0.0) return false;
  normal = n / len;
  d = -normal.dot(a);
  canonicalize_plane(normal, d);
  return true;
}

bool fit_plane_lsq(const PointCloud& cloud, std::span<const std::uint32_t> idx,
                   Eigen::Vector3d& normal, double& d) {
  if (idx.size() < 3) return false;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (auto i : idx) centroid += cloud[i].xyz();
  centroid /= static_cast<double>(idx.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto i : idx) {
    const Eigen::Vector3d q = cloud[i].xyz() - centroid;
    cov.noalias() += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const auto& ev = es.eigenvalues();
  if (!(ev(1) > 1e-12 * ev(2))) return false;
  normal = es.eigenvectors().col(0).normalized();
  d = -normal.dot(centroid);
  canonicalize_plane(normal, d);
  return true;
}

SurfaceNormal normal_from_neighborhood(const std::vector<Eigen::Vector3d>& pts,
                                       std::span<const std::uint32_t> neighborhood,
                                       const Eigen::Vector3d& query) {
  SurfaceNormal out;
  out.neighbors = static_cast<std::uint32_t>(neighborhood.size());
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (auto m : neighborhood) centroid += pts[m];
  centroid /= static_cast<double>(neighborhood.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto m : neighborhood) {
    const Eigen::Vector3d q = pts[m] - centroid;
    cov.noalias() += q * q.transpose();
  }
  cov /= static_cast<double>(neighborhood.size());

  if (cov.cwiseAbs().maxCoeff() == 0.0) {
    out.degenerate = true;
    out.curvature = 0.0;
    out.normal = Eigen::Vector3d::UnitZ();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    Eigen::Vector3d lambda = es.eigenvalues().cwiseMax(0.0);
    const double sum = lambda.sum();
    out.normal = es.eigenvectors().col(0).normalized();
    out.curvature = sum > 0.0 ? std::min(lambda(0) / sum, 1.0 / 3.0) : 0.0;
  }
  if (out.normal.dot(-query) < 0.0) out.normal = -out.normal;
  return out;
}

}  // namespace detail

PlaneModel fit_plane_ransac(const PointCloud& cloud, const PlaneParams& params) {
  return fit_plane_ransac(cloud, IndexMask::valid(cloud), params);
}

PlaneModel fit_plane_ransac(const PointCloud& cloud, const IndexMask& input,
                            const PlaneParams& params) {
  if (!input.belongs_to(cloud))
    throw StructuralError("plane fit input mask does not reference this cloud");
  if (params.max_iter <= 0 || !(params.th_plane > 0.0))
    throw ConfigError("ground.max_iter and ground.th_plane must be positive");

  std::vector<std::uint32_t> idx;
  idx.reserve(input.size());
  for (auto i : input)
    if (cloud[i].valid) idx.push_back(i);
  if (idx.size() < 3)
    throw DegenerateInputError(
        fmt::format("plane fit needs at least 3 points, got {}", idx.size()));

  std::vector<Eigen::Vector3d> pts(idx.size());
  for (std::size_t m = 0; m < idx.size(); ++m) pts[m] = cloud[idx[m]].xyz();

  {
    Eigen::Vector3d n;
    double d;
    if (!detail::fit_plane_lsq(cloud, idx, n, d))
      throw DegenerateInputError("plane fit input points are collinear");
  }

  const auto iters = static_cast<std::size_t>(params.max_iter);
  std::vector<ransac::PlaneHypothesis> hyps(iters);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t it = 0; it < static_cast<std::ptrdiff_t>(iters); ++it) {
    auto& h = hyps[static_cast<std::size_t>(it)];
    h = ransac::draw_plane(pts, params.seed, static_cast<std::uint64_t>(it));
    if (h.ok) h.score = ransac::count_plane_inliers(pts, h.normal, h.d, params.th_plane);
  }
  const auto best = ransac::best_hypothesis(hyps);

  PlaneModel model;
  model.iterations = params.max_iter;
  std::int64_t best_score;
  if (best < 0) {
    // Every sample was collinear; fall back to the least-squares plane.
    detail::fit_plane_lsq(cloud, idx, model.normal, model.d);
    best_score = -1;
  } else {
    model.normal = hyps[best].normal;
    model.d = hyps[best].d;
    best_score = hyps[best].score;
  }

  const auto consensus = ransac::plane_inliers(pts, model.normal, model.d, params.th_plane);
  std::vector<std::uint32_t> consensus_idx;
  consensus_idx.reserve(consensus.size());
  for (auto m : consensus) consensus_idx.push_back(idx[m]);
  Eigen::Vector3d rn;
  double rd;
  if (detail::fit_plane_lsq(cloud, consensus_idx, rn, rd)) {
    const auto refit_score = ransac::count_plane_inliers(pts, rn, rd, params.th_plane);
    if (refit_score >= best_score) {
      model.normal = rn;
      model.d = rd;
    }
  }

  std::vector<std::uint32_t> inliers;
  for (auto m : ransac::plane_inliers(pts, model.normal, model.d, params.th_plane))
    inliers.push_back(idx[m]);
  model.inliers = IndexMask(cloud, std::move(inliers));
  return model;
}

NormalField estimate_normals(const PointCloud& cloud, const IndexMask& input, int k) {
  if (!input.belongs_to(cloud))
    throw StructuralError("normal estimation input mask does not reference this cloud");
  if (k < 3) throw ConfigError(fmt::format("k_neighbors must be >= 3 (got {})", k));
  if (input.size() < static_cast<std::size_t>(k))
    throw DegenerateInputError(fmt::format(
        "normal estimation needs at least k={} points, got {}", k, input.size()));

  NormalField field;
  field.points = input;
  field.k = k;
  const std::size_t n = input.size();
  std::vector<Eigen::Vector3d> pts(n);
  for (std::size_t m = 0; m < n; ++m) pts[m] = cloud[input[m]].xyz();
  const KdTree tree(pts);

  field.normals.resize(n);
  field.neighbors.resize(n * static_cast<std::size_t>(k));
#pragma omp parallel
  {
    std::vector<Neighbor> nn;
#pragma omp for schedule(dynamic, 256)
    for (std::ptrdiff_t sm = 0; sm < static_cast<std::ptrdiff_t>(n); ++sm) {
      const auto m = static_cast<std::size_t>(sm);
      tree.knn(pts[m], static_cast<std::size_t>(k), nn);
      auto* row = field.neighbors.data() + m * static_cast<std::size_t>(k);
      for (std::size_t j = 0; j < nn.size(); ++j) row[j] = nn[j].index;
      field.normals[m] = detail::normal_from_neighborhood(
          pts, {row, static_cast<std::size_t>(k)}, pts[m]);
    }
  }
  return field;
}

void RegionParams::validate() const {
  if (k_neighbors < 3)
    throw ConfigError(fmt::format("ground.k_neighbors must be >= 3 (got {})", k_neighbors));
  if (!(th_angle_deg > 0.0 && th_angle_deg < 90.0))
    throw ConfigError(
        fmt::format("ground.th_angle_deg must be in (0, 90) (got {})", th_angle_deg));
  if (!(th_curve > 0.0))
    throw ConfigError(fmt::format("ground.th_curve must be > 0 (got {})", th_curve));
}

std::vector<Cluster> region_grow(const PointCloud& cloud, const NormalField& field,
                                 const RegionParams& params) {
  params.validate();
  if (!field.points.belongs_to(cloud))
    throw StructuralError("normal field was computed on a different cloud");
  const std::size_t n = field.size();
  const double cos_th = std::cos(params.th_angle_deg * M_PI / 180.0);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return field.normals[a].curvature < field.normals[b].curvature;
  });

  constexpr std::int32_t kUnassigned = -1;
  std::vector<std::int32_t> label(n, kUnassigned);
  std::vector<std::vector<std::uint32_t>> members;
  std::vector<std::uint32_t> seeds;
  std::deque<std::uint32_t> queue;

  for (auto seed : order) {
    if (label[seed] != kUnassigned) continue;
    const auto c = static_cast<std::int32_t>(members.size());
    members.emplace_back();
    seeds.push_back(seed);
    label[seed] = c;
    members.back().push_back(seed);
    queue.assign(1, seed);
    while (!queue.empty()) {
      const auto cur = queue.front();
      queue.pop_front();
      const auto& nc = field.normals[cur];
      const auto& ns = field.normals[seed].normal;
      for (auto nb : field.neighbors_of(cur)) {
        if (label[nb] != kUnassigned) continue;
        const auto& nn = field.normals[nb];
        if (nc.normal.dot(nn.normal) <= cos_th) continue;
        if (params.bound_to_seed && ns.dot(nn.normal) <= cos_th) continue;
        if (!(std::abs(nc.curvature - nn.curvature) < params.th_curve)) continue;
        label[nb] = c;
        members.back().push_back(nb);
        if (nn.curvature < params.th_curve) queue.push_back(nb);
      }
    }
  }

  std::vector<Cluster> clusters;
  clusters.reserve(members.size());
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& mem = members[c];
    std::sort(mem.begin(), mem.end());
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    std::vector<std::uint32_t> idx;
    idx.reserve(mem.size());
    for (auto m : mem) {
      idx.push_back(field.points[m]);
      mean += field.normals[m].normal;
    }
    Cluster cl;
    cl.members = IndexMask(cloud, std::move(idx));
    cl.seed = field.points[seeds[c]];
    cl.mean_normal = mean.norm() > 0.0 ? Eigen::Vector3d(mean.normalized())
                                       : field.normals[seeds[c]].normal;
    clusters.push_back(std::move(cl));
  }
  return clusters;
}

namespace {

// Largest angular gap between consecutive azimuths of the members. Below pi
// the cluster wraps around the sensor's vertical axis.
double max_azimuth_gap(const IndexMask& mask, const PointCloud& cloud) {
  std::vector<double> az;
  az.reserve(mask.size());
  for (auto i : mask) az.push_back(std::atan2(cloud[i].y, cloud[i].x));
  if (az.size() < 2) return 2.0 * M_PI;
  std::sort(az.begin(), az.end());
  double gap = az.front() + 2.0 * M_PI - az.back();
  for (std::size_t k = 1; k < az.size(); ++k) gap = std::max(gap, az[k] - az[k - 1]);
  return gap;
}

}  // namespace

IndexMask select_road_cluster(const std::vector<Cluster>& clusters,
                              const PointCloud& cloud, std::size_t min_cluster_size) {
  if (clusters.empty()) throw DegenerateInputError("no clusters to choose a road from");
  std::ptrdiff_t best = -1;
  double best_h = std::numeric_limits<double>::infinity();
  std::uint32_t best_idx = std::numeric_limits<std::uint32_t>::max();
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& mask = clusters[c].members;
    if (!mask.belongs_to(cloud))
      throw StructuralError("cluster does not reference this cloud");
    if (mask.size() < min_cluster_size) continue;
    if (max_azimuth_gap(mask, cloud) >= M_PI) continue;
    for (auto i : mask) {
      const auto& p = cloud[i];
      const double h = p.x * p.x + p.y * p.y;
      if (h < best_h || (h == best_h && i < best_idx)) {
        best_h = h;
        best_idx = i;
        best = static_cast<std::ptrdiff_t>(c);
      }
    }
  }
  if (best < 0) {
    best = 0;
    for (std::size_t c = 1; c < clusters.size(); ++c)
      if (clusters[c].members.size() > clusters[best].members.size())
        best = static_cast<std::ptrdiff_t>(c);
  }
  return clusters[best].members;
}

}  // namespace refmark
