#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "refmark/error.hpp"
#include "refmark/ground.hpp"
#include "refmark/prefilter.hpp"
#include "refmark/synth.hpp"

namespace refmark {
namespace {

double angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) * 180.0 /
         std::numbers::pi;
}

std::vector<Eigen::Vector3d> plane_grid(double z, double step, int nx, int ny, double x0 = 2.0,
                                        double y0 = -4.0) {
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) pts.emplace_back(x0 + i * step, y0 + j * step, z);
  return pts;
}

TEST(PlaneRansac, ExactPlane) {
  auto pts = plane_grid(-2.0, 0.4, 25, 20);
  ASSERT_EQ(pts.size(), 500u);
  const auto c = test::cloud_of(pts, 1024, 64);
  const auto plane = fit_plane_ransac(c, PlaneParams{});
  EXPECT_NEAR(std::abs(plane.normal.z()), 1.0, 1e-12);
  EXPECT_NEAR(plane.d, 2.0, 1e-12);
  EXPECT_GT(plane.normal.z(), 0.0);
  EXPECT_EQ(plane.inliers.size(), 500u);
}

TEST(PlaneRansac, RejectsClutter) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ux(2.0, 20.0), uy(-8.0, 8.0), uz(0.0, 2.0);
  auto pts = plane_grid(-2.0, 0.5, 40, 20);
  const std::size_t n_plane = pts.size();
  for (std::size_t i = 0; i < n_plane / 4; ++i) pts.emplace_back(ux(rng), uy(rng), uz(rng));
  const auto c = test::cloud_of(pts, 1024, 64);
  PlaneParams params;
  const auto plane = fit_plane_ransac(c, params);
  EXPECT_LT(angle_deg(plane.normal, Eigen::Vector3d::UnitZ()), 0.5);
  EXPECT_EQ(plane.inliers.size(), n_plane);
  for (auto i : plane.inliers) EXPECT_LT(i, n_plane);
  // Inlier mask equals the distance predicate re-evaluated independently.
  std::vector<std::uint32_t> expect;
  for (std::uint32_t i = 0; i < c.size(); ++i)
    if (std::abs(plane.normal.dot(c[i].xyz()) + plane.d) <= params.th_plane) expect.push_back(i);
  EXPECT_EQ(std::vector<std::uint32_t>(plane.inliers.begin(), plane.inliers.end()), expect);
  EXPECT_NEAR(plane.normal.norm(), 1.0, 1e-9);
}

TEST(PlaneRansac, DegenerateInputs) {
  const auto two = test::cloud_of({{1, 0, -2}, {2, 0, -2}});
  EXPECT_THROW(fit_plane_ransac(two, PlaneParams{}), DegenerateInputError);
  std::vector<Eigen::Vector3d> line;
  for (int i = 0; i < 20; ++i) line.emplace_back(i, 2 * i, -2);
  EXPECT_THROW(fit_plane_ransac(test::cloud_of(line), PlaneParams{}), DegenerateInputError);
}

TEST(PlaneRansac, DeterministicPerSeed) {
  const auto frame = generate(profile_config(Profile::highway, 2, 0));
  const auto pb = prefilter(frame.cloud, PrefilterParams{});
  const auto a = fit_plane_ransac(frame.cloud, pb, PlaneParams{});
  const auto b = fit_plane_ransac(frame.cloud, pb, PlaneParams{});
  EXPECT_EQ(a.normal, b.normal);
  EXPECT_EQ(a.d, b.d);
  EXPECT_EQ(a.inliers, b.inliers);
  EXPECT_TRUE(a.inliers.is_subset_of(pb));
}

TEST(Normals, PlanarPatch) {
  const auto c = test::cloud_of(plane_grid(-2.0, 0.2, 30, 30), 1024, 64);
  const auto field = estimate_normals(c, IndexMask::all(c), 30);
  ASSERT_EQ(field.size(), c.size());
  for (const auto& n : field.normals) {
    EXPECT_NEAR(n.normal.z(), 1.0, 1e-9);
    EXPECT_LE(n.curvature, 1e-6);
    EXPECT_EQ(n.neighbors, 30u);
  }
}

TEST(Normals, SphereNormalsAreRadial) {
  // Fibonacci sphere, radius 10 m, centered on the sensor.
  const int n = 20000;
  std::vector<Eigen::Vector3d> pts;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - z * z);
    pts.emplace_back(10.0 * r * std::cos(golden * i), 10.0 * r * std::sin(golden * i), 10.0 * z);
  }
  const auto c = test::cloud_of(pts, 1024, 64);
  const auto field = estimate_normals(c, IndexMask::all(c), 30);
  double worst = 0.0;
  for (std::size_t m = 0; m < field.size(); ++m) {
    // Oriented toward the origin, i.e. against the radial direction.
    worst = std::max(worst, angle_deg(field.normals[m].normal, -pts[m]));
    EXPECT_NEAR(field.normals[m].normal.norm(), 1.0, 1e-9);
  }
  EXPECT_LT(worst, 2.0);
}

TEST(Normals, KLargerThanCloudIsError) {
  const auto c = test::cloud_of(plane_grid(-2.0, 0.2, 4, 4));
  EXPECT_THROW(estimate_normals(c, IndexMask::all(c), 30), DegenerateInputError);
}

TEST(Normals, CoincidentNeighborhoodIsFlagged) {
  std::vector<Eigen::Vector3d> pts(10, Eigen::Vector3d(3, 1, -2));
  const auto c = test::cloud_of(pts);
  const auto field = estimate_normals(c, IndexMask::all(c), 5);
  for (const auto& n : field.normals) {
    EXPECT_TRUE(n.degenerate);
    EXPECT_EQ(n.curvature, 0.0);
    EXPECT_NEAR(n.normal.norm(), 1.0, 1e-9);
  }
}

TEST(Normals, CurvatureBoundsOnRealisticFrame) {
  const auto frame = generate(profile_config(Profile::test_track, 9, 0));
  const auto pb = prefilter(frame.cloud, PrefilterParams{});
  const auto field = estimate_normals(frame.cloud, pb, 30);
  for (const auto& n : field.normals) {
    EXPECT_GE(n.curvature, 0.0);
    EXPECT_LE(n.curvature, 1.0 / 3.0 + 1e-12);
    EXPECT_NEAR(n.normal.norm(), 1.0, 1e-9);
  }
}

std::vector<Cluster> grow(const PointCloud& c, RegionParams params = {}) {
  const auto field = estimate_normals(c, IndexMask::all(c), params.k_neighbors);
  return region_grow(c, field, params);
}

void expect_partition(const std::vector<Cluster>& clusters, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& cl : clusters)
    for (auto i : cl.members) ++seen[i];
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(seen[i], 1) << "point " << i;
}

TEST(RegionGrow, SinglePlaneIsOneCluster) {
  const auto c = test::cloud_of(plane_grid(-2.0, 0.2, 30, 30), 1024, 64);
  const auto clusters = grow(c);
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].members.size(), c.size());
}

TEST(RegionGrow, FloorAndWallSplitByPlaneOfOrigin) {
  // Floor z = -2 for x in [2, 8), wall x = 8 rising from the floor.
  auto pts = plane_grid(-2.0, 0.2, 30, 40);
  const std::size_t n_floor = pts.size();
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 40; ++j) pts.emplace_back(8.0, -4.0 + 0.2 * j, -2.0 + 0.2 * i);
  const auto c = test::cloud_of(pts, 1024, 64);
  const auto clusters = grow(c);
  expect_partition(clusters, c.size());
  // No cluster mixes the two surfaces, and the two largest clusters are the
  // floor and the wall; the points along the shared edge have in-between
  // normals and may form their own small clusters.
  std::vector<std::size_t> sizes;
  for (const auto& cl : clusters) {
    std::size_t floor = 0;
    for (auto i : cl.members) floor += i < n_floor;
    EXPECT_TRUE(floor == 0 || floor == cl.members.size());
    sizes.push_back(cl.members.size());
  }
  std::sort(sizes.rbegin(), sizes.rend());
  ASSERT_GE(sizes.size(), 2u);
  EXPECT_GE(sizes[0] + sizes[1], c.size() - 2 * 40 * 3);
}

TEST(RegionGrow, PlaneWithIsolatedPoints) {
  auto pts = plane_grid(-2.0, 0.2, 30, 30);
  const std::size_t n_plane = pts.size();
  // Far from the plane and much farther from each other, so no isolated point
  // is among another's nearest neighbors.
  const std::vector<Eigen::Vector3d> isolated{
      {60, -1, -2}, {-50, -1, -2}, {5, 60, -2}, {5, -60, -2}, {5, -1, 50}};
  pts.insert(pts.end(), isolated.begin(), isolated.end());
  const auto c = test::cloud_of(pts, 1024, 64);
  const auto clusters = grow(c);
  expect_partition(clusters, c.size());
  std::size_t biggest = 0;
  for (const auto& cl : clusters) biggest = std::max(biggest, cl.members.size());
  EXPECT_EQ(biggest, n_plane);
  for (const auto& cl : clusters) {
    if (cl.members.size() == n_plane) {
      EXPECT_LT(cl.members[cl.members.size() - 1], n_plane);
    } else {
      EXPECT_EQ(cl.members.size(), 1u);
    }
  }
}

TEST(RegionGrow, DefaultCurvatureThresholdIsNoOp) {
  const auto frame = generate(profile_config(Profile::test_track, 13, 0));
  const auto pb = prefilter(frame.cloud, PrefilterParams{});
  const auto plane = fit_plane_ransac(frame.cloud, pb, PlaneParams{});
  const auto field = estimate_normals(frame.cloud, plane.inliers, 30);
  RegionParams literal;
  RegionParams huge;
  huge.th_curve = 1e9;
  const auto a = region_grow(frame.cloud, field, literal);
  const auto b = region_grow(frame.cloud, field, huge);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].members, b[i].members);
}

TEST(RegionGrow, OutputPartitionsInput) {
  const auto frame = generate(profile_config(Profile::highway, 13, 1));
  const auto pb = prefilter(frame.cloud, PrefilterParams{});
  const auto field = estimate_normals(frame.cloud, pb, 30);
  const auto clusters = region_grow(frame.cloud, field, RegionParams{});
  std::vector<std::uint32_t> all;
  for (const auto& cl : clusters) {
    EXPECT_TRUE(cl.members.is_subset_of(pb));
    all.insert(all.end(), cl.members.begin(), cl.members.end());
  }
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, std::vector<std::uint32_t>(pb.begin(), pb.end()));
}

TEST(RegionParams, Validation) {
  RegionParams p;
  p.k_neighbors = 2;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.th_angle_deg = 90.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.th_curve = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

Cluster cluster_of(const PointCloud& c, std::vector<std::uint32_t> idx) {
  Cluster cl;
  cl.members = IndexMask(c, std::move(idx));
  return cl;
}

TEST(SelectRoad, RoadBeatsLargerSidewalk) {
  // Road: annulus of 3..15 m around the nadir. Sidewalk: strip at y in [6, 9],
  // with ten times more points than in a real frame to rule out size bias.
  std::vector<Eigen::Vector3d> pts;
  std::vector<std::uint32_t> road, sidewalk;
  for (int i = 0; i < 5000; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 5000.0;
    const double r = 3.0 + 12.0 * ((i * 7919) % 5000) / 5000.0;
    pts.emplace_back(r * std::cos(a), 0.4 * r * std::sin(a), -1.9);
  }
  for (int i = 0; i < 50000; ++i) pts.emplace_back(-40.0 + 80.0 * i / 50000.0, 6.0 + (i % 30) * 0.1, -1.75);
  std::vector<LidarPoint> lp;
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    lp.push_back(test::point(pts[i].x(), pts[i].y(), pts[i].z(), i / 1024, i % 1024));
    (i < 5000 ? road : sidewalk).push_back(i);
  }
  const PointCloud c(lp, 64, 1024);
  const std::vector<Cluster> clusters{cluster_of(c, sidewalk), cluster_of(c, road)};
  EXPECT_EQ(select_road_cluster(clusters, c), clusters[1].members);
}

TEST(SelectRoad, SingleCluster) {
  const auto c = test::cloud_of({{5, 0, -2}, {6, 0, -2}, {7, 1, -2}});
  const std::vector<Cluster> clusters{cluster_of(c, {0, 1, 2})};
  EXPECT_EQ(select_road_cluster(clusters, c), clusters[0].members);
}

TEST(SelectRoad, EqualClustersPicksTheOneUnderTheVehicle) {
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 400; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 400.0;
    pts.emplace_back(4.0 * std::cos(a), 4.0 * std::sin(a), -1.9);
  }
  for (int i = 0; i < 400; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 400.0;
    pts.emplace_back(40.0 + 4.0 * std::cos(a), 4.0 * std::sin(a), -1.9);
  }
  const auto c = test::cloud_of(pts, 1024, 64);
  std::vector<std::uint32_t> near(400), far(400);
  for (std::uint32_t i = 0; i < 400; ++i) {
    near[i] = i;
    far[i] = 400 + i;
  }
  const std::vector<Cluster> clusters{cluster_of(c, far), cluster_of(c, near)};
  EXPECT_EQ(select_road_cluster(clusters, c), clusters[1].members);
}

TEST(SelectRoad, EmptyListIsError) {
  const auto c = test::cloud_of({{5, 0, -2}});
  EXPECT_THROW(select_road_cluster({}, c), DegenerateInputError);
}

TEST(SelectRoad, RoadOfSyntheticFrameHasNoCurbOrSidewalk) {
  for (auto profile : {Profile::test_track, Profile::highway}) {
    const auto frame = generate(profile_config(profile, 21, 0));
    const auto pb = prefilter(frame.cloud, PrefilterParams{});
    const auto plane = fit_plane_ransac(frame.cloud, pb, PlaneParams{});
    const auto field = estimate_normals(frame.cloud, plane.inliers, 30);
    const auto road = select_road_cluster(region_grow(frame.cloud, field, RegionParams{}),
                                          frame.cloud, 50);
    EXPECT_TRUE(road.is_subset_of(plane.inliers));
    std::size_t off_road = 0;
    for (auto i : road) off_road += frame.truth.labels[i] == Label::other;
    EXPECT_EQ(off_road, 0u) << to_string(profile);
  }
}

}  // namespace
}  // namespace refmark
