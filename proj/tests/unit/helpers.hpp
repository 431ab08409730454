#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <gtest/gtest.h>
#include <unistd.h>

#include "refmark/cloud.hpp"

namespace refmark::test {

inline LidarPoint point(double x, double y, double z, std::uint16_t ring, std::uint16_t col,
                        std::uint16_t refl = 0, float intensity = 0.0f) {
  LidarPoint p;
  p.x = x;
  p.y = y;
  p.z = z;
  p.range = std::sqrt(x * x + y * y + z * z);
  p.ring = ring;
  p.col = col;
  p.reflectivity = refl;
  p.intensity = intensity;
  return p;
}

// Assigns consecutive (ring, col) addresses, n_cols per ring.
inline PointCloud cloud_of(const std::vector<Eigen::Vector3d>& xyz, int n_cols = 0,
                           int n_layers = 0) {
  const int cols = n_cols > 0 ? n_cols : static_cast<int>(std::max<std::size_t>(xyz.size(), 1));
  const int layers =
      n_layers > 0 ? n_layers : static_cast<int>((xyz.size() + cols - 1) / cols + 1);
  std::vector<LidarPoint> pts;
  for (std::size_t i = 0; i < xyz.size(); ++i)
    pts.push_back(point(xyz[i].x(), xyz[i].y(), xyz[i].z(), static_cast<std::uint16_t>(i / cols),
                        static_cast<std::uint16_t>(i % cols)));
  return PointCloud(std::move(pts), layers, cols);
}

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = std::filesystem::temp_directory_path() /
            ("refmark_" + std::string(info ? info->name() : "t") + "_" +
             std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace refmark::test
