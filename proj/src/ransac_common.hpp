#pragma once

// Hypothesis sampling and consensus counting shared by the parallel RANSAC
// kernels and their serial references. Sampling lives here so both draw the
// exact same hypotheses.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "refmark/ground.hpp"
#include "refmark/random.hpp"

namespace refmark::ransac {

struct PlaneHypothesis {
  Eigen::Vector3d normal{0.0, 0.0, 1.0};
  double d{0.0};
  std::int64_t score{-1};
  bool ok{false};
};

struct LineHypothesis {
  Eigen::Vector3d anchor{0.0, 0.0, 0.0};
  Eigen::Vector3d direction{1.0, 0.0, 0.0};
  std::int64_t score{-1};
  bool ok{false};
};

inline PlaneHypothesis draw_plane(const std::vector<Eigen::Vector3d>& pts,
                                  std::uint64_t seed, std::uint64_t iteration) {
  Rng rng(derive_seed(seed, {iteration}));
  const auto n = pts.size();
  const auto a = uniform_index(rng, n);
  auto b = uniform_index(rng, n);
  while (b == a) b = uniform_index(rng, n);
  auto c = uniform_index(rng, n);
  while (c == a || c == b) c = uniform_index(rng, n);
  PlaneHypothesis h;
  h.ok = detail::plane_from_points(pts[a], pts[b], pts[c], h.normal, h.d);
  return h;
}

inline std::int64_t count_plane_inliers(const std::vector<Eigen::Vector3d>& pts,
                                        const Eigen::Vector3d& normal, double d,
                                        double th) {
  std::int64_t count = 0;
  for (const auto& p : pts) count += std::abs(normal.dot(p) + d) <= th ? 1 : 0;
  return count;
}

inline std::vector<std::uint32_t> plane_inliers(const std::vector<Eigen::Vector3d>& pts,
                                                const Eigen::Vector3d& normal,
                                                double d, double th) {
  std::vector<std::uint32_t> out;
  for (std::size_t m = 0; m < pts.size(); ++m)
    if (std::abs(normal.dot(pts[m]) + d) <= th) out.push_back(static_cast<std::uint32_t>(m));
  return out;
}

// Positions are into `pts`; `active` lists the positions still in play.
inline LineHypothesis draw_line(const std::vector<Eigen::Vector3d>& pts,
                                std::span<const std::uint32_t> active,
                                std::uint64_t seed, std::uint64_t line,
                                std::uint64_t iteration) {
  Rng rng(derive_seed(seed, {line, iteration}));
  const auto n = active.size();
  const auto a = uniform_index(rng, n);
  auto b = uniform_index(rng, n);
  while (b == a) b = uniform_index(rng, n);
  LineHypothesis h;
  const Eigen::Vector3d dir = pts[active[b]] - pts[active[a]];
  const double len = dir.norm();
  if (len > 1e-9) {
    h.anchor = pts[active[a]];
    h.direction = dir / len;
    h.ok = true;
  }
  return h;
}

inline bool within_line(const Eigen::Vector3d& p, const Eigen::Vector3d& anchor,
                        const Eigen::Vector3d& dir, double th2) {
  return (p - anchor).cross(dir).squaredNorm() <= th2;
}

inline std::int64_t count_line_inliers(const std::vector<Eigen::Vector3d>& pts,
                                       std::span<const std::uint32_t> active,
                                       const Eigen::Vector3d& anchor,
                                       const Eigen::Vector3d& dir, double th) {
  const double th2 = th * th;
  std::int64_t count = 0;
  for (auto m : active) count += within_line(pts[m], anchor, dir, th2) ? 1 : 0;
  return count;
}

// First index with the highest score among valid hypotheses, -1 if none.
template <typename H>
std::ptrdiff_t best_hypothesis(const std::vector<H>& hyps) {
  std::ptrdiff_t best = -1;
  for (std::size_t i = 0; i < hyps.size(); ++i)
    if (hyps[i].ok && (best < 0 || hyps[i].score > hyps[best].score))
      best = static_cast<std::ptrdiff_t>(i);
  return best;
}

}  // namespace refmark::ransac
