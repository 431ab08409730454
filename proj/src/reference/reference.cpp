#include "refmark/reference.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "refmark/error.hpp"
#include "ransac_common.hpp"

namespace refmark::reference {

NormalField estimate_normals(const PointCloud& cloud, const IndexMask& input, int k) {
  if (!input.belongs_to(cloud))
    throw StructuralError("normal estimation input mask does not reference this cloud");
  if (k < 3) throw ConfigError(fmt::format("k_neighbors must be >= 3 (got {})", k));
  if (input.size() < static_cast<std::size_t>(k))
    throw DegenerateInputError(fmt::format(
        "normal estimation needs at least k={} points, got {}", k, input.size()));

  const std::size_t n = input.size();
  const auto kk = static_cast<std::size_t>(k);
  std::vector<Eigen::Vector3d> pts(n);
  for (std::size_t m = 0; m < n; ++m) pts[m] = cloud[input[m]].xyz();

  NormalField field;
  field.points = input;
  field.k = k;
  field.normals.resize(n);
  field.neighbors.resize(n * kk);
  std::vector<std::pair<double, std::uint32_t>> all(n);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t q = 0; q < n; ++q)
      all[q] = {(pts[q] - pts[m]).squaredNorm(), static_cast<std::uint32_t>(q)};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(kk), all.end());
    auto* row = field.neighbors.data() + m * kk;
    for (std::size_t j = 0; j < kk; ++j) row[j] = all[j].second;
    field.normals[m] = detail::normal_from_neighborhood(pts, {row, kk}, pts[m]);
  }
  return field;
}

PlaneModel fit_plane_ransac(const PointCloud& cloud, const IndexMask& input,
                            const PlaneParams& params) {
  if (!input.belongs_to(cloud))
    throw StructuralError("plane fit input mask does not reference this cloud");
  if (params.max_iter <= 0 || !(params.th_plane > 0.0))
    throw ConfigError("ground.max_iter and ground.th_plane must be positive");
  std::vector<std::uint32_t> idx;
  for (auto i : input)
    if (cloud[i].valid) idx.push_back(i);
  if (idx.size() < 3) throw DegenerateInputError("plane fit needs at least 3 points");
  std::vector<Eigen::Vector3d> pts;
  for (auto i : idx) pts.push_back(cloud[i].xyz());
  Eigen::Vector3d n;
  double d;
  if (!detail::fit_plane_lsq(cloud, idx, n, d))
    throw DegenerateInputError("plane fit input points are collinear");

  auto inliers_of = [&](const Eigen::Vector3d& nn, double dd) {
    std::vector<std::uint32_t> out;
    for (std::size_t m = 0; m < pts.size(); ++m)
      if (std::abs(nn.dot(pts[m]) + dd) <= params.th_plane) out.push_back(idx[m]);
    return out;
  };

  bool found = false;
  std::size_t best_score = 0;
  for (int it = 0; it < params.max_iter; ++it) {
    const auto h = ransac::draw_plane(pts, params.seed, static_cast<std::uint64_t>(it));
    if (!h.ok) continue;
    const auto score = inliers_of(h.normal, h.d).size();
    if (!found || score > best_score) {
      found = true;
      best_score = score;
      n = h.normal;
      d = h.d;
    }
  }
  if (!found) detail::fit_plane_lsq(cloud, idx, n, d);

  Eigen::Vector3d rn;
  double rd;
  if (detail::fit_plane_lsq(cloud, inliers_of(n, d), rn, rd) &&
      (!found || inliers_of(rn, rd).size() >= best_score)) {
    n = rn;
    d = rd;
  }
  PlaneModel model;
  model.normal = n;
  model.d = d;
  model.iterations = params.max_iter;
  model.inliers = IndexMask(cloud, inliers_of(n, d));
  return model;
}

std::vector<LineModel> fit_lines_sequential(const PointCloud& cloud,
                                            const IndexMask& candidates,
                                            const LineParams& params,
                                            const PlaneModel* plane) {
  params.validate();
  if (!candidates.belongs_to(cloud))
    throw StructuralError("line fit input mask does not reference this cloud");
  std::vector<std::uint32_t> idx;
  for (auto i : candidates)
    if (cloud[i].valid) idx.push_back(i);
  std::vector<Eigen::Vector3d> pts;
  for (auto i : idx) {
    Eigen::Vector3d p = cloud[i].xyz();
    if (params.project_to_plane && plane != nullptr) p -= plane->signed_distance(p) * plane->normal;
    pts.push_back(p);
  }
  std::vector<std::uint32_t> active(idx.size());
  for (std::size_t m = 0; m < active.size(); ++m) active[m] = static_cast<std::uint32_t>(m);

  auto support_of = [&](const Eigen::Vector3d& a, const Eigen::Vector3d& dir) {
    std::vector<std::uint32_t> out;
    for (auto m : active)
      if ((pts[m] - a).cross(dir).squaredNorm() <= params.th_lines * params.th_lines)
        out.push_back(m);
    return out;
  };

  std::vector<LineModel> lines;
  while (static_cast<int>(lines.size()) < params.max_lines && active.size() >= 2) {
    bool found = false;
    std::size_t best_score = 0;
    Eigen::Vector3d anchor = Eigen::Vector3d::Zero();
    Eigen::Vector3d dir = Eigen::Vector3d::UnitX();
    for (int it = 0; it < params.max_iter; ++it) {
      const auto h = ransac::draw_line(pts, active, params.seed, lines.size(),
                                       static_cast<std::uint64_t>(it));
      if (!h.ok) continue;
      const auto score = support_of(h.anchor, h.direction).size();
      if (!found || score > best_score) {
        found = true;
        best_score = score;
        anchor = h.anchor;
        dir = h.direction;
      }
    }
    if (!found) break;
    Eigen::Vector3d ra, rd;
    if (detail::fit_line_lsq(pts, support_of(anchor, dir), ra, rd) &&
        support_of(ra, rd).size() >= best_score) {
      anchor = ra;
      dir = rd;
    }
    detail::canonicalize_direction(dir);

    const auto support_pos = support_of(anchor, dir);
    std::vector<std::uint32_t> support, remaining;
    std::size_t s = 0;
    for (auto m : active) {
      if (s < support_pos.size() && support_pos[s] == m) {
        support.push_back(idx[m]);
        ++s;
      } else {
        remaining.push_back(m);
      }
    }
    LineModel line;
    line.anchor = anchor;
    line.direction = dir;
    line.accepted = static_cast<int>(support.size()) > params.min_support;
    line.support = IndexMask(cloud, std::move(support));
    lines.push_back(line);
    active = std::move(remaining);
    if (!line.accepted) break;
  }
  return lines;
}

CandidateResult extract_candidates(const PointCloud& cloud, const IndexMask& input,
                                   const ThresholdParams& params) {
  params.validate();
  if (!input.belongs_to(cloud))
    throw StructuralError("threshold input mask does not reference this cloud");
  std::vector<std::uint32_t> kept;
  std::vector<ThresholdResult> rings;
  for (int ring = 0; ring < cloud.n_layers(); ++ring) {
    bool present = false;
    std::vector<std::uint32_t> idx;
    std::vector<int> bins;
    std::vector<double> values;
    for (auto i : input) {
      if (cloud[i].ring != ring) continue;
      present = true;
      if (!cloud[i].valid) continue;
      idx.push_back(i);
      bins.push_back(to_bin(channel_value(cloud[i], params.channel), params.n_bins));
      values.push_back(bins.back());
    }
    if (!present) continue;
    ThresholdResult res;
    res.ring = ring;
    const auto stats = layer_stats(values);
    if (!stats.degenerate) {
      auto hist = ring_histogram_of_bins(bins, params.n_bins);
      hist.ring = ring;
      res = otsu_restricted(hist, initial_threshold(stats, params.t0_mode, params.n_bins));
      if (!res.degenerate) {
        res.separability = std::clamp(res.between_class_variance / stats.variance, 0.0, 1.0);
        res.separable = res.separability >= params.min_separability;
        if (res.separable)
          for (std::size_t m = 0; m < idx.size(); ++m)
            if (bins[m] >= res.threshold) kept.push_back(idx[m]);
      }
    }
    rings.push_back(res);
  }
  std::sort(kept.begin(), kept.end());
  return {IndexMask(cloud, std::move(kept)), std::move(rings)};
}

}  // namespace refmark::reference
