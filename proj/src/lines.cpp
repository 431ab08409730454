#include "refmark/lines.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "refmark/error.hpp"
#include "ransac_common.hpp"

namespace refmark {
namespace detail {

// Principal axis of the points; false when they all coincide.
bool fit_line_lsq(const std::vector<Eigen::Vector3d>& pts,
                  std::span<const std::uint32_t> members, Eigen::Vector3d& anchor,
                  Eigen::Vector3d& dir) {
  if (members.size() < 2) return false;
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (auto m : members) c += pts[m];
  c /= static_cast<double>(members.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto m : members) {
    const Eigen::Vector3d q = pts[m] - c;
    cov.noalias() += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  if (!(es.eigenvalues()(2) > 0.0)) return false;
  anchor = c;
  dir = es.eigenvectors().col(2).normalized();
  return true;
}

// Sign convention: first non-zero component of the direction is positive.
void canonicalize_direction(Eigen::Vector3d& dir) {
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > 0.0) return;
    if (dir[a] < 0.0) {
      dir = -dir;
      return;
    }
  }
}

}  // namespace detail

using detail::canonicalize_direction;
using detail::fit_line_lsq;

void LineParams::validate() const {
  if (!(th_lines > 0.0) || max_lines <= 0 || min_support <= 0 || max_iter <= 0)
    throw ConfigError("lines.th_lines, max_lines, min_support and max_iter must be positive");
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
  std::vector<Eigen::Vector3d> pts(idx.size());
  for (std::size_t m = 0; m < idx.size(); ++m) {
    pts[m] = cloud[idx[m]].xyz();
    if (params.project_to_plane && plane != nullptr)
      pts[m] -= plane->signed_distance(pts[m]) * plane->normal;
  }

  std::vector<std::uint32_t> active(idx.size());
  for (std::size_t m = 0; m < active.size(); ++m) active[m] = static_cast<std::uint32_t>(m);

  const double th2 = params.th_lines * params.th_lines;
  const auto iters = static_cast<std::size_t>(params.max_iter);
  std::vector<ransac::LineHypothesis> hyps(iters);
  std::vector<LineModel> lines;

  while (static_cast<int>(lines.size()) < params.max_lines && active.size() >= 2) {
    const auto line_no = static_cast<std::uint64_t>(lines.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t it = 0; it < static_cast<std::ptrdiff_t>(iters); ++it) {
      auto& h = hyps[static_cast<std::size_t>(it)];
      h = ransac::draw_line(pts, active, params.seed, line_no,
                            static_cast<std::uint64_t>(it));
      if (h.ok)
        h.score = ransac::count_line_inliers(pts, active, h.anchor, h.direction,
                                             params.th_lines);
    }
    const auto best = ransac::best_hypothesis(hyps);
    if (best < 0) break;  // every remaining point coincides

    Eigen::Vector3d anchor = hyps[best].anchor;
    Eigen::Vector3d dir = hyps[best].direction;
    std::vector<std::uint32_t> consensus;
    for (auto m : active)
      if (ransac::within_line(pts[m], anchor, dir, th2)) consensus.push_back(m);

    Eigen::Vector3d ra, rd;
    if (fit_line_lsq(pts, consensus, ra, rd)) {
      const auto refit = ransac::count_line_inliers(pts, active, ra, rd, params.th_lines);
      if (refit >= hyps[best].score) {
        anchor = ra;
        dir = rd;
      }
    }
    canonicalize_direction(dir);

    std::vector<std::uint32_t> support_pos, remaining;
    remaining.reserve(active.size());
    for (auto m : active) {
      if (ransac::within_line(pts[m], anchor, dir, th2))
        support_pos.push_back(m);
      else
        remaining.push_back(m);
    }
    std::vector<std::uint32_t> support;
    support.reserve(support_pos.size());
    for (auto m : support_pos) support.push_back(idx[m]);

    LineModel line;
    line.anchor = anchor;
    line.direction = dir;
    line.accepted = static_cast<int>(support.size()) > params.min_support;
    line.support = IndexMask(cloud, std::move(support));
    const bool accepted = line.accepted;
    lines.push_back(std::move(line));
    active = std::move(remaining);
    if (!accepted) break;
  }
  return lines;
}

std::vector<Label> marking_labels(const std::vector<LineModel>& lines,
                                  std::size_t frame_size) {
  std::vector<Label> out(frame_size, Label::other);
  for (const auto& line : lines) {
    if (!line.accepted) continue;
    if (line.support.parent_size() != frame_size)
      throw StructuralError("line support does not reference a frame of this size");
    for (auto i : line.support) {
      if (out[i] == Label::marking)
        throw StructuralError(fmt::format("point {} supports two accepted lines", i));
      out[i] = Label::marking;
    }
  }
  return out;
}

}  // namespace refmark
