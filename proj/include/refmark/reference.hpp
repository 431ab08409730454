#pragma once

// Serial, straightforward versions of the parallel kernels. They draw the
// same random hypotheses and must return identical results; tests compare
// the two and the benchmark times them.

#include "refmark/ground.hpp"
#include "refmark/lines.hpp"
#include "refmark/threshold.hpp"

namespace refmark::reference {

// Brute-force k nearest neighbors (full scan, ties by index).
NormalField estimate_normals(const PointCloud& cloud, const IndexMask& input, int k);

PlaneModel fit_plane_ransac(const PointCloud& cloud, const IndexMask& input,
                            const PlaneParams& params);

std::vector<LineModel> fit_lines_sequential(const PointCloud& cloud,
                                            const IndexMask& candidates,
                                            const LineParams& params,
                                            const PlaneModel* plane = nullptr);

// Rings visited one after another; each ring's values gathered by scanning
// the whole input.
CandidateResult extract_candidates(const PointCloud& cloud, const IndexMask& input,
                                   const ThresholdParams& params);

}  // namespace refmark::reference
