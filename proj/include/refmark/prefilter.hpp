#pragma once

#include "refmark/cloud.hpp"

namespace refmark {

struct PrefilterParams {
  int max_ring{30};
  // Band limits in meters. By default they are depths below the sensor
  // origin, so the kept band is z in [-z_high, -z_low].
  double z_low{1.44};
  double z_high{2.44};
  // Keep z in [z_low, z_high] as written instead.
  bool z_band_absolute{false};

  void validate() const;
};

// Keeps valid points of the lowest max_ring rings that fall inside the
// height band. Empty output is not an error.
IndexMask prefilter(const PointCloud& cloud, const PrefilterParams& params);
IndexMask prefilter(const PointCloud& cloud, const IndexMask& input,
                    const PrefilterParams& params);

}  // namespace refmark
