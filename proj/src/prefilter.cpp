#include "refmark/prefilter.hpp"

#include <fmt/format.h>

#include "refmark/error.hpp"

namespace refmark {

void PrefilterParams::validate() const {
  if (max_ring <= 0)
    throw ConfigError(fmt::format("prefilter.max_ring must be > 0 (got {})", max_ring));
  if (!(z_low < z_high))
    throw ConfigError(fmt::format("prefilter.z_low ({}) must be < z_high ({})",
                                  z_low, z_high));
}

IndexMask prefilter(const PointCloud& cloud, const PrefilterParams& params) {
  return prefilter(cloud, IndexMask::all(cloud), params);
}

IndexMask prefilter(const PointCloud& cloud, const IndexMask& input,
                    const PrefilterParams& params) {
  params.validate();
  if (params.max_ring > cloud.n_layers())
    throw ConfigError(fmt::format("prefilter.max_ring {} exceeds the cloud's {} layers",
                                  params.max_ring, cloud.n_layers()));
  if (!input.belongs_to(cloud))
    throw StructuralError("prefilter input mask does not reference this cloud");

  const double lo = params.z_band_absolute ? params.z_low : -params.z_high;
  const double hi = params.z_band_absolute ? params.z_high : -params.z_low;
  std::vector<std::uint32_t> kept;
  kept.reserve(input.size());
  for (auto i : input) {
    const auto& p = cloud[i];
    if (p.valid && p.ring < params.max_ring && p.z >= lo && p.z <= hi)
      kept.push_back(i);
  }
  return IndexMask(cloud, std::move(kept));
}

}  // namespace refmark
