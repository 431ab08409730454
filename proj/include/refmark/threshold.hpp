#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "refmark/cloud.hpp"

namespace refmark {

enum class Channel { reflectivity, intensity };
enum class T0Mode { mean_plus_var, mean_plus_std };

std::string_view to_string(Channel channel);
std::string_view to_string(T0Mode mode);
Channel parse_channel(std::string_view name);
T0Mode parse_t0_mode(std::string_view name);

// Per-ring histogram of channel values. Counts are kept exactly so threshold
// search can run on integers; freq() is the normalized form.
struct RingHistogram {
  int ring{-1};
  std::vector<std::uint64_t> counts;
  std::uint64_t samples{0};
  bool degenerate{true};  // no samples

  int n_bins() const { return static_cast<int>(counts.size()); }
  double freq(int k) const {
    return samples == 0 ? 0.0
                        : static_cast<double>(counts[k]) / static_cast<double>(samples);
  }
};

struct LayerStats {
  double mean{0.0};
  double variance{0.0};
  bool degenerate{true};
};

struct ThresholdResult {
  int ring{-1};
  int threshold{0};  // t*: values >= t* are candidates
  int t0{0};
  double between_class_variance{0.0};
  bool degenerate{true};
  // Otsu's separability sigma_b^2(t*) / sigma_total^2, in [0, 1].
  double separability{0.0};
  // Non-degenerate and separability >= min_separability.
  bool separable{false};
};

// Bin of a raw sample: rounded to the nearest integer, clamped into
// [0, n_bins - 1].
int to_bin(double value, int n_bins);

RingHistogram ring_histogram(std::span<const double> values, int n_bins);
RingHistogram ring_histogram_of_bins(std::span<const int> bins, int n_bins);

// Mean and population variance E[v^2] - E[v]^2.
LayerStats layer_stats(std::span<const double> values);

// Restricted Otsu search: argmax of w_R w_M (mu_R - mu_M)^2 over
// t in [max(t0, 1), n_bins - 1], smallest t on ties. Class R holds bins < t.
// Degenerate when no t in the window has mass on both sides.
ThresholdResult otsu_restricted(const RingHistogram& hist, int t0);

// Between-class variance at a single threshold; -1 when one side is empty.
double between_class_variance(const RingHistogram& hist, int t);

int initial_threshold(const LayerStats& stats, T0Mode mode, int n_bins);

struct ThresholdParams {
  int n_bins{256};
  Channel channel{Channel::reflectivity};
  T0Mode t0_mode{T0Mode::mean_plus_std};
  // Rings whose split explains less than this share of the ring's variance
  // are treated as unimodal and give no candidates. 0 disables the test.
  double min_separability{0.6};

  void validate() const;
};

struct CandidateResult {
  IndexMask candidates;
  std::vector<ThresholdResult> rings;  // one per ring present in the input
};

// Per ring of the input: histogram, stats, t0, restricted Otsu, then keep
// points whose binned value is >= t*. Degenerate rings and rings below
// min_separability contribute nothing.
// Rings are processed in parallel.
CandidateResult extract_candidates(const PointCloud& cloud, const IndexMask& input,
                                   const ThresholdParams& params);

double channel_value(const LidarPoint& p, Channel channel);

}  // namespace refmark
