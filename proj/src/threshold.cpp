#include "refmark/threshold.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "refmark/error.hpp"

namespace refmark {
namespace {

using i128 = __int128;
using u128 = unsigned __int128;

// Exact ordering of diff^2 / den needs diff^2 * den < 2^127.
bool fits_exact(const RingHistogram& h) {
  const long double n = static_cast<long double>(h.samples);
  const long double b = static_cast<long double>(std::max(h.n_bins() - 1, 1));
  return std::log2(b) * 2 + std::log2(std::max(n, 1.0L)) * 6 < 126.0L;
}

struct Split {
  std::uint64_t n_r;  // samples in bins < t
  std::uint64_t s_r;  // sum of bin index over those samples
};

// sigma_b^2 * N^2 = diff^2 / (n_R n_M) with diff = s_R N - S n_R.
struct Score {
  u128 diff2;
  u128 den;
  long double approx;
};

Score score_of(const Split& sp, std::uint64_t n, std::uint64_t s) {
  const i128 diff = static_cast<i128>(sp.s_r) * static_cast<i128>(n) -
                    static_cast<i128>(s) * static_cast<i128>(sp.n_r);
  const u128 mag = static_cast<u128>(diff < 0 ? -diff : diff);
  const u128 den = static_cast<u128>(sp.n_r) * static_cast<u128>(n - sp.n_r);
  const long double ld = static_cast<long double>(mag);
  return {mag * mag, den, ld * ld / static_cast<long double>(den)};
}

bool greater(const Score& a, const Score& b, bool exact) {
  if (exact) return a.diff2 * b.den > b.diff2 * a.den;
  return a.approx > b.approx;
}

double to_variance(const Score& sc, std::uint64_t n) {
  const long double nn = static_cast<long double>(n);
  return static_cast<double>(sc.approx / (nn * nn));
}

}  // namespace

std::string_view to_string(Channel channel) {
  return channel == Channel::reflectivity ? "reflectivity" : "intensity";
}

std::string_view to_string(T0Mode mode) {
  return mode == T0Mode::mean_plus_var ? "mean_plus_var" : "mean_plus_std";
}

Channel parse_channel(std::string_view name) {
  if (name == "reflectivity") return Channel::reflectivity;
  if (name == "intensity") return Channel::intensity;
  throw ConfigError(fmt::format("unknown channel '{}' (reflectivity|intensity)", name));
}

T0Mode parse_t0_mode(std::string_view name) {
  if (name == "mean_plus_var") return T0Mode::mean_plus_var;
  if (name == "mean_plus_std") return T0Mode::mean_plus_std;
  throw ConfigError(
      fmt::format("unknown t0_mode '{}' (mean_plus_var|mean_plus_std)", name));
}

int to_bin(double value, int n_bins) {
  if (!(value > 0.0)) return 0;  // negatives and NaN
  if (value >= static_cast<double>(n_bins - 1)) return n_bins - 1;
  return static_cast<int>(std::lround(value));
}

RingHistogram ring_histogram_of_bins(std::span<const int> bins, int n_bins) {
  RingHistogram h;
  h.counts.assign(static_cast<std::size_t>(n_bins), 0);
  for (int b : bins) ++h.counts[static_cast<std::size_t>(std::clamp(b, 0, n_bins - 1))];
  h.samples = bins.size();
  h.degenerate = h.samples == 0;
  return h;
}

RingHistogram ring_histogram(std::span<const double> values, int n_bins) {
  if (n_bins < 2) throw ConfigError(fmt::format("n_bins must be >= 2 (got {})", n_bins));
  std::vector<int> bins(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) bins[i] = to_bin(values[i], n_bins);
  return ring_histogram_of_bins(bins, n_bins);
}

LayerStats layer_stats(std::span<const double> values) {
  LayerStats st;
  if (values.empty()) return st;
  double sum = 0.0, sum2 = 0.0;
  for (double v : values) {
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(values.size());
  st.mean = sum / n;
  st.variance = std::max(sum2 / n - st.mean * st.mean, 0.0);
  st.degenerate = false;
  return st;
}

double between_class_variance(const RingHistogram& hist, int t) {
  if (hist.samples == 0 || t <= 0 || t >= hist.n_bins()) return -1.0;
  std::uint64_t s = 0;
  Split sp{0, 0};
  for (int k = 0; k < hist.n_bins(); ++k) {
    s += static_cast<std::uint64_t>(k) * hist.counts[k];
    if (k < t) {
      sp.n_r += hist.counts[k];
      sp.s_r += static_cast<std::uint64_t>(k) * hist.counts[k];
    }
  }
  if (sp.n_r == 0 || sp.n_r == hist.samples) return -1.0;
  return to_variance(score_of(sp, hist.samples, s), hist.samples);
}

ThresholdResult otsu_restricted(const RingHistogram& hist, int t0) {
  ThresholdResult res;
  res.ring = hist.ring;
  res.t0 = t0;
  const int n_bins = hist.n_bins();
  if (hist.samples == 0 || n_bins < 2) return res;

  std::uint64_t total_s = 0;
  for (int k = 0; k < n_bins; ++k) total_s += static_cast<std::uint64_t>(k) * hist.counts[k];

  const int start = std::max(t0, 1);
  // Prefix sums over bins below the first candidate threshold.
  Split sp{0, 0};
  for (int k = 0; k < std::min(start - 1, n_bins); ++k) {
    sp.n_r += hist.counts[k];
    sp.s_r += static_cast<std::uint64_t>(k) * hist.counts[k];
  }

  const bool exact = fits_exact(hist);
  bool found = false;
  Score best{};
  for (int t = start; t < n_bins; ++t) {
    sp.n_r += hist.counts[t - 1];
    sp.s_r += static_cast<std::uint64_t>(t - 1) * hist.counts[t - 1];
    if (sp.n_r == 0 || sp.n_r == hist.samples) continue;
    const Score sc = score_of(sp, hist.samples, total_s);
    if (!found || greater(sc, best, exact)) {
      best = sc;
      res.threshold = t;
      found = true;
    }
  }
  if (found) {
    res.degenerate = false;
    res.between_class_variance = to_variance(best, hist.samples);
  }
  return res;
}

int initial_threshold(const LayerStats& stats, T0Mode mode, int n_bins) {
  const double spread =
      mode == T0Mode::mean_plus_var ? stats.variance : std::sqrt(stats.variance);
  const double t0 = stats.mean + spread;
  if (!(t0 > 0.0)) return 0;
  if (t0 >= static_cast<double>(n_bins - 1)) return n_bins - 1;
  return static_cast<int>(std::lround(t0));
}

void ThresholdParams::validate() const {
  if (n_bins < 2 || n_bins > 65536)
    throw ConfigError(fmt::format("threshold.n_bins must be in [2, 65536] (got {})", n_bins));
  if (!(min_separability >= 0.0 && min_separability <= 1.0))
    throw ConfigError(fmt::format("threshold.min_separability must be in [0, 1] (got {})",
                                  min_separability));
}

double channel_value(const LidarPoint& p, Channel channel) {
  return channel == Channel::reflectivity ? static_cast<double>(p.reflectivity)
                                          : static_cast<double>(p.intensity);
}

CandidateResult extract_candidates(const PointCloud& cloud, const IndexMask& input,
                                   const ThresholdParams& params) {
  params.validate();
  if (!input.belongs_to(cloud))
    throw StructuralError("threshold input mask does not reference this cloud");

  // Input is sorted by cloud index and the cloud is ring-major, so each ring
  // is one contiguous run of the mask.
  struct Run {
    int ring;
    std::size_t begin, end;
  };
  std::vector<Run> runs;
  for (std::size_t k = 0; k < input.size();) {
    const int ring = cloud[input[k]].ring;
    std::size_t e = k;
    while (e < input.size() && cloud[input[e]].ring == ring) ++e;
    runs.push_back({ring, k, e});
    k = e;
  }

  std::vector<ThresholdResult> results(runs.size());
  std::vector<std::vector<std::uint32_t>> kept(runs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(runs.size()); ++r) {
    const auto& run = runs[static_cast<std::size_t>(r)];
    std::vector<std::uint32_t> idx;
    std::vector<int> bins;
    std::vector<double> values;
    for (std::size_t k = run.begin; k < run.end; ++k) {
      const auto& p = cloud[input[k]];
      if (!p.valid) continue;
      idx.push_back(input[k]);
      bins.push_back(to_bin(channel_value(p, params.channel), params.n_bins));
      values.push_back(static_cast<double>(bins.back()));
    }
    auto hist = ring_histogram_of_bins(bins, params.n_bins);
    hist.ring = run.ring;
    const auto stats = layer_stats(values);
    auto& res = results[static_cast<std::size_t>(r)];
    res.ring = run.ring;
    if (stats.degenerate) continue;
    res = otsu_restricted(hist, initial_threshold(stats, params.t0_mode, params.n_bins));
    if (res.degenerate) continue;
    res.separability = std::clamp(res.between_class_variance / stats.variance, 0.0, 1.0);
    res.separable = res.separability >= params.min_separability;
    if (!res.separable) continue;
    auto& out = kept[static_cast<std::size_t>(r)];
    for (std::size_t m = 0; m < idx.size(); ++m)
      if (bins[m] >= res.threshold) out.push_back(idx[m]);
  }

  std::vector<std::uint32_t> all;
  for (const auto& v : kept) all.insert(all.end(), v.begin(), v.end());
  return {IndexMask(cloud, std::move(all)), std::move(results)};
}

}  // namespace refmark
