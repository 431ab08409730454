#include "refmark/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <utility>

#include <fmt/format.h>

#include "refmark/error.hpp"

namespace refmark {
namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
auto timed(double& ms, F&& f) {
  const auto start = Clock::now();
  struct Stop {
    double& ms;
    Clock::time_point start;
    ~Stop() {
      ms += std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    }
  } stop{ms, start};
  return f();
}

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const DegenerateInputError& e) {
    throw StageError(name, e.what());
  }
}

void check_subset(const IndexMask& inner, const IndexMask& outer, const char* a,
                  const char* b) {
  if (!inner.is_subset_of(outer))
    throw StructuralError(fmt::format("mask chain broken: {} is not a subset of {}", a, b));
}

}  // namespace

void PipelineConfig::validate() const {
  prefilter.validate();
  region.validate();
  threshold.validate();
  lines.validate();
  if (!(plane.th_plane > 0.0)) throw ConfigError("ground.th_plane must be > 0");
  if (plane.max_iter <= 0) throw ConfigError("ground.max_iter must be > 0");
  if (workers <= 0) throw ConfigError("workers must be > 0");
}

void PipelineConfig::set_seed(std::uint64_t seed) {
  plane.seed = seed;
  lines.seed = seed;
}

std::size_t FrameResult::accepted_lines() const {
  return static_cast<std::size_t>(
      std::count_if(lines.begin(), lines.end(), [](const LineModel& l) { return l.accepted; }));
}

std::size_t FrameResult::predicted_markings() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::marking));
}

void FrameResult::check_chain() const {
  check_subset(candidates, road, "candidates", "road cluster");
  check_subset(road, pc, "road cluster", "plane inliers");
  check_subset(pc, pb, "plane inliers", "pre-filtered set");
  check_subset(pb, pa, "pre-filtered set", "input");
}

bool FrameResult::same_outputs(const FrameResult& o) const {
  auto same_plane = [](const std::optional<PlaneModel>& a, const std::optional<PlaneModel>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->normal == b->normal && a->d == b->d && a->inliers == b->inliers &&
           a->iterations == b->iterations;
  };
  auto same_rings = [](const std::vector<ThresholdResult>& a,
                       const std::vector<ThresholdResult>& b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                      [](const ThresholdResult& x, const ThresholdResult& y) {
                        return x.ring == y.ring && x.threshold == y.threshold &&
                               x.t0 == y.t0 && x.degenerate == y.degenerate &&
                               x.between_class_variance == y.between_class_variance &&
                               x.separability == y.separability &&
                               x.separable == y.separable;
                      });
  };
  return pa == o.pa && pb == o.pb && pc == o.pc && road == o.road &&
         candidates == o.candidates && same_plane(plane, o.plane) &&
         cluster_count == o.cluster_count && same_rings(rings, o.rings) &&
         lines == o.lines && labels == o.labels && stopped_at == o.stopped_at;
}

FrameResult run_geometry(const PointCloud& cloud, const PipelineConfig& config) {
  config.validate();
  FrameResult r;
  const auto start = Clock::now();
  r.labels.assign(cloud.size(), Label::other);
  r.pa = IndexMask::valid(cloud);
  r.pb = r.pc = r.road = r.candidates = IndexMask::none(cloud);

  r.pb = timed(r.timings.prefilter, [&] { return prefilter(cloud, r.pa, config.prefilter); });
  if (r.pb.empty()) {
    r.stopped_at = "prefilter";
  } else {
    r.plane = timed(r.timings.plane, [&] {
      return stage("plane", [&] { return fit_plane_ransac(cloud, r.pb, config.plane); });
    });
    r.pc = r.plane->inliers;
    const auto field = timed(r.timings.normals, [&] {
      return stage("normals",
                   [&] { return estimate_normals(cloud, r.pc, config.region.k_neighbors); });
    });
    r.road = timed(r.timings.region, [&] {
      return stage("region", [&] {
        const auto clusters = region_grow(cloud, field, config.region);
        r.cluster_count = clusters.size();
        return select_road_cluster(clusters, cloud, config.region.min_road_cluster);
      });
    });
  }
  r.timings.total = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return r;
}

void run_markings(const PointCloud& cloud, const PipelineConfig& config, FrameResult& r) {
  if (!r.stopped_at.empty()) return;
  const auto start = Clock::now();
  if (r.road.empty()) {
    r.stopped_at = "region";
  } else {
    auto cand = timed(r.timings.threshold, [&] {
      return extract_candidates(cloud, r.road, config.threshold);
    });
    r.candidates = std::move(cand.candidates);
    r.rings = std::move(cand.rings);
    if (r.candidates.empty()) {
      r.stopped_at = "threshold";
    } else {
      r.lines = timed(r.timings.lines, [&] {
        const PlaneModel* plane = config.lines.project_to_plane && r.plane ? &*r.plane : nullptr;
        return fit_lines_sequential(cloud, r.candidates, config.lines, plane);
      });
      r.labels = marking_labels(r.lines, cloud.size());
    }
  }
  r.timings.total += std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  r.check_chain();
}

FrameResult run_frame(const PointCloud& cloud, const PipelineConfig& config) {
  auto r = run_geometry(cloud, config);
  run_markings(cloud, config, r);
  return r;
}

std::vector<std::size_t> BatchResult::failed() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (!frames[i].ok) out.push_back(i);
  return out;
}

namespace {

void summarize(FrameSummary& s, const LabeledFrame& frame, const FrameResult& r,
               std::string_view channel) {
  s.ok = true;
  s.points = frame.cloud.size();
  s.accepted_lines = r.accepted_lines();
  s.predicted_markings = r.predicted_markings();
  s.timings = r.timings;
  if (frame.truth) s.counts = evaluate(r.labels, *frame.truth, std::string(channel)).counts;
}

EvalReport micro_report(const std::vector<FrameSummary>& frames, std::string_view channel) {
  Counts total;
  std::vector<Counts> per_frame;
  for (const auto& f : frames) {
    if (!f.ok || !f.counts) continue;
    total += *f.counts;
    per_frame.push_back(*f.counts);
  }
  auto report = make_report(total, std::string(channel));
  report.frames = std::move(per_frame);
  return report;
}

template <typename Body>
void for_frames(std::size_t n_frames, int workers, std::vector<FrameSummary>& a,
                std::vector<FrameSummary>* b, const FrameSource& source, Body body) {
  if (n_frames == 0) throw ConfigError("batch needs at least one frame");
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_frames); ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      const auto frame = source(k);
      a[k].name = frame.name;
      if (b != nullptr) (*b)[k].name = frame.name;
      body(k, frame);
    } catch (const std::exception& e) {
      a[k].ok = false;
      a[k].error = e.what();
      if (b != nullptr) {
        (*b)[k].ok = false;
        (*b)[k].error = e.what();
      }
    }
    if (a[k].name.empty()) a[k].name = fmt::format("frame_{:04d}", k);
    if (b != nullptr && (*b)[k].name.empty()) (*b)[k].name = a[k].name;
  }
}

}  // namespace

BatchResult run_batch(std::size_t n_frames, const FrameSource& source,
                      const PipelineConfig& config, const FrameSink& sink) {
  config.validate();
  BatchResult out;
  out.frames.resize(n_frames);
  for_frames(n_frames, config.workers, out.frames, nullptr, source,
             [&](std::size_t k, const LabeledFrame& frame) {
               const auto r = run_frame(frame.cloud, config);
               summarize(out.frames[k], frame, r, to_string(config.threshold.channel));
               if (sink) sink(k, frame, r);
             });
  out.report = micro_report(out.frames, to_string(config.threshold.channel));
  return out;
}

ChannelComparison compare_channels(std::size_t n_frames, const FrameSource& source,
                                   const PipelineConfig& config) {
  config.validate();
  auto refl = config;
  refl.threshold.channel = Channel::reflectivity;
  auto inten = config;
  inten.threshold.channel = Channel::intensity;

  ChannelComparison out;
  out.reflectivity.frames.resize(n_frames);
  out.intensity.frames.resize(n_frames);
  for_frames(n_frames, config.workers, out.reflectivity.frames, &out.intensity.frames, source,
             [&](std::size_t k, const LabeledFrame& frame) {
               const auto geometry = run_geometry(frame.cloud, config);
               auto r = geometry;
               run_markings(frame.cloud, refl, r);
               summarize(out.reflectivity.frames[k], frame, r, "reflectivity");
               r = geometry;
               run_markings(frame.cloud, inten, r);
               summarize(out.intensity.frames[k], frame, r, "intensity");
             });
  out.reflectivity.report = micro_report(out.reflectivity.frames, "reflectivity");
  out.intensity.report = micro_report(out.intensity.frames, "intensity");
  return out;
}

}  // namespace refmark
