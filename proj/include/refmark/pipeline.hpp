#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "refmark/cloud.hpp"
#include "refmark/ground.hpp"
#include "refmark/labels.hpp"
#include "refmark/lines.hpp"
#include "refmark/metrics.hpp"
#include "refmark/prefilter.hpp"
#include "refmark/threshold.hpp"

namespace refmark {

struct PipelineConfig {
  PrefilterParams prefilter;
  PlaneParams plane;
  RegionParams region;
  ThresholdParams threshold;
  LineParams lines;
  int workers{1};  // concurrent frames in batch runs

  void validate() const;
  // Same seed for both RANSAC stages.
  void set_seed(std::uint64_t seed);
};

// Wall-clock milliseconds per stage.
struct StageTimings {
  double prefilter{0.0};
  double plane{0.0};
  double normals{0.0};
  double region{0.0};
  double threshold{0.0};
  double lines{0.0};
  double total{0.0};
};

struct FrameResult {
  IndexMask pa;          // valid returns of the frame
  IndexMask pb;          // pre-filtered
  IndexMask pc;          // plane inliers
  IndexMask road;        // road cluster
  IndexMask candidates;  // per-ring threshold output
  std::optional<PlaneModel> plane;
  std::size_t cluster_count{0};
  std::vector<ThresholdResult> rings;
  std::vector<LineModel> lines;
  std::vector<Label> labels;  // marking | other, one per frame point
  StageTimings timings;
  // Name of the stage whose output was empty, when the run stopped early.
  std::string stopped_at;

  std::size_t accepted_lines() const;
  std::size_t predicted_markings() const;
  // Throws StructuralError unless candidates ⊆ road ⊆ pc ⊆ pb ⊆ pa.
  void check_chain() const;
  // Equality of everything except timings.
  bool same_outputs(const FrameResult& other) const;
};

// Pre-filter, plane RANSAC, normals and region growing. A degenerate-input
// failure is rethrown as StageError naming the stage. Channel independent.
FrameResult run_geometry(const PointCloud& cloud, const PipelineConfig& config);

// Threshold and line stages on top of run_geometry's output.
void run_markings(const PointCloud& cloud, const PipelineConfig& config,
                  FrameResult& result);

FrameResult run_frame(const PointCloud& cloud, const PipelineConfig& config);

struct LabeledFrame {
  std::string name;
  PointCloud cloud;
  std::optional<std::vector<Label>> truth;
};

// Produces frame `index` of a batch. May throw; the failure is recorded for
// that frame only.
using FrameSource = std::function<LabeledFrame(std::size_t index)>;

// Called once per successful frame, possibly from several threads at once.
using FrameSink =
    std::function<void(std::size_t index, const LabeledFrame&, const FrameResult&)>;

struct FrameSummary {
  std::string name;
  bool ok{false};
  std::string error;
  std::optional<Counts> counts;  // present when ground truth was available
  std::size_t points{0};
  std::size_t accepted_lines{0};
  std::size_t predicted_markings{0};
  StageTimings timings;
};

struct BatchResult {
  EvalReport report;  // micro-average over successful frames with truth
  std::vector<FrameSummary> frames;

  std::vector<std::size_t> failed() const;
};

// Runs n_frames frames, up to config.workers at a time. Results do not depend
// on the worker count. Zero frames is a ConfigError.
BatchResult run_batch(std::size_t n_frames, const FrameSource& source,
                      const PipelineConfig& config, const FrameSink& sink = {});

struct ChannelComparison {
  BatchResult reflectivity;
  BatchResult intensity;
};

// Two runs that differ only in the histogram channel. The geometric stages
// do not read either channel, so they are computed once per frame and shared.
ChannelComparison compare_channels(std::size_t n_frames, const FrameSource& source,
                                   const PipelineConfig& config);

}  // namespace refmark
