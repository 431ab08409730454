// Parallel kernels against their serial reference versions on one synthetic
// frame. Set OMP_NUM_THREADS to compare thread counts.

#include <benchmark/benchmark.h>

#include "refmark/pipeline.hpp"
#include "refmark/reference.hpp"
#include "refmark/synth.hpp"

namespace {

using namespace refmark;

struct Fixture {
  SynthFrame frame = generate(profile_config(Profile::test_track, 1, 0));
  PipelineConfig config;
  FrameResult result = run_frame(frame.cloud, config);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_PlaneParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_plane_ransac(f.frame.cloud, f.result.pb, f.config.plane));
}

void BM_PlaneSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        reference::fit_plane_ransac(f.frame.cloud, f.result.pb, f.config.plane));
}

void BM_NormalsKdTree(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        estimate_normals(f.frame.cloud, f.result.pc, f.config.region.k_neighbors));
}

void BM_NormalsBruteForce(benchmark::State& state) {
  const auto& f = fixture();
  // The full scan is quadratic; time it on the first 4000 plane inliers.
  const auto idx = f.result.pc.indices();
  const IndexMask subset(f.frame.cloud,
                         std::vector<std::uint32_t>(idx.begin(), idx.begin() + 4000));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        reference::estimate_normals(f.frame.cloud, subset, f.config.region.k_neighbors));
}

void BM_NormalsKdTreeSubset(benchmark::State& state) {
  const auto& f = fixture();
  const auto idx = f.result.pc.indices();
  const IndexMask subset(f.frame.cloud,
                         std::vector<std::uint32_t>(idx.begin(), idx.begin() + 4000));
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_normals(f.frame.cloud, subset, f.config.region.k_neighbors));
}

void BM_CandidatesParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(extract_candidates(f.frame.cloud, f.result.road, f.config.threshold));
}

void BM_CandidatesSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        reference::extract_candidates(f.frame.cloud, f.result.road, f.config.threshold));
}

void BM_LinesParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        fit_lines_sequential(f.frame.cloud, f.result.candidates, f.config.lines));
}

void BM_LinesSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        reference::fit_lines_sequential(f.frame.cloud, f.result.candidates, f.config.lines));
}

void BM_RunFrame(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(run_frame(f.frame.cloud, f.config));
}

void BM_Generate(benchmark::State& state) {
  const auto cfg = profile_config(Profile::test_track, 1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(generate(cfg));
}

BENCHMARK(BM_PlaneParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PlaneSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NormalsKdTree)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NormalsKdTreeSubset)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NormalsBruteForce)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CandidatesParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CandidatesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LinesParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LinesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunFrame)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Generate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
