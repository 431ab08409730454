#include "refmark/metrics.hpp"

#include <fmt/format.h>

#include "refmark/error.hpp"

namespace refmark {
namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

template <typename F>
std::optional<double> macro(const std::vector<Counts>& frames, F metric) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : frames) {
    if (auto v = metric(c)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

std::optional<double> precision(const Counts& c) { return ratio(c.tp, c.tp + c.fp); }
std::optional<double> recall(const Counts& c) { return ratio(c.tp, c.tp + c.fn); }

std::optional<double> f1_score(const Counts& c) {
  const auto p = precision(c);
  const auto r = recall(c);
  if (!p || !r) return std::nullopt;
  // Both defined and tp == 0 means P = R = 0; report 0 rather than 0/0.
  if (*p + *r == 0.0) return 0.0;
  return 2.0 * *p * *r / (*p + *r);
}

std::optional<double> EvalReport::macro_precision() const { return macro(frames, refmark::precision); }
std::optional<double> EvalReport::macro_recall() const { return macro(frames, refmark::recall); }
std::optional<double> EvalReport::macro_f1() const { return macro(frames, refmark::f1_score); }

EvalReport make_report(const Counts& counts, std::string channel) {
  EvalReport r;
  r.channel = std::move(channel);
  r.counts = counts;
  r.precision = precision(counts);
  r.recall = recall(counts);
  r.f1 = f1_score(counts);
  return r;
}

EvalReport evaluate(std::span<const Label> predicted, std::span<const Label> truth,
                    std::string channel) {
  if (predicted.size() != truth.size())
    throw StructuralError(fmt::format("{} predicted labels vs {} ground-truth labels",
                                      predicted.size(), truth.size()));
  Counts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool pm = predicted[i] == Label::marking;
    const bool tm = truth[i] == Label::marking;
    c.tp += pm && tm;
    c.fp += pm && !tm;
    c.fn += !pm && tm;
  }
  auto r = make_report(c, std::move(channel));
  r.frames.push_back(c);
  return r;
}

EvalReport aggregate(std::span<const EvalReport> reports) {
  if (reports.empty()) throw StructuralError("cannot aggregate zero reports");
  Counts total;
  std::vector<Counts> frames;
  for (const auto& r : reports) {
    total += r.counts;
    frames.insert(frames.end(), r.frames.begin(), r.frames.end());
  }
  auto out = make_report(total, reports.front().channel);
  out.frames = std::move(frames);
  return out;
}

}  // namespace refmark
