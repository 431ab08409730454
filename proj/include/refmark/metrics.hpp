#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refmark/labels.hpp"

namespace refmark {

struct Counts {
  std::uint64_t tp{0};
  std::uint64_t fp{0};
  std::uint64_t fn{0};

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

// Undefined ratios (0/0) are absent. F1 is absent when either input is.
std::optional<double> precision(const Counts& c);
std::optional<double> recall(const Counts& c);
std::optional<double> f1_score(const Counts& c);

struct EvalReport {
  std::string channel;
  Counts counts;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::vector<Counts> frames;  // per-frame breakdown

  // Mean of per-frame metrics over frames where they are defined.
  std::optional<double> macro_precision() const;
  std::optional<double> macro_recall() const;
  std::optional<double> macro_f1() const;
};

EvalReport make_report(const Counts& counts, std::string channel = {});

// Point-level scoring: tp = predicted marking & truth marking; fp = predicted
// marking & truth not marking; fn = predicted not marking & truth marking.
EvalReport evaluate(std::span<const Label> predicted, std::span<const Label> truth,
                    std::string channel = {});

// Micro-average: counts are summed, metrics recomputed.
EvalReport aggregate(std::span<const EvalReport> reports);

}  // namespace refmark
