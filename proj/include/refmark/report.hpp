#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "refmark/lines.hpp"
#include "refmark/metrics.hpp"
#include "refmark/pipeline.hpp"

namespace refmark {

struct ReportRow {
  std::string dataset;
  EvalReport report;
};

// Delimited table with columns dataset,channel,precision,recall,f1,tp,fp,fn.
// Undefined metrics are left empty.
std::string report_csv(const std::vector<ReportRow>& rows);

// {"rows": [{dataset, channel, precision, recall, f1, tp, fp, fn,
//            macro_precision, macro_recall, macro_f1, frames}], ...}.
// Undefined metrics are null. `failures` lists frames that did not complete.
std::string report_json(const std::vector<ReportRow>& rows,
                        const std::vector<FrameSummary>& failures = {});

// Side-by-side reflectivity/intensity table in percent.
std::string channel_table(const std::string& dataset, const ChannelComparison& cmp);

// Per-frame CSV: name, ok, points, lines, predicted, tp, fp, fn, stage timings.
std::string frames_csv(const std::vector<FrameSummary>& frames);

// One line per model: anchor x y z, direction x y z, support count, accepted.
std::string lines_text(const std::vector<LineModel>& lines);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace refmark
