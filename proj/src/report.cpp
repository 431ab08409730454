#include "refmark/report.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "refmark/error.hpp"

namespace refmark {
namespace {

std::string opt(const std::optional<double>& v) {
  return v ? fmt::format("{:.6f}", *v) : std::string();
}

std::string pct(const std::optional<double>& v) {
  return v ? fmt::format("{:.2f}", 100.0 * *v) : std::string("n/a");
}

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "dataset,channel,precision,recall,f1,tp,fp,fn\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.dataset, r.report.channel,
                       opt(r.report.precision), opt(r.report.recall), opt(r.report.f1),
                       r.report.counts.tp, r.report.counts.fp, r.report.counts.fn);
  return out;
}

std::string report_json(const std::vector<ReportRow>& rows,
                        const std::vector<FrameSummary>& failures) {
  nlohmann::json doc;
  doc["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    doc["rows"].push_back({
        {"dataset", r.dataset},
        {"channel", r.report.channel},
        {"precision", opt_json(r.report.precision)},
        {"recall", opt_json(r.report.recall)},
        {"f1", opt_json(r.report.f1)},
        {"tp", r.report.counts.tp},
        {"fp", r.report.counts.fp},
        {"fn", r.report.counts.fn},
        {"macro_precision", opt_json(r.report.macro_precision())},
        {"macro_recall", opt_json(r.report.macro_recall())},
        {"macro_f1", opt_json(r.report.macro_f1())},
        {"frames", r.report.frames.size()},
    });
  }
  doc["failures"] = nlohmann::json::array();
  for (const auto& f : failures) doc["failures"].push_back({{"frame", f.name}, {"error", f.error}});
  return doc.dump(2) + "\n";
}

std::string channel_table(const std::string& dataset, const ChannelComparison& cmp) {
  std::string out = fmt::format("{:<16} {:<13} {:>10} {:>10} {:>10}\n", "dataset", "channel",
                                "precision", "recall", "f1");
  for (const auto* b : {&cmp.reflectivity, &cmp.intensity}) {
    const auto& r = b->report;
    out += fmt::format("{:<16} {:<13} {:>10} {:>10} {:>10}\n", dataset, r.channel,
                       pct(r.precision), pct(r.recall), pct(r.f1));
  }
  return out;
}

std::string frames_csv(const std::vector<FrameSummary>& frames) {
  std::string out =
      "frame,ok,points,lines,predicted,tp,fp,fn,prefilter_ms,plane_ms,normals_ms,"
      "region_ms,threshold_ms,lines_ms,total_ms,error\n";
  for (const auto& f : frames) {
    const auto c = f.counts.value_or(Counts{});
    const auto& t = f.timings;
    std::string err = f.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += fmt::format("{},{},{},{},{},{},{},{},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f},{}\n",
                       f.name, f.ok ? 1 : 0, f.points, f.accepted_lines, f.predicted_markings,
                       f.counts ? std::to_string(c.tp) : "", f.counts ? std::to_string(c.fp) : "",
                       f.counts ? std::to_string(c.fn) : "", t.prefilter, t.plane, t.normals,
                       t.region, t.threshold, t.lines, t.total, err);
  }
  return out;
}

std::string lines_text(const std::vector<LineModel>& lines) {
  std::string out;
  for (const auto& l : lines)
    out += fmt::format("{} {} {} {} {} {} {} {}\n", l.anchor.x(), l.anchor.y(), l.anchor.z(),
                       l.direction.x(), l.direction.y(), l.direction.z(), l.support.size(),
                       l.accepted ? 1 : 0);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace refmark
