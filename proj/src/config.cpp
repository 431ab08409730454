#include "refmark/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "refmark/error.hpp"

namespace refmark {
namespace {

namespace pt = boost::property_tree;

using Setter = std::function<void(const std::string&)>;
using Schema = std::map<std::string, std::map<std::string, Setter>>;

template <typename T>
T parse_value(const std::string& text) {
  if constexpr (std::is_unsigned_v<T>) {
    if (text.find('-') != std::string::npos)
      throw ConfigError("'" + text + "' must be non-negative");
  }
  T v{};
  std::istringstream in(text);
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("cannot parse '" + text + "'");
  return v;
}

template <>
bool parse_value<bool>(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("cannot parse '" + text + "' as a boolean");
}

template <typename T>
Setter bind(T& field) {
  return [&field](const std::string& text) { field = parse_value<T>(text); };
}

pt::ptree read_ini(std::istream& in, const std::string& source) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.message()));
  }
  return tree;
}

void apply(const pt::ptree& tree, const Schema& schema, const std::string& source) {
  for (const auto& [section, body] : tree) {
    auto s = schema.find(section);
    if (s == schema.end() || body.empty())
      throw ConfigError(fmt::format("{}: unknown section [{}]", source, section));
    for (const auto& [key, value] : body) {
      auto k = s->second.find(key);
      if (k == s->second.end())
        throw ConfigError(fmt::format("{}: unknown key '{}' in [{}]", source, key, section));
      try {
        k->second(value.data());
      } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: [{}] {}: {}", source, section, key, e.what()));
      }
    }
  }
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  return in;
}

}  // namespace

PipelineConfig parse_config(std::istream& in, const std::string& source) {
  PipelineConfig c;
  auto channel = [&c](const std::string& t) { c.threshold.channel = parse_channel(t); };
  auto t0_mode = [&c](const std::string& t) { c.threshold.t0_mode = parse_t0_mode(t); };
  const Schema schema{
      {"prefilter",
       {{"max_ring", bind(c.prefilter.max_ring)},
        {"z_low", bind(c.prefilter.z_low)},
        {"z_high", bind(c.prefilter.z_high)},
        {"z_band_absolute", bind(c.prefilter.z_band_absolute)}}},
      {"ground",
       {{"th_plane", bind(c.plane.th_plane)},
        {"max_iter", bind(c.plane.max_iter)},
        {"seed", bind(c.plane.seed)},
        {"k_neighbors", bind(c.region.k_neighbors)},
        {"th_angle_deg", bind(c.region.th_angle_deg)},
        {"th_curve", bind(c.region.th_curve)},
        {"min_road_cluster", bind(c.region.min_road_cluster)},
        {"bound_to_seed", bind(c.region.bound_to_seed)}}},
      {"threshold",
       {{"n_bins", bind(c.threshold.n_bins)},
        {"channel", channel},
        {"t0_mode", t0_mode},
        {"min_separability", bind(c.threshold.min_separability)}}},
      {"lines",
       {{"th_lines", bind(c.lines.th_lines)},
        {"max_lines", bind(c.lines.max_lines)},
        {"min_support", bind(c.lines.min_support)},
        {"max_iter", bind(c.lines.max_iter)},
        {"seed", bind(c.lines.seed)},
        {"project_to_plane", bind(c.lines.project_to_plane)}}},
      {"batch", {{"workers", bind(c.workers)}}},
  };
  apply(read_ini(in, source), schema, source);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.what()));
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_config(in, path.string());
}

void write_config(const PipelineConfig& c, std::ostream& out) {
  out << fmt::format(
      "[prefilter]\nmax_ring = {}\nz_low = {}\nz_high = {}\nz_band_absolute = {}\n\n",
      c.prefilter.max_ring, c.prefilter.z_low, c.prefilter.z_high,
      c.prefilter.z_band_absolute);
  out << fmt::format(
      "[ground]\nth_plane = {}\nmax_iter = {}\nseed = {}\nk_neighbors = {}\n"
      "th_angle_deg = {}\nth_curve = {}\nmin_road_cluster = {}\nbound_to_seed = {}\n\n",
      c.plane.th_plane, c.plane.max_iter, c.plane.seed, c.region.k_neighbors,
      c.region.th_angle_deg, c.region.th_curve, c.region.min_road_cluster,
      c.region.bound_to_seed);
  out << fmt::format(
      "[threshold]\nn_bins = {}\nchannel = {}\nt0_mode = {}\nmin_separability = {}\n\n",
      c.threshold.n_bins, to_string(c.threshold.channel), to_string(c.threshold.t0_mode),
      c.threshold.min_separability);
  out << fmt::format(
      "[lines]\nth_lines = {}\nmax_lines = {}\nmin_support = {}\nmax_iter = {}\nseed = {}\n"
      "project_to_plane = {}\n\n",
      c.lines.th_lines, c.lines.max_lines, c.lines.min_support, c.lines.max_iter,
      c.lines.seed, c.lines.project_to_plane);
  out << fmt::format("[batch]\nworkers = {}\n", c.workers);
}

void apply_scene_overrides(std::istream& in, SceneConfig& s, const std::string& source) {
  const Schema schema{
      {"scene",
       {{"sensor_height", bind(s.sensor_height)},
        {"lateral_offset", bind(s.lateral_offset)},
        {"yaw_deg", bind(s.yaw_deg)},
        {"n_layers", bind(s.n_layers)},
        {"n_cols", bind(s.n_cols)},
        {"elevation_min_deg", bind(s.elevation_min_deg)},
        {"elevation_max_deg", bind(s.elevation_max_deg)},
        {"max_range", bind(s.max_range)},
        {"road_half_width", bind(s.road_half_width)},
        {"curbs", bind(s.curbs)},
        {"curb_height", bind(s.curb_height)},
        {"clutter_count", bind(s.clutter_count)},
        {"range_noise", bind(s.range_noise)},
        {"dropout", bind(s.dropout)},
        {"intensity_ref_range", bind(s.intensity_ref_range)},
        {"intensity_gain", bind(s.intensity_gain)},
        {"intensity_floor", bind(s.intensity_floor)},
        {"intensity_noise", bind(s.intensity_noise)},
        {"intensity_max", bind(s.intensity_max)}}},
  };
  apply(read_ini(in, source), schema, source);
  s.validate();
}

void apply_scene_overrides(const std::filesystem::path& path, SceneConfig& scene) {
  auto in = open(path);
  apply_scene_overrides(in, scene, path.string());
}

}  // namespace refmark
