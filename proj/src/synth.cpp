#include "refmark/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_set>

#include <fmt/format.h>

#include "refmark/error.hpp"
#include "refmark/random.hpp"

namespace refmark {
namespace {

enum class Surface : std::uint8_t { none, road, curb, sidewalk, vehicle, clutter };

struct Hit {
  double t{std::numeric_limits<double>::infinity()};
  Eigen::Vector3d normal{0.0, 0.0, 1.0};
  Surface surface{Surface::none};
  std::int32_t stripe{-1};
};

constexpr double kDegToRad = M_PI / 180.0;

// Ray/box slab test; returns entry distance and face normal when hit in
// front of the origin.
bool intersect_box(const Box& box, const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                   double& t_enter, double& t_exit, Eigen::Vector3d* normal) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  int enter_axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < box.min[a] || o[a] > box.max[a]) return false;
      continue;
    }
    double t0 = (box.min[a] - o[a]) / d[a];
    double t1 = (box.max[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > lo) {
      lo = t0;
      enter_axis = a;
    }
    hi = std::min(hi, t1);
  }
  if (hi < std::max(lo, 0.0)) return false;
  t_enter = lo;
  t_exit = hi;
  if (normal != nullptr) {
    *normal = Eigen::Vector3d::Zero();
    if (enter_axis >= 0) (*normal)[enter_axis] = d[enter_axis] > 0.0 ? -1.0 : 1.0;
  }
  return true;
}

std::int32_t stripe_at(const SceneConfig& cfg, double x, double y) {
  for (std::size_t s = 0; s < cfg.stripes.size(); ++s) {
    const auto& st = cfg.stripes[s];
    if (std::abs(y - st.offset) > 0.5 * st.width) continue;
    if (st.dashed) {
      const double u = (x - st.phase) / st.period;
      if (u - std::floor(u) >= st.duty) continue;
    }
    return static_cast<std::int32_t>(s);
  }
  return -1;
}

Hit cast(const SceneConfig& cfg, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  Hit best;
  auto offer = [&](double t, const Eigen::Vector3d& n, Surface s) {
    if (t > 0.0 && t <= cfg.max_range && t < best.t) {
      best.t = t;
      best.normal = n;
      best.surface = s;
    }
  };
  const double w = cfg.road_half_width;
  if (d.z() < 0.0) {
    const double t = -o.z() / d.z();
    const double y = o.y() + t * d.y();
    if (!cfg.curbs || std::abs(y) <= w) offer(t, Eigen::Vector3d::UnitZ(), Surface::road);
    if (cfg.curbs && o.z() > cfg.curb_height) {
      const double ts = (cfg.curb_height - o.z()) / d.z();
      const double ys = o.y() + ts * d.y();
      if (std::abs(ys) >= w) offer(ts, Eigen::Vector3d::UnitZ(), Surface::sidewalk);
    }
  }
  if (cfg.curbs && std::abs(o.y()) < w) {
    for (double side : {-1.0, 1.0}) {
      if (d.y() * side <= 0.0) continue;
      const double t = (side * w - o.y()) / d.y();
      const double z = o.z() + t * d.z();
      if (z >= 0.0 && z <= cfg.curb_height)
        offer(t, Eigen::Vector3d(0.0, -side, 0.0), Surface::curb);
    }
  }
  for (const auto& box : cfg.vehicles) {
    double t0, t1;
    Eigen::Vector3d n;
    if (intersect_box(box, o, d, t0, t1, &n) && t0 > 0.0) offer(t0, n, Surface::vehicle);
  }
  if (best.surface == Surface::road) {
    const Eigen::Vector3d p = o + best.t * d;
    best.stripe = stripe_at(cfg, p.x(), p.y());
  }
  return best;
}

const Distribution& reflectivity_of(const SceneConfig& cfg, const Hit& h) {
  switch (h.surface) {
    case Surface::road:
      return h.stripe >= 0 ? cfg.stripes[static_cast<std::size_t>(h.stripe)].reflectivity
                           : cfg.asphalt;
    case Surface::curb:
    case Surface::sidewalk: return cfg.sidewalk;
    case Surface::vehicle: return cfg.vehicle;
    default: return cfg.clutter;
  }
}

Label label_of(const Hit& h) {
  if (h.surface == Surface::road) return h.stripe >= 0 ? Label::marking : Label::road;
  return Label::other;
}

}  // namespace

void SceneConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("scene: " + msg); };
  if (n_layers <= 0 || n_cols <= 0 || n_layers > 65535 || n_cols > 65535)
    fail(fmt::format("invalid sensor grid {}x{}", n_layers, n_cols));
  if (!(sensor_height > 0.0)) fail("sensor_height must be > 0");
  if (!(elevation_min_deg < elevation_max_deg) || elevation_min_deg <= -90.0 ||
      elevation_max_deg >= 90.0)
    fail("elevation range must satisfy -90 < min < max < 90");
  if (!(max_range > 0.0)) fail("max_range must be > 0");
  if (!(road_half_width > 0.0)) fail("road_half_width must be > 0");
  if (curbs && !(curb_height > 0.0 && curb_height < sensor_height))
    fail("curb_height must be in (0, sensor_height)");
  if (range_noise < 0.0 || intensity_noise < 0.0) fail("noise sigmas must be >= 0");
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0, 1)");
  if (!(intensity_ref_range > 0.0) || intensity_gain < 0.0 || intensity_floor < 0.0 ||
      !(intensity_max > 0.0))
    fail("invalid intensity model parameters");
  auto check_dist = [&](const Distribution& d, std::string_view what) {
    if (d.sigma < 0.0 || d.mean < 0.0 || d.mean > 255.0)
      fail(fmt::format("{} reflectivity must have mean in [0, 255] and sigma >= 0", what));
  };
  check_dist(asphalt, "asphalt");
  check_dist(sidewalk, "sidewalk");
  check_dist(vehicle, "vehicle");
  check_dist(clutter, "clutter");
  for (const auto& s : stripes) {
    if (!(s.width > 0.0)) fail("stripe width must be > 0");
    if (s.dashed && !(s.period > 0.0 && s.duty > 0.0 && s.duty <= 1.0))
      fail("dashed stripe needs period > 0 and duty in (0, 1]");
    check_dist(s.reflectivity, "stripe");
  }
  for (const auto& b : vehicles)
    if (!(b.min.array() < b.max.array()).all()) fail("vehicle box min must be < max");
  if (clutter_count > 0 && !(clutter_box.min.array() < clutter_box.max.array()).all())
    fail("clutter box min must be < max");
}

SynthFrame generate(const SceneConfig& cfg) {
  cfg.validate();
  const int nl = cfg.n_layers, nc = cfg.n_cols;
  const std::size_t n = static_cast<std::size_t>(nl) * static_cast<std::size_t>(nc);

  const Eigen::Vector3d origin(0.0, cfg.lateral_offset, cfg.sensor_height);
  const double yaw = cfg.yaw_deg * kDegToRad;
  const double cy = std::cos(yaw), sy = std::sin(yaw);

  std::vector<Eigen::Vector3d> dir_sensor(n), dir_world(n);
  std::vector<Hit> hits(n);
  for (int k = 0; k < nl; ++k) {
    const double e =
        (nl == 1 ? cfg.elevation_min_deg
                 : cfg.elevation_min_deg +
                       (cfg.elevation_max_deg - cfg.elevation_min_deg) * k / (nl - 1)) *
        kDegToRad;
    for (int j = 0; j < nc; ++j) {
      const double a = 2.0 * M_PI * j / nc;
      const std::size_t c = static_cast<std::size_t>(k) * nc + j;
      const Eigen::Vector3d ds(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a),
                               std::sin(e));
      dir_sensor[c] = ds;
      dir_world[c] = Eigen::Vector3d(cy * ds.x() - sy * ds.y(), sy * ds.x() + cy * ds.y(),
                                     ds.z());
      hits[c] = cast(cfg, origin, dir_world[c]);
    }
  }

  Rng rng(splitmix64(cfg.seed));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  if (cfg.clutter_count > 0) {
    std::unordered_set<std::size_t> taken;
    const std::size_t max_attempts = 50 * cfg.clutter_count + 1000;
    for (std::size_t attempt = 0;
         attempt < max_attempts && taken.size() < cfg.clutter_count; ++attempt) {
      const auto c = static_cast<std::size_t>(uniform_index(rng, n));
      const double u = uniform(rng);
      if (taken.count(c) != 0) continue;
      double t0, t1;
      if (!intersect_box(cfg.clutter_box, origin, dir_world[c], t0, t1, nullptr)) continue;
      t0 = std::max(t0, 0.0);
      t1 = std::min({t1, hits[c].t, cfg.max_range});
      if (!(t1 > t0)) continue;
      taken.insert(c);
      hits[c].t = t0 + u * (t1 - t0);
      hits[c].surface = Surface::clutter;
      hits[c].stripe = -1;
      hits[c].normal = -dir_world[c];
    }
  }

  std::vector<LidarPoint> pts(n);
  GroundTruth truth;
  truth.labels.assign(n, Label::other);
  truth.stripe_id.assign(n, -1);
  for (std::size_t c = 0; c < n; ++c) {
    auto& p = pts[c];
    p.ring = static_cast<std::uint16_t>(c / nc);
    p.col = static_cast<std::uint16_t>(c % nc);
    const auto& h = hits[c];
    const double drop = uniform(rng);
    const double range_jitter = gauss(rng);
    const double refl_draw = gauss(rng);
    const double int_jitter = gauss(rng);
    const double r = h.t + cfg.range_noise * range_jitter;
    if (h.surface == Surface::none || drop < cfg.dropout || !(r > 0.0)) {
      p.valid = false;
      continue;
    }
    const Eigen::Vector3d xyz = dir_sensor[c] * r;
    p.x = xyz.x();
    p.y = xyz.y();
    p.z = xyz.z();
    p.range = r;
    const auto& dist = reflectivity_of(cfg, h);
    const double refl = std::clamp(std::round(dist.mean + dist.sigma * refl_draw), 0.0, 255.0);
    p.reflectivity = static_cast<std::uint16_t>(refl);
    const double cos_inc = std::abs(h.normal.dot(dir_world[c]));
    const double atten = (cfg.intensity_ref_range / r) * (cfg.intensity_ref_range / r);
    const double intensity = refl * atten * std::max(cos_inc, cfg.intensity_floor) *
                                 cfg.intensity_gain +
                             cfg.intensity_noise * int_jitter;
    p.intensity = static_cast<float>(std::clamp(intensity, 0.0, cfg.intensity_max));
    truth.labels[c] = label_of(h);
    truth.stripe_id[c] = truth.labels[c] == Label::marking ? h.stripe : -1;
  }
  return {PointCloud(std::move(pts), nl, nc, cfg.frame_id), std::move(truth)};
}

Profile parse_profile(std::string_view name) {
  if (name == "test_track") return Profile::test_track;
  if (name == "highway") return Profile::highway;
  throw ConfigError(fmt::format("unknown profile '{}' (test_track|highway)", name));
}

std::string_view to_string(Profile profile) {
  return profile == Profile::test_track ? "test_track" : "highway";
}

SceneConfig profile_config(Profile profile, std::uint64_t seed, std::size_t index) {
  const std::uint64_t frame_seed = derive_seed(seed, {static_cast<std::uint64_t>(index)});
  Rng rng(frame_seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  SceneConfig cfg;
  cfg.seed = derive_seed(frame_seed, {1});
  cfg.frame_id = fmt::format("{}_{:04d}", to_string(profile), index);

  if (profile == Profile::test_track) {
    // Two 3.9 m lanes between solid edge lines, dashed center line, curbs.
    cfg.lateral_offset = -1.95 + uniform(-0.3, 0.3);
    cfg.yaw_deg = uniform(-2.0, 2.0);
    cfg.road_half_width = 5.5;
    cfg.curb_height = 0.15;
    const Distribution paint{180.0, 8.0};
    cfg.stripes = {
        {-3.9, 0.15, false, 9.0, 1.0, 0.0, paint},
        {0.0, 0.15, true, 9.0, 1.0 / 3.0, uniform(0.0, 9.0), paint},
        {3.9, 0.15, false, 9.0, 1.0, 0.0, paint},
    };
    cfg.clutter_count = 400;
    cfg.clutter_box = {{-40.0, 6.0, 0.3}, {40.0, 15.0, 2.5}};
  } else {
    // Three 3.75 m lanes; worn paint, short dashes with long gaps, traffic.
    cfg.lateral_offset = uniform(-0.3, 0.3);
    cfg.yaw_deg = uniform(-1.0, 1.0);
    cfg.road_half_width = 7.5;
    cfg.curb_height = 0.2;
    cfg.asphalt = {40.0, 6.0};
    const Distribution worn{130.0, 18.0};
    cfg.stripes = {
        {-5.625, 0.15, false, 15.0, 1.0, 0.0, worn},
        {-1.875, 0.15, true, 15.0, 0.2, uniform(0.0, 15.0), worn},
        {1.875, 0.15, true, 15.0, 0.2, uniform(0.0, 15.0), worn},
        {5.625, 0.15, false, 15.0, 1.0, 0.0, worn},
    };
    const int n_vehicles = static_cast<int>(uniform_index(rng, 4));
    for (int v = 0; v < n_vehicles; ++v) {
      const double lane = u01(rng) < 0.5 ? -3.75 : 3.75;
      const double x = uniform(-25.0, 25.0);
      cfg.vehicles.push_back({{x - 2.25, lane - 0.9, 0.0}, {x + 2.25, lane + 0.9, 1.5}});
    }
  }
  return cfg;
}

std::vector<SynthFrame> scene_suite(Profile profile, std::size_t n_frames,
                                    std::uint64_t seed) {
  std::vector<SynthFrame> frames(n_frames);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_frames); ++i)
    frames[static_cast<std::size_t>(i)] =
        generate(profile_config(profile, seed, static_cast<std::size_t>(i)));
  return frames;
}

std::vector<std::size_t> stripe_returns(const SynthFrame& frame, std::size_t n_stripes,
                                        int max_ring) {
  std::vector<std::size_t> counts(n_stripes, 0);
  for (std::size_t i = 0; i < frame.truth.stripe_id.size(); ++i) {
    const auto s = frame.truth.stripe_id[i];
    if (s < 0 || static_cast<std::size_t>(s) >= n_stripes) continue;
    if (max_ring > 0 && frame.cloud[i].ring >= max_ring) continue;
    ++counts[static_cast<std::size_t>(s)];
  }
  return counts;
}

}  // namespace refmark
