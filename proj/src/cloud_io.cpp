#include "refmark/cloud_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "refmark/error.hpp"

namespace refmark {
namespace {

namespace fs = std::filesystem;

constexpr std::array<std::string_view, 8> kRequiredFields = {
    "x", "y", "z", "range", "intensity", "reflectivity", "ring", "col"};
constexpr std::size_t kBinaryRecordSize = 4 * 8 + 4 + 3 * 2 + 1;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

struct Header {
  std::vector<std::string> fields;
  std::size_t count{0};
  int layers{0};
  int cols{0};
  std::string frame_id;
  Layout layout{Layout::text};
  std::size_t payload_offset{0};
};

Header parse_header(const std::string& bytes, const fs::path& path) {
  Header h;
  bool seen_fields = false, seen_count = false, seen_layers = false,
       seen_cols = false;
  std::size_t pos = 0;
  while (true) {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos)
      throw CorruptionError(
          fmt::format("'{}': header ends before DATA line", path.string()), pos);
    const std::string_view line(bytes.data() + pos, nl - pos);
    const std::size_t line_offset = pos;
    pos = nl + 1;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const auto key = tok[0];
    auto need_one = [&](std::string_view what) {
      if (tok.size() != 2)
        throw CorruptionError(
            fmt::format("'{}': malformed {} line", path.string(), what), line_offset);
    };
    auto need_int = [&](std::string_view what, auto& dst) {
      need_one(what);
      if (!parse_number(tok[1], dst))
        throw CorruptionError(
            fmt::format("'{}': bad {} value '{}'", path.string(), what, tok[1]),
            line_offset);
    };
    if (key == "FIELDS") {
      for (std::size_t k = 1; k < tok.size(); ++k) h.fields.emplace_back(tok[k]);
      seen_fields = true;
    } else if (key == "COUNT") {
      need_int("COUNT", h.count);
      seen_count = true;
    } else if (key == "LAYERS") {
      need_int("LAYERS", h.layers);
      seen_layers = true;
    } else if (key == "COLS") {
      need_int("COLS", h.cols);
      seen_cols = true;
    } else if (key == "FRAME") {
      need_one("FRAME");
      h.frame_id = std::string(tok[1]);
    } else if (key == "DATA") {
      need_one("DATA");
      if (tok[1] == "text") {
        h.layout = Layout::text;
      } else if (tok[1] == "binary") {
        h.layout = Layout::binary;
      } else {
        throw SchemaError(fmt::format("'{}': unknown DATA layout '{}'",
                                      path.string(), tok[1]),
                          "DATA");
      }
      h.payload_offset = pos;
      break;
    } else {
      throw SchemaError(
          fmt::format("'{}': unknown header key '{}'", path.string(), key),
          std::string(key));
    }
  }
  if (!seen_fields) throw SchemaError(fmt::format("'{}': missing FIELDS", path.string()), "FIELDS");
  if (!seen_count) throw SchemaError(fmt::format("'{}': missing COUNT", path.string()), "COUNT");
  if (!seen_layers) throw SchemaError(fmt::format("'{}': missing LAYERS", path.string()), "LAYERS");
  if (!seen_cols) throw SchemaError(fmt::format("'{}': missing COLS", path.string()), "COLS");
  for (auto required : kRequiredFields) {
    if (std::find(h.fields.begin(), h.fields.end(), required) == h.fields.end())
      throw SchemaError(fmt::format("'{}': missing required field '{}'",
                                    path.string(), required),
                        std::string(required));
  }
  return h;
}

void check_grid(const LidarPoint& p, const Header& h, const fs::path& path,
                std::size_t offset) {
  if (p.ring >= h.layers)
    throw CorruptionError(fmt::format("'{}': ring {} >= LAYERS {}", path.string(),
                                      p.ring, h.layers),
                          offset);
  if (p.col >= h.cols)
    throw CorruptionError(
        fmt::format("'{}': col {} >= COLS {}", path.string(), p.col, h.cols), offset);
}

template <typename T>
T load_le(const char* src) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  U u = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b)
    u |= static_cast<U>(static_cast<unsigned char>(src[b])) << (8 * b);
  return std::bit_cast<T>(u);
}

template <typename T>
void store_le(std::string& dst, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  const U u = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(T); ++b)
    dst.push_back(static_cast<char>((u >> (8 * b)) & 0xffu));
}

std::vector<LidarPoint> read_binary(const std::string& bytes, const Header& h,
                                    const fs::path& path) {
  static const std::vector<std::string> kBinaryFields = {
      "x", "y", "z", "range", "intensity", "reflectivity", "ring", "col", "valid"};
  if (h.fields != kBinaryFields)
    throw SchemaError(
        fmt::format("'{}': binary layout requires FIELDS x y z range intensity "
                    "reflectivity ring col valid",
                    path.string()),
        "valid");
  const std::size_t need = h.count * kBinaryRecordSize;
  const std::size_t have = bytes.size() - h.payload_offset;
  if (have < need) {
    const std::size_t whole = have / kBinaryRecordSize;
    throw CorruptionError(
        fmt::format("'{}': truncated payload, {} of {} records complete",
                    path.string(), whole, h.count),
        h.payload_offset + whole * kBinaryRecordSize);
  }
  if (have > need)
    throw CorruptionError(
        fmt::format("'{}': {} trailing bytes after payload", path.string(), have - need),
        h.payload_offset + need);

  std::vector<LidarPoint> pts(h.count);
  const char* src = bytes.data() + h.payload_offset;
  for (std::size_t i = 0; i < h.count; ++i, src += kBinaryRecordSize) {
    auto& p = pts[i];
    p.x = load_le<double>(src);
    p.y = load_le<double>(src + 8);
    p.z = load_le<double>(src + 16);
    p.range = load_le<double>(src + 24);
    p.intensity = load_le<float>(src + 32);
    p.reflectivity = load_le<std::uint16_t>(src + 36);
    p.ring = load_le<std::uint16_t>(src + 38);
    p.col = load_le<std::uint16_t>(src + 40);
    const auto v = static_cast<unsigned char>(src[42]);
    if (v > 1)
      throw CorruptionError(fmt::format("'{}': validity byte {} in record {}",
                                        path.string(), v, i),
                            h.payload_offset + i * kBinaryRecordSize + 42);
    p.valid = v == 1;
    check_grid(p, h, path, h.payload_offset + i * kBinaryRecordSize);
  }
  return pts;
}

std::vector<LidarPoint> read_text(const std::string& bytes, const Header& h,
                                  const fs::path& path) {
  std::map<std::string, std::size_t> col_of;
  for (std::size_t k = 0; k < h.fields.size(); ++k) col_of[h.fields[k]] = k;
  const auto at = [&](std::string_view name) { return col_of.at(std::string(name)); };
  const std::size_t cx = at("x"), cy = at("y"), cz = at("z"), cr = at("range"),
                    ci = at("intensity"), cR = at("reflectivity"),
                    cring = at("ring"), ccol = at("col");
  const auto valid_it = col_of.find("valid");

  std::vector<LidarPoint> pts;
  pts.reserve(h.count);
  std::size_t pos = h.payload_offset;
  while (pos < bytes.size()) {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) nl = bytes.size();
    const std::string_view line(bytes.data() + pos, nl - pos);
    const std::size_t offset = pos;
    pos = nl + 1;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (pts.size() == h.count)
      throw CorruptionError(
          fmt::format("'{}': more rows than COUNT {}", path.string(), h.count), offset);
    if (tok.size() != h.fields.size())
      throw CorruptionError(fmt::format("'{}': row {} has {} columns, expected {}",
                                        path.string(), pts.size(), tok.size(),
                                        h.fields.size()),
                            offset);
    LidarPoint p;
    bool ok = parse_number(tok[cx], p.x) && parse_number(tok[cy], p.y) &&
              parse_number(tok[cz], p.z) && parse_number(tok[cr], p.range) &&
              parse_number(tok[ci], p.intensity) &&
              parse_number(tok[cR], p.reflectivity) &&
              parse_number(tok[cring], p.ring) && parse_number(tok[ccol], p.col);
    if (ok && valid_it != col_of.end()) {
      int v = 0;
      ok = parse_number(tok[valid_it->second], v) && (v == 0 || v == 1);
      p.valid = v == 1;
    }
    if (!ok)
      throw CorruptionError(
          fmt::format("'{}': unparsable value in row {}", path.string(), pts.size()),
          offset);
    check_grid(p, h, path, offset);
    pts.push_back(p);
  }
  if (pts.size() != h.count)
    throw CorruptionError(fmt::format("'{}': truncated payload, {} of {} rows",
                                      path.string(), pts.size(), h.count),
                          bytes.size());
  return pts;
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::road: return "road";
    case Label::marking: return "marking";
    case Label::other: return "other";
  }
  return "other";
}

Label parse_label(std::string_view token) {
  if (token == "road") return Label::road;
  if (token == "marking") return Label::marking;
  if (token == "other") return Label::other;
  throw SchemaError(fmt::format("unknown label token '{}'", token), std::string(token));
}

Layout parse_layout(std::string_view name) {
  if (name == "text") return Layout::text;
  if (name == "binary") return Layout::binary;
  throw ConfigError(fmt::format("unknown layout '{}' (text|binary)", name));
}

PointCloud read_cloud(const fs::path& path) {
  const std::string bytes = slurp(path);
  const Header h = parse_header(bytes, path);
  auto pts = h.layout == Layout::binary ? read_binary(bytes, h, path)
                                        : read_text(bytes, h, path);
  try {
    return PointCloud(std::move(pts), h.layers, h.cols, h.frame_id);
  } catch (const StructuralError& e) {
    throw CorruptionError(fmt::format("'{}': {}", path.string(), e.what()),
                          h.payload_offset);
  }
}

void write_cloud(const PointCloud& cloud, const fs::path& path, Layout layout) {
  std::string out;
  const bool text = layout == Layout::text;
  const std::size_t count = text ? cloud.valid_count() : cloud.size();
  out += text ? "FIELDS x y z range intensity reflectivity ring col\n"
              : "FIELDS x y z range intensity reflectivity ring col valid\n";
  out += fmt::format("COUNT {}\nLAYERS {}\nCOLS {}\n", count, cloud.n_layers(),
                     cloud.n_cols());
  if (!cloud.frame_id().empty()) {
    if (cloud.frame_id().find_first_of(" \t\r\n") != std::string::npos)
      throw StructuralError("frame id must not contain whitespace");
    out += fmt::format("FRAME {}\n", cloud.frame_id());
  }
  out += text ? "DATA text\n" : "DATA binary\n";

  if (text) {
    auto it = std::back_inserter(out);
    for (const auto& p : cloud.points()) {
      if (!p.valid) continue;
      fmt::format_to(it, "{} {} {} {} {} {} {} {}\n", p.x, p.y, p.z, p.range,
                     p.intensity, p.reflectivity, p.ring, p.col);
    }
  } else {
    out.reserve(out.size() + count * kBinaryRecordSize);
    for (const auto& p : cloud.points()) {
      store_le(out, p.x);
      store_le(out, p.y);
      store_le(out, p.z);
      store_le(out, p.range);
      store_le(out, p.intensity);
      store_le(out, p.reflectivity);
      store_le(out, p.ring);
      store_le(out, p.col);
      store_le(out, static_cast<std::uint8_t>(p.valid ? 1 : 0));
    }
  }
  spill(path, out);
}

std::vector<Label> read_labels(const fs::path& path,
                               std::optional<std::size_t> expected_count) {
  const std::string bytes = slurp(path);
  std::vector<Label> labels;
  std::istringstream in(bytes);
  std::string line;
  while (std::getline(in, line)) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 1)
      throw SchemaError(fmt::format("'{}': line {} holds more than one token",
                                    path.string(), labels.size() + 1),
                        std::string(tok[1]));
    labels.push_back(parse_label(tok[0]));
  }
  if (expected_count && labels.size() != *expected_count)
    throw StructuralError(fmt::format("'{}': {} labels for a {}-point cloud",
                                      path.string(), labels.size(), *expected_count));
  return labels;
}

void write_labels(std::span<const Label> labels, const fs::path& path) {
  std::string out;
  out.reserve(labels.size() * 6);
  for (auto l : labels) {
    out += to_string(l);
    out += '\n';
  }
  spill(path, out);
}

}  // namespace refmark
