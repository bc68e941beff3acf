#pragma once

// Mask files are binary PGM (P5, maxval 255) holding one class index per pixel.
// Detection files hold one `class_id,score,x_min,y_min,x_max,y_max` line per box,
// score printed with 4 decimals, LF line endings.

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/core.h>

#include "avsim/geometry.hpp"

namespace avsim {

/// Raised when a frame file exists but cannot be decoded, or a required file is missing.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

inline std::string encode_pgm(const ImageGrid& grid) {
  std::string out = fmt::format("P5\n{} {}\n255\n", grid.width(), grid.height());
  out.append(grid.data().begin(), grid.data().end());
  return out;
}

namespace detail {

// Reads one whitespace-delimited header token, skipping '#' comments.
inline std::string pgm_token(std::string_view bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  return std::string(bytes.substr(start, pos - start));
}

inline int parse_int(std::string_view s, const std::string& context) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw FormatError(context + ": expected integer, got '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

/// Decodes a P5 mask. `class_count` bounds the legal pixel values.
inline ImageGrid decode_pgm(std::string_view bytes, int class_count, const std::string& name = "pgm") {
  std::size_t pos = 0;
  if (detail::pgm_token(bytes, pos) != "P5") throw FormatError(name + ": not a binary PGM (P5)");
  const int w = detail::parse_int(detail::pgm_token(bytes, pos), name);
  const int h = detail::parse_int(detail::pgm_token(bytes, pos), name);
  const int maxval = detail::parse_int(detail::pgm_token(bytes, pos), name);
  if (w <= 0 || h <= 0) throw FormatError(name + ": bad dimensions");
  if (maxval != 255) throw FormatError(name + ": maxval must be 255");
  if (pos >= bytes.size()) throw FormatError(name + ": truncated header");
  ++pos;  // single whitespace byte after maxval
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() - pos != n)
    throw FormatError(fmt::format("{}: expected {} pixel bytes, found {}", name, n, bytes.size() - pos));
  ImageGrid grid(w, h, class_count);
  auto& data = grid.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<std::uint8_t>(bytes[pos + i]);
    if (v >= class_count)
      throw FormatError(fmt::format("{}: pixel value {} exceeds class count {}", name, v, class_count));
    data[i] = v;
  }
  return grid;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void write_pgm(const std::filesystem::path& path, const ImageGrid& grid) {
  write_file(path, encode_pgm(grid));
}

inline ImageGrid read_pgm(const std::filesystem::path& path, int class_count) {
  if (!std::filesystem::exists(path)) throw FormatError("missing file " + path.string());
  return decode_pgm(read_file(path), class_count, path.string());
}

inline std::string encode_detections(const std::vector<BoundingBox>& boxes) {
  std::string out;
  for (const auto& b : boxes)
    out += fmt::format("{},{:.4f},{},{},{},{}\n", static_cast<int>(b.class_id), b.score, b.x_min,
                       b.y_min, b.x_max, b.y_max);
  return out;
}

inline std::vector<BoundingBox> decode_detections(std::string_view text, const std::string& name = "csv") {
  std::vector<BoundingBox> boxes;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    const std::string where = fmt::format("{}:{}", name, line_no);
    if (fields.size() != 6) throw FormatError(where + ": expected 6 fields");
    BoundingBox b;
    try {
      b.class_id = object_class_from_int(detail::parse_int(fields[0], where));
    } catch (const std::out_of_range& e) {
      throw FormatError(where + ": " + e.what());
    }
    auto [ptr, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), b.score);
    if (ec != std::errc{} || ptr != fields[1].data() + fields[1].size())
      throw FormatError(where + ": bad score");
    b.x_min = detail::parse_int(fields[2], where);
    b.y_min = detail::parse_int(fields[3], where);
    b.x_max = detail::parse_int(fields[4], where);
    b.y_max = detail::parse_int(fields[5], where);
    if (!(b.x_min < b.x_max && b.y_min < b.y_max) || !(b.score >= 0.0 && b.score <= 1.0))
      throw FormatError(where + ": invalid box");
    boxes.push_back(b);
  }
  return boxes;
}

}  // namespace avsim
