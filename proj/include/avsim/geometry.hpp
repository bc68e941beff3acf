#pragma once

// Shared geometric and image-plane primitives.
//
// Conventions:
//   world frame  right-handed, x forward at theta = 0, y to the left, CCW positive
//   image frame  row 0 at the top, column 0 at the left; pixel (c, r) covers
//                [c, c+1) x [r, r+1) and boxes are half-open in both axes

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace avsim {

inline constexpr int kImageWidth = 512;
inline constexpr int kImageHeight = 320;

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::remainder(a, two_pi);  // [-pi, pi]
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

struct Pose2D {
  double x = 0.0;      // m
  double y = 0.0;      // m
  double theta = 0.0;  // rad, kept in (-pi, pi]

  friend bool operator==(const Pose2D&, const Pose2D&) = default;

  /// Maps a point from this body frame into the parent frame.
  Vec2 transform(Vec2 body) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {x + c * body.x - s * body.y, y + s * body.x + c * body.y};
  }

  /// Maps a parent-frame point into this body frame.
  Vec2 inverse_transform(Vec2 world) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double dx = world.x - x, dy = world.y - y;
    return {c * dx + s * dy, -s * dx + c * dy};
  }
};

/// Body-frame velocity: vx longitudinal, vy transverse (left positive), omega CCW.
struct Twist {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  friend bool operator==(const Twist&, const Twist&) = default;
  friend Twist operator+(Twist a, Twist b) { return {a.vx + b.vx, a.vy + b.vy, a.omega + b.omega}; }
  friend Twist operator*(double s, Twist a) { return {s * a.vx, s * a.vy, s * a.omega}; }

  bool finite() const { return std::isfinite(vx) && std::isfinite(vy) && std::isfinite(omega); }
};

struct TwistLimits {
  double v_max = 0.5;      // m/s, applies to |vx| and |vy|
  double omega_max = 3.0;  // rad/s
};

inline Twist clamp_twist(Twist t, const TwistLimits& lim) {
  return {std::clamp(t.vx, -lim.v_max, lim.v_max), std::clamp(t.vy, -lim.v_max, lim.v_max),
          std::clamp(t.omega, -lim.omega_max, lim.omega_max)};
}

/// Applies a constant body twist for dt seconds using the exact SE(2) exponential.
inline Pose2D pose_integrate(const Pose2D& p, const Twist& t, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("pose_integrate: dt must be positive");
  const double dtheta = t.omega * dt;
  double bx, by;
  if (std::abs(dtheta) < 1e-9) {
    bx = t.vx * dt;
    by = t.vy * dt;
  } else {
    const double s = std::sin(dtheta) / t.omega;
    const double c = (1.0 - std::cos(dtheta)) / t.omega;
    bx = s * t.vx - c * t.vy;
    by = c * t.vx + s * t.vy;
  }
  const Vec2 w = p.transform({bx, by});
  return {w.x, w.y, normalize_angle(p.theta + dtheta)};
}

enum class ObjectClass : std::uint8_t {
  Background = 0,
  Pedestrian = 1,
  AmberLight = 2,
  RedLight = 3,
  GreenLight = 4,
  Obstacle = 5,
};

inline constexpr int kObjectClassCount = 6;
inline constexpr int kDrivableClassCount = 2;  // 0 background, 1 drivable
inline constexpr int kLaneClassCount = 2;      // 0 background, 1 lane marking

inline const char* to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Background: return "Background";
    case ObjectClass::Pedestrian: return "Pedestrian";
    case ObjectClass::AmberLight: return "AmberLight";
    case ObjectClass::RedLight: return "RedLight";
    case ObjectClass::GreenLight: return "GreenLight";
    case ObjectClass::Obstacle: return "Obstacle";
  }
  return "?";
}

inline ObjectClass object_class_from_int(int v) {
  if (v < 0 || v >= kObjectClassCount)
    throw std::out_of_range("object class code out of range: " + std::to_string(v));
  return static_cast<ObjectClass>(v);
}

/// Axis-aligned detection box in pixels, half-open: [x_min, x_max) x [y_min, y_max).
struct BoundingBox {
  ObjectClass class_id = ObjectClass::Background;
  double score = 0.0;
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

  long area() const { return static_cast<long>(x_max - x_min) * (y_max - y_min); }

  bool valid(int width = kImageWidth, int height = kImageHeight) const {
    return x_min < x_max && y_min < y_max && x_min >= 0 && y_min >= 0 && x_max <= width &&
           y_max <= height && score >= 0.0 && score <= 1.0;
  }
};

inline double iou_boxes(const BoundingBox& a, const BoundingBox& b) {
  const long iw = std::max(0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const long ih = std::max(0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const long inter = iw * ih;
  if (inter == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(a.area() + b.area() - inter);
}

/// Score descending, then class, then position. Total over all box fields.
inline bool detection_order(const BoundingBox& a, const BoundingBox& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.class_id != b.class_id) return a.class_id < b.class_id;
  if (a.x_min != b.x_min) return a.x_min < b.x_min;
  if (a.y_min != b.y_min) return a.y_min < b.y_min;
  if (a.x_max != b.x_max) return a.x_max < b.x_max;
  return a.y_max < b.y_max;
}

/// Dense per-pixel class-index grid, row-major.
class ImageGrid {
 public:
  ImageGrid() : ImageGrid(kImageWidth, kImageHeight, 2) {}
  ImageGrid(int width, int height, int class_count, std::uint8_t fill = 0)
      : width_(width), height_(height), class_count_(class_count),
        data_(static_cast<std::size_t>(width) * height, fill) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("ImageGrid: empty dimensions");
    if (class_count < 1 || class_count > 256) throw std::invalid_argument("ImageGrid: bad class count");
    if (fill >= class_count) throw std::invalid_argument("ImageGrid: fill value exceeds class count");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int class_count() const { return class_count_; }
  std::size_t size() const { return data_.size(); }

  std::uint8_t at(int col, int row) const { return data_[index(col, row)]; }
  void set(int col, int row, std::uint8_t v) {
    if (v >= class_count_) throw std::out_of_range("ImageGrid: class value exceeds class count");
    data_[index(col, row)] = v;
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& mutable_data() { return data_; }

  /// True when every stored value is a legal class index.
  bool well_formed() const {
    return std::all_of(data_.begin(), data_.end(), [&](std::uint8_t v) { return v < class_count_; });
  }

  bool same_shape(const ImageGrid& o) const { return width_ == o.width_ && height_ == o.height_; }

  std::size_t count(std::uint8_t v) const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), v));
  }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }

  int width_;
  int height_;
  int class_count_;
  std::vector<std::uint8_t> data_;
};

// Polygon helpers used by the world model and collision checks.

/// Even-odd point-in-polygon test; boundary points may go either way.
inline bool point_in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

/// Separating-axis overlap test for two convex polygons.
inline bool convex_polygons_overlap(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  auto separated_along_edges_of = [](const std::vector<Vec2>& p, const std::vector<Vec2>& q) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Vec2 e = p[(i + 1) % p.size()] - p[i];
      const Vec2 axis{-e.y, e.x};
      double pmin = INFINITY, pmax = -INFINITY, qmin = INFINITY, qmax = -INFINITY;
      for (Vec2 v : p) { pmin = std::min(pmin, dot(v, axis)); pmax = std::max(pmax, dot(v, axis)); }
      for (Vec2 v : q) { qmin = std::min(qmin, dot(v, axis)); qmax = std::max(qmax, dot(v, axis)); }
      if (pmax <= qmin || qmax <= pmin) return true;
    }
    return false;
  };
  return !separated_along_edges_of(a, b) && !separated_along_edges_of(b, a);
}

}  // namespace avsim
