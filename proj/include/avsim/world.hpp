#pragma once

// Flat mock-up world and the ground-plane camera that renders ground-truth
// masks from it.
//
// Ground geometry (drivable polygons, lane markings) is rendered by casting
// each pixel's ray onto the z = 0 plane. Actors and traffic lights are boxes
// standing on the ground; each is drawn as the screen-aligned rectangle
// bounding its projected box (a billboard), far ones first.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fmt/core.h>

#include "avsim/config.hpp"
#include "avsim/geometry.hpp"
#include "avsim/kinematics.hpp"

namespace avsim {

class HorizonClip : public std::runtime_error {
 public:
  explicit HorizonClip(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Scenario

enum class LaneRole : std::uint8_t { Side, Cross };

struct LaneMarking {
  std::vector<Vec2> points;
  double width = 0.02;  // m
  bool dashed = false;
  double dash_length = 0.05;
  double gap_length = 0.05;
  LaneRole role = LaneRole::Side;
};

/// Axis-aligned world rectangle.
struct Rect {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  Vec2 center() const { return {(x_min + x_max) / 2, (y_min + y_max) / 2}; }
  Rect moved_to(Vec2 c) const {
    const double hx = (x_max - x_min) / 2, hy = (y_max - y_min) / 2;
    return {c.x - hx, c.y - hy, c.x + hx, c.y + hy};
  }
  std::vector<Vec2> corners() const { return {{x_min, y_min}, {x_max, y_min}, {x_max, y_max}, {x_min, y_max}}; }
  bool contains(Vec2 p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
};

struct Actor {
  ObjectClass cls = ObjectClass::Obstacle;
  Rect footprint;  // at t = 0
  double height = 0.1;
  std::vector<Vec2> waypoints;  // footprint centre path, starts at the t = 0 centre
  double speed = 0.0;           // m/s along the waypoints

  /// Footprint centre at time t: constant speed along the waypoint polyline, then parked.
  Vec2 center_at(double t) const {
    if (waypoints.size() < 2 || speed <= 0.0) return footprint.center();
    double remaining = speed * t;
    for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
      const Vec2 a = waypoints[i], b = waypoints[i + 1];
      const double len = norm(b - a);
      if (remaining <= len) return len > 0 ? a + (remaining / len) * (b - a) : a;
      remaining -= len;
    }
    return waypoints.back();
  }

  Rect footprint_at(double t) const { return footprint.moved_to(center_at(t)); }
};

struct LightPhase {
  double start = 0.0;  // s
  ObjectClass state = ObjectClass::GreenLight;
};

struct TrafficLight {
  Vec2 position;
  double size = 0.03;    // footprint side, m
  double height = 0.12;  // m
  std::vector<LightPhase> schedule;  // sorted by start, first at t = 0

  ObjectClass state_at(double t) const {
    ObjectClass s = schedule.empty() ? ObjectClass::GreenLight : schedule.front().state;
    for (const auto& ph : schedule)
      if (ph.start <= t) s = ph.state;
    return s;
  }

  Rect footprint() const { return {position.x - size / 2, position.y - size / 2, position.x + size / 2, position.y + size / 2}; }
};

struct CameraModel {
  double mount_height = 0.12;                        // m
  double pitch = 25.0 * std::numbers::pi / 180.0;    // rad, downward
  double hfov = 90.0 * std::numbers::pi / 180.0;     // rad
  double mount_x = 0.10;                             // m ahead of the vehicle centre
  int width = kImageWidth;
  int height = kImageHeight;

  double fx() const { return (width / 2.0) / std::tan(hfov / 2.0); }
  double fy() const { return fx(); }
  double cx() const { return width / 2.0; }
  double cy() const { return height / 2.0; }

  /// Continuous image row of the horizon; rows whose pixel centre lies above it see no ground.
  double horizon_row() const { return cy() - fy() * std::tan(pitch); }

  void validate() const {
    if (!(pitch > 0.0 && pitch < std::numbers::pi / 2))
      throw std::invalid_argument("CameraModel: pitch must lie in (0, pi/2)");
    if (!(mount_height > 0.0) || !(hfov > 0.0 && hfov < std::numbers::pi) || width <= 0 || height <= 0)
      throw std::invalid_argument("CameraModel: bad intrinsics");
  }

  /// Body-frame ground point seen through continuous image point (u, v), if any.
  std::optional<Vec2> ground_point(double u, double v) const {
    const double a = (u - cx()) / fx();
    const double b = (v - cy()) / fy();
    const double sp = std::sin(pitch), cp = std::cos(pitch);
    const double down = sp + b * cp;  // -z component of the ray
    if (down <= 1e-12) return std::nullopt;
    const double s = mount_height / down;
    return Vec2{mount_x + s * (cp - b * sp), -s * a};
  }

  /// Like ground_point, but raises HorizonClip for rays that never meet the ground.
  Vec2 ground_point_checked(double u, double v) const {
    auto g = ground_point(u, v);
    if (!g) throw HorizonClip(fmt::format("pixel ({}, {}) lies above the horizon (row {:.2f})", u, v, horizon_row()));
    return *g;
  }

  struct CamPoint {
    double forward, right, down;
  };

  CamPoint to_camera(double bx, double by, double z) const {
    const double dx = bx - mount_x, dz = z - mount_height;
    const double sp = std::sin(pitch), cp = std::cos(pitch);
    return {dx * cp - dz * sp, -by, -dx * sp - dz * cp};
  }

  /// Image coordinates of a body-frame 3D point in front of the camera.
  std::optional<Vec2> project(double bx, double by, double z) const {
    const CamPoint c = to_camera(bx, by, z);
    if (c.forward <= 1e-9) return std::nullopt;
    return Vec2{cx() + fx() * c.right / c.forward, cy() + fy() * c.down / c.forward};
  }
};

struct Scenario {
  std::string name = "scenario";
  Rect bounds{-1.0, -1.0, 1.0, 1.0};
  std::vector<std::vector<Vec2>> drivable_polygons;
  std::vector<LaneMarking> lanes;
  std::vector<Actor> actors;
  std::vector<TrafficLight> lights;
  Pose2D vehicle_start;
  double vehicle_length = 0.20;  // m
  double vehicle_width = 0.14;   // m
  double duration = 10.0;        // s
  CameraModel camera;

  void validate() const {
    camera.validate();
    if (!(duration >= 0.0)) throw std::invalid_argument("Scenario: negative duration");
    for (const auto& p : drivable_polygons)
      if (p.size() < 3) throw std::invalid_argument("Scenario: drivable polygon needs at least 3 points");
    for (const auto& l : lanes) {
      if (l.points.size() < 2 || !(l.width > 0.0)) throw std::invalid_argument("Scenario: lane needs 2+ points and positive width");
      if (l.dashed && (!(l.dash_length > 0.0) || !(l.gap_length > 0.0)))
        throw std::invalid_argument("Scenario: dashed lane needs positive dash and gap lengths");
    }
    for (const auto& a : actors)
      if (!(a.footprint.x_max > a.footprint.x_min && a.footprint.y_max > a.footprint.y_min && a.height > 0.0))
        throw std::invalid_argument("Scenario: actor footprint must be non-empty with positive height");
    for (const auto& l : lights)
      if (l.schedule.empty() || l.schedule.front().start > 0.0)
        throw std::invalid_argument("Scenario: light schedule must start at t = 0");
    if (!bounds.contains({vehicle_start.x, vehicle_start.y}))
      throw std::invalid_argument("Scenario: vehicle start outside map bounds");
  }
};

/// Vehicle body rectangle corners in the world frame.
inline std::vector<Vec2> vehicle_footprint(const Pose2D& pose, double length, double width) {
  const double hl = length / 2, hw = width / 2;
  return {pose.transform({hl, hw}), pose.transform({-hl, hw}), pose.transform({-hl, -hw}), pose.transform({hl, -hw})};
}

// ---------------------------------------------------------------------------
// Rendering

struct RenderOutput {
  ImageGrid object_mask{kImageWidth, kImageHeight, kObjectClassCount};
  ImageGrid drivable_mask{kImageWidth, kImageHeight, kDrivableClassCount};
  ImageGrid lane_mask{kImageWidth, kImageHeight, kLaneClassCount};
  std::vector<BoundingBox> detections;  // one per visible actor or light, score 1
};

namespace detail {

struct LaneGeometry {
  const LaneMarking* lane;
  std::vector<double> cumulative;  // arc length at each vertex
  Rect bbox;
};

inline bool on_lane(const LaneGeometry& g, Vec2 p) {
  const LaneMarking& l = *g.lane;
  const double half = l.width / 2;
  if (!g.bbox.contains(p)) return false;
  const std::size_t last = l.points.size() - 2;
  for (std::size_t i = 0; i + 1 < l.points.size(); ++i) {
    const Vec2 a = l.points[i], b = l.points[i + 1];
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 <= 0) continue;
    double t = dot(p - a, ab) / len2;
    if ((t < 0 && i == 0) || (t > 1 && i == last)) continue;  // flat end caps
    t = std::clamp(t, 0.0, 1.0);
    if (norm(p - (a + t * ab)) > half) continue;
    if (!l.dashed) return true;
    const double s = g.cumulative[i] + t * std::sqrt(len2);
    if (std::fmod(s, l.dash_length + l.gap_length) < l.dash_length) return true;
  }
  return false;
}

inline Rect bounding_rect(const std::vector<Vec2>& pts, double pad) {
  Rect r{INFINITY, INFINITY, -INFINITY, -INFINITY};
  for (Vec2 p : pts) {
    r.x_min = std::min(r.x_min, p.x - pad);
    r.y_min = std::min(r.y_min, p.y - pad);
    r.x_max = std::max(r.x_max, p.x + pad);
    r.y_max = std::max(r.y_max, p.y + pad);
  }
  return r;
}

struct Billboard {
  ObjectClass cls;
  int id;
  double depth;  // nearest camera-forward distance of the visible part
  int col_begin, col_end, row_begin, row_end;  // half-open pixel ranges
};

// Image rectangle covering a ground-standing box, clipped to the camera's near plane.
inline std::optional<Billboard> project_box(const CameraModel& cam, const Pose2D& pose, const Rect& footprint,
                                            double height, ObjectClass cls, int id) {
  constexpr double kNear = 1e-3;
  std::vector<CameraModel::CamPoint> verts;
  for (Vec2 c : footprint.corners()) {
    const Vec2 b = pose.inverse_transform(c);
    verts.push_back(cam.to_camera(b.x, b.y, 0.0));
    verts.push_back(cam.to_camera(b.x, b.y, height));
  }
  // Vertex pairs (index into verts) forming the 12 box edges.
  static constexpr int edges[12][2] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {2, 4}, {4, 6}, {6, 0},
                                       {1, 3}, {3, 5}, {5, 7}, {7, 1}};
  std::vector<CameraModel::CamPoint> kept;
  for (const auto& v : verts)
    if (v.forward >= kNear) kept.push_back(v);
  for (const auto& e : edges) {
    const auto& p = verts[e[0]];
    const auto& q = verts[e[1]];
    if ((p.forward >= kNear) != (q.forward >= kNear)) {
      const double s = (kNear - p.forward) / (q.forward - p.forward);
      kept.push_back({kNear, p.right + s * (q.right - p.right), p.down + s * (q.down - p.down)});
    }
  }
  if (kept.empty()) return std::nullopt;
  double umin = INFINITY, umax = -INFINITY, vmin = INFINITY, vmax = -INFINITY, depth = INFINITY;
  for (const auto& v : kept) {
    const double u = cam.cx() + cam.fx() * v.right / v.forward;
    const double w = cam.cy() + cam.fy() * v.down / v.forward;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, w);
    vmax = std::max(vmax, w);
    depth = std::min(depth, v.forward);
  }
  auto first_pixel = [](double lo) { return static_cast<int>(std::ceil(std::clamp(lo, -1e6, 1e6) - 0.5)); };
  Billboard bb{cls, id, depth, first_pixel(umin), first_pixel(umax), first_pixel(vmin), first_pixel(vmax)};
  bb.col_begin = std::max(bb.col_begin, 0);
  bb.row_begin = std::max(bb.row_begin, 0);
  bb.col_end = std::min(bb.col_end, cam.width);
  bb.row_end = std::min(bb.row_end, cam.height);
  if (bb.col_begin >= bb.col_end || bb.row_begin >= bb.row_end) return std::nullopt;
  return bb;
}

}  // namespace detail

/// Renders ground-truth masks for one scenario. The per-pixel ground rays
/// are computed once per camera.
class Renderer {
 public:
  explicit Renderer(CameraModel cam) : cam_(cam) {
    cam_.validate();
    ground_.resize(static_cast<std::size_t>(cam_.width) * cam_.height);
    for (int r = 0; r < cam_.height; ++r)
      for (int c = 0; c < cam_.width; ++c) ground_[index(c, r)] = cam_.ground_point(c + 0.5, r + 0.5);
  }

  const CameraModel& camera() const { return cam_; }

  RenderOutput render(const Scenario& s, const Pose2D& pose, double t) const {
    RenderOutput out;
    out.object_mask = ImageGrid(cam_.width, cam_.height, kObjectClassCount);
    out.drivable_mask = ImageGrid(cam_.width, cam_.height, kDrivableClassCount);
    out.lane_mask = ImageGrid(cam_.width, cam_.height, kLaneClassCount);

    std::vector<Rect> poly_boxes;
    for (const auto& p : s.drivable_polygons) poly_boxes.push_back(detail::bounding_rect(p, 0.0));
    std::vector<detail::LaneGeometry> lanes;
    for (const auto& l : s.lanes) {
      detail::LaneGeometry g{&l, {0.0}, detail::bounding_rect(l.points, l.width / 2)};
      for (std::size_t i = 0; i + 1 < l.points.size(); ++i)
        g.cumulative.push_back(g.cumulative.back() + norm(l.points[i + 1] - l.points[i]));
      lanes.push_back(std::move(g));
    }

    auto& drv = out.drivable_mask.mutable_data();
    auto& lane = out.lane_mask.mutable_data();
    const double c = std::cos(pose.theta), sn = std::sin(pose.theta);
    for (std::size_t i = 0; i < ground_.size(); ++i) {
      if (!ground_[i]) continue;  // above the horizon: background
      const Vec2 b = *ground_[i];
      const Vec2 w{pose.x + c * b.x - sn * b.y, pose.y + sn * b.x + c * b.y};
      for (std::size_t k = 0; k < s.drivable_polygons.size(); ++k) {
        if (poly_boxes[k].contains(w) && point_in_polygon(w, s.drivable_polygons[k])) {
          drv[i] = 1;
          break;
        }
      }
      for (const auto& g : lanes) {
        if (detail::on_lane(g, w)) {
          lane[i] = 1;
          break;
        }
      }
    }

    std::vector<detail::Billboard> boards;
    int id = 0;
    for (const auto& a : s.actors) {
      if (auto bb = detail::project_box(cam_, pose, a.footprint_at(t), a.height, a.cls, id)) boards.push_back(*bb);
      ++id;
    }
    for (const auto& l : s.lights) {
      if (auto bb = detail::project_box(cam_, pose, l.footprint(), l.height, l.state_at(t), id)) boards.push_back(*bb);
      ++id;
    }
    std::sort(boards.begin(), boards.end(), [](const auto& a, const auto& b) {
      return a.depth != b.depth ? a.depth > b.depth : a.id < b.id;
    });

    std::vector<int> owner(ground_.size(), -1);
    auto& obj = out.object_mask.mutable_data();
    for (const auto& bb : boards) {
      for (int r = bb.row_begin; r < bb.row_end; ++r)
        for (int col = bb.col_begin; col < bb.col_end; ++col) {
          obj[index(col, r)] = static_cast<std::uint8_t>(bb.cls);
          owner[index(col, r)] = bb.id;
        }
    }
    // Tight boxes around what each billboard still owns after occlusion.
    for (const auto& bb : boards) {
      int x0 = cam_.width, y0 = cam_.height, x1 = -1, y1 = -1;
      for (int r = bb.row_begin; r < bb.row_end; ++r)
        for (int col = bb.col_begin; col < bb.col_end; ++col)
          if (owner[index(col, r)] == bb.id) {
            x0 = std::min(x0, col);
            x1 = std::max(x1, col);
            y0 = std::min(y0, r);
            y1 = std::max(y1, r);
          }
      if (x1 >= 0) out.detections.push_back({bb.cls, 1.0, x0, y0, x1 + 1, y1 + 1});
    }
    std::sort(out.detections.begin(), out.detections.end(), detection_order);
    return out;
  }

 private:
  std::size_t index(int c, int r) const { return static_cast<std::size_t>(r) * cam_.width + c; }

  CameraModel cam_;
  std::vector<std::optional<Vec2>> ground_;
};

inline RenderOutput render_masks(const Scenario& s, const Pose2D& pose, const CameraModel& cam, double t) {
  return Renderer(cam).render(s, pose, t);
}

// ---------------------------------------------------------------------------
// World state

struct SimClock {
  double t = 0.0;
  double physics_dt = 0.001;
  double control_dt = 0.1;
  double perception_dt = 0.2;

  int control_every() const { return static_cast<int>(std::lround(control_dt / physics_dt)); }
  int perception_every() const { return static_cast<int>(std::lround(perception_dt / physics_dt)); }

  void validate() const {
    auto multiple = [&](double d) {
      const double k = d / physics_dt;
      return k >= 1.0 && std::abs(k - std::round(k)) < 1e-9;
    };
    if (!(physics_dt > 0.0) || !multiple(control_dt) || !multiple(perception_dt))
      throw std::invalid_argument("SimClock: control and perception periods must be integer multiples of the physics step");
  }
};

struct WorldState {
  double t = 0.0;
  Pose2D vehicle;
  std::vector<Vec2> actor_centers;
  std::vector<ObjectClass> light_states;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

inline WorldState initial_state(const Scenario& s) {
  WorldState w;
  w.vehicle = s.vehicle_start;
  for (const auto& a : s.actors) w.actor_centers.push_back(a.center_at(0.0));
  for (const auto& l : s.lights) w.light_states.push_back(l.state_at(0.0));
  return w;
}

/// Advances actors, lights and the vehicle pose by one physics step; the
/// vehicle moves with the body twist of the true wheel speeds.
inline WorldState step_world(const Scenario& s, const WorldState& state, const WheelSpeeds& true_speeds,
                             const ChassisGeometry& chassis, double dt) {
  WorldState next = state;
  next.t = state.t + dt;
  for (std::size_t i = 0; i < s.actors.size(); ++i) next.actor_centers[i] = s.actors[i].center_at(next.t);
  for (std::size_t i = 0; i < s.lights.size(); ++i) next.light_states[i] = s.lights[i].state_at(next.t);
  next.vehicle = pose_integrate(state.vehicle, forward_kinematics(true_speeds, chassis), dt);
  return next;
}

// ---------------------------------------------------------------------------
// Scenario files

namespace detail {

inline std::vector<Vec2> to_points(const std::vector<std::vector<double>>& tuples, const std::string& what) {
  std::vector<Vec2> pts;
  for (const auto& t : tuples) {
    if (t.size() != 2) throw ConfigError(what + ": points are 'x y' pairs separated by ';'");
    pts.push_back({t[0], t[1]});
  }
  return pts;
}

inline Rect to_rect(const std::vector<double>& v, const std::string& what) {
  if (v.size() != 4) throw ConfigError(what + ": expected 'x_min y_min x_max y_max'");
  return {v[0], v[1], v[2], v[3]};
}

inline ObjectClass parse_class_name(const std::string& s, const std::string& what) {
  if (s == "pedestrian") return ObjectClass::Pedestrian;
  if (s == "obstacle") return ObjectClass::Obstacle;
  if (s == "amber") return ObjectClass::AmberLight;
  if (s == "red") return ObjectClass::RedLight;
  if (s == "green") return ObjectClass::GreenLight;
  throw ConfigError(what + ": unknown class '" + s + "'");
}

}  // namespace detail

inline CameraModel parse_camera(const IniSection& sec) {
  sec.require_known({"height", "pitch_deg", "hfov_deg", "mount_x"});
  CameraModel cam;
  cam.mount_height = sec.get_double("height", cam.mount_height);
  cam.pitch = sec.get_double("pitch_deg", 25.0) * std::numbers::pi / 180.0;
  cam.hfov = sec.get_double("hfov_deg", 90.0) * std::numbers::pi / 180.0;
  cam.mount_x = sec.get_double("mount_x", cam.mount_x);
  return cam;
}

inline Scenario parse_scenario(const IniDocument& doc) {
  Scenario s;
  if (const auto* sec = doc.find("scenario")) {
    sec->require_known({"name", "duration"});
    s.name = sec->get_string("name", s.name);
    s.duration = sec->get_double("duration", s.duration);
  }
  if (const auto* sec = doc.find("map")) {
    sec->require_known({"bounds"});
    s.bounds = detail::to_rect(sec->get_numbers("bounds"), "[map] bounds");
  }
  for (const auto* sec : doc.all("drivable")) {
    sec->require_known({"polygon"});
    s.drivable_polygons.push_back(detail::to_points(sec->get_tuples("polygon"), "[drivable] polygon"));
  }
  for (const auto* sec : doc.all("lane")) {
    sec->require_known({"points", "width", "dashed", "dash_length", "gap_length", "role"});
    LaneMarking l;
    l.points = detail::to_points(sec->get_tuples("points"), "[lane] points");
    l.width = sec->get_double("width", l.width);
    l.dashed = sec->get_bool("dashed", false);
    l.dash_length = sec->get_double("dash_length", l.dash_length);
    l.gap_length = sec->get_double("gap_length", l.gap_length);
    const std::string role = sec->get_string("role", "side");
    if (role == "side") l.role = LaneRole::Side;
    else if (role == "cross") l.role = LaneRole::Cross;
    else throw ConfigError("[lane] role must be side or cross");
    s.lanes.push_back(std::move(l));
  }
  for (const auto* sec : doc.all("actor")) {
    sec->require_known({"class", "footprint", "height", "waypoints", "speed"});
    Actor a;
    a.cls = detail::parse_class_name(sec->get_string("class"), "[actor] class");
    if (a.cls != ObjectClass::Pedestrian && a.cls != ObjectClass::Obstacle)
      throw ConfigError("[actor] class must be pedestrian or obstacle (lights go in [light])");
    a.footprint = detail::to_rect(sec->get_numbers("footprint"), "[actor] footprint");
    a.height = sec->get_double("height", a.height);
    if (sec->has("waypoints")) a.waypoints = detail::to_points(sec->get_tuples("waypoints"), "[actor] waypoints");
    a.speed = sec->get_double("speed", 0.0);
    s.actors.push_back(std::move(a));
  }
  for (const auto* sec : doc.all("light")) {
    sec->require_known({"position", "size", "height", "schedule"});
    TrafficLight l;
    const auto pos = sec->get_numbers("position");
    if (pos.size() != 2) throw ConfigError("[light] position: expected 'x y'");
    l.position = {pos[0], pos[1]};
    l.size = sec->get_double("size", l.size);
    l.height = sec->get_double("height", l.height);
    const std::string schedule = sec->get_string("schedule");
    for (auto part : detail::split(schedule, ';')) {
      if (part.empty()) continue;
      const auto tok = detail::split_ws(part);
      if (tok.size() != 2) throw ConfigError("[light] schedule: entries are '<start_s> <green|amber|red>'");
      l.schedule.push_back({detail::to_double(tok[0], "[light] schedule"),
                            detail::parse_class_name(std::string(tok[1]), "[light] schedule")});
    }
    std::stable_sort(l.schedule.begin(), l.schedule.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    s.lights.push_back(std::move(l));
  }
  if (const auto* sec = doc.find("vehicle")) {
    sec->require_known({"start", "length", "width"});
    const auto st = sec->get_numbers("start");
    if (st.size() != 3) throw ConfigError("[vehicle] start: expected 'x y theta_deg'");
    s.vehicle_start = {st[0], st[1], normalize_angle(st[2] * std::numbers::pi / 180.0)};
    s.vehicle_length = sec->get_double("length", s.vehicle_length);
    s.vehicle_width = sec->get_double("width", s.vehicle_width);
  }
  if (const auto* sec = doc.find("camera")) s.camera = parse_camera(*sec);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  Scenario s = parse_scenario(IniDocument::load(path));
  if (s.name == "scenario") s.name = path.stem().string();
  return s;
}

}  // namespace avsim
