#pragma once

// Reactive driving logic run once per perception frame.
//
// Priority, highest first:
//   1. pedestrian in the ROI                      -> StopPedestrian
//   2. red or amber light in the ROI (optional)   -> StopRedLight
//   3. obstacle in the ROI, or overtake under way -> Overtake (Shift, Pass, Return)
//   4. continuous cross-line reaching the ROI     -> StopLine
//   5. sideline in the left half of the ROI       -> FollowLane with steering
//   6. otherwise, drivable-area imbalance         -> Turn toward the open side
//   7. otherwise, any sideline                    -> FollowLane with steering
//   8. fallback                                   -> FollowLane straight at cruise

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "avsim/geometry.hpp"
#include "avsim/perception.hpp"

namespace avsim {

/// Half-open pixel rectangle [col_begin, col_end) x [row_begin, row_end).
struct RoiSpec {
  int col_begin = kImageWidth / 4;
  int col_end = 3 * kImageWidth / 4;
  int row_begin = 7 * kImageHeight / 10;
  int row_end = kImageHeight;

  static RoiSpec for_image(int width, int height) {
    return {width / 4, 3 * width / 4, (7 * height) / 10, height};
  }

  int width() const { return col_end - col_begin; }
  int height() const { return row_end - row_begin; }
  int center_row() const { return (row_begin + row_end) / 2; }
  int mid_col() const { return (col_begin + col_end) / 2; }

  void validate(int image_width, int image_height) const {
    if (col_begin < 0 || row_begin < 0 || col_end > image_width || row_end > image_height ||
        col_begin >= col_end || row_begin >= row_end)
      throw std::invalid_argument("RoiSpec: rectangle must be non-empty and inside the image");
  }
};

/// Small set of object classes, stored as a bitmask.
class ClassSet {
 public:
  void insert(ObjectClass c) { bits_ |= bit(c); }
  bool contains(ObjectClass c) const { return (bits_ & bit(c)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::uint8_t bits() const { return bits_; }

  std::vector<ObjectClass> members() const {
    std::vector<ObjectClass> out;
    for (int i = 0; i < kObjectClassCount; ++i)
      if (bits_ & (1U << i)) out.push_back(static_cast<ObjectClass>(i));
    return out;
  }

  /// e.g. "Pedestrian|Obstacle"; empty string for no classes.
  std::string to_string() const {
    std::string s;
    for (auto c : members()) {
      if (!s.empty()) s += '|';
      s += avsim::to_string(c);
    }
    return s;
  }

  friend bool operator==(const ClassSet&, const ClassSet&) = default;

 private:
  static std::uint8_t bit(ObjectClass c) { return static_cast<std::uint8_t>(1U << static_cast<int>(c)); }
  std::uint8_t bits_ = 0;
};

struct DecisionConfig {
  bool enabled = true;  // false: cruise straight, ignore perception
  double cruise_speed = 0.2;  // m/s
  RoiSpec roi;
  double line_angle_threshold_deg = 30.0;
  int dash_gap_px = 8;
  int crossline_min_span_px = 128;  // narrower horizontal groups are ignored
  int min_component_pixels = 30;    // lane components smaller than this are noise
  double min_elongation = 2.0;      // principal axis std-dev ratio; rounder blobs have no direction
  int target_column = 3 * kImageWidth / 8;
  double k_lateral = 0.01;  // rad/s per pixel
  double k_heading = 0.5;   // rad/s per rad
  double overtake_offset = 0.25;          // m
  double overtake_lateral_speed = 0.1;    // m/s
  double overtake_pass_distance = 0.45;   // m
  int overtake_clear_frames = 3;
  int min_roi_pixels = 50;
  bool light_rule_enabled = true;
  double turn_ratio = 1.5;
  double turn_speed = 0.15;  // m/s
  double turn_rate = 0.5;    // rad/s
  double perception_dt = 0.2;  // s

  void validate() const {
    roi.validate(kImageWidth, kImageHeight);
    if (!(cruise_speed > 0.0) || !(line_angle_threshold_deg > 0.0) || dash_gap_px <= 0 ||
        !(overtake_offset > 0.0) || !(overtake_lateral_speed > 0.0) || min_roi_pixels <= 0 ||
        !(turn_ratio > 1.0) || !(min_elongation >= 1.0) || !(perception_dt > 0.0) || !(turn_rate > 0.0) || !(turn_speed > 0.0))
      throw std::invalid_argument("DecisionConfig: parameters must be positive");
  }
};

enum class DriveMode : std::uint8_t { FollowLane, StopPedestrian, StopLine, StopRedLight, Overtake, Turn };
enum class OvertakePhase : std::uint8_t { None, Shift, Pass, Return };
enum class TurnDirection : std::uint8_t { Left, Right };

/// Overtake progress carried from frame to frame; survives stop overrides.
struct OvertakeState {
  OvertakePhase phase = OvertakePhase::None;
  double shifted = 0.0;    // m commanded sideways in the current Shift/Return
  double travelled = 0.0;  // m commanded forward during Pass
  int clear_frames = 0;

  bool active() const { return phase != OvertakePhase::None; }
  friend bool operator==(const OvertakeState&, const OvertakeState&) = default;
};

struct DriveDecision {
  DriveMode mode = DriveMode::FollowLane;
  TurnDirection turn = TurnDirection::Left;  // meaningful for Turn only
  Twist command;
  OvertakeState overtake;
  ClassSet triggers;  // classes present in the ROI this frame

  bool is_stop() const {
    return mode == DriveMode::StopPedestrian || mode == DriveMode::StopLine || mode == DriveMode::StopRedLight;
  }

  friend bool operator==(const DriveDecision&, const DriveDecision&) = default;
};

inline std::string mode_name(const DriveDecision& d) {
  switch (d.mode) {
    case DriveMode::FollowLane: return "FollowLane";
    case DriveMode::StopPedestrian: return "StopPedestrian";
    case DriveMode::StopLine: return "StopLine";
    case DriveMode::StopRedLight: return "StopRedLight";
    case DriveMode::Turn: return d.turn == TurnDirection::Left ? "Turn:Left" : "Turn:Right";
    case DriveMode::Overtake:
      switch (d.overtake.phase) {
        case OvertakePhase::Shift: return "Overtake:Shift";
        case OvertakePhase::Pass: return "Overtake:Pass";
        case OvertakePhase::Return: return "Overtake:Return";
        case OvertakePhase::None: break;
      }
      return "Overtake";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// ROI object check

inline ClassSet roi_objects(const PerceptionFrame& frame, const RoiSpec& roi, int min_pixels) {
  std::array<int, kObjectClassCount> counts{};
  const auto& m = frame.object_mask;
  for (int r = roi.row_begin; r < roi.row_end; ++r)
    for (int c = roi.col_begin; c < roi.col_end; ++c) ++counts[m.at(c, r)];
  ClassSet out;
  for (int k = 1; k < kObjectClassCount; ++k)
    if (counts[k] >= min_pixels) out.insert(static_cast<ObjectClass>(k));
  for (const auto& b : frame.detections) {
    if (b.class_id == ObjectClass::Background) continue;
    const long w = std::max(0, std::min(b.x_max, roi.col_end) - std::max(b.x_min, roi.col_begin));
    const long h = std::max(0, std::min(b.y_max, roi.row_end) - std::max(b.y_min, roi.row_begin));
    if (w * h >= min_pixels) out.insert(b.class_id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lane analysis

struct Sideline {
  double lateral_offset = 0.0;  // px, axis column at the ROI centre row minus target column
  double heading = 0.0;         // rad from image vertical, positive when the far end leans right
};

struct Crossline {
  int row = 0;  // lowest (nearest) row touched by the line
  bool continuous = false;
};

struct LaneObservation {
  std::optional<Sideline> sideline;
  std::optional<Crossline> crossline;
  bool sideline_in_left_roi = false;
};

/// Connected region of set pixels with its second-order moments.
struct Component {
  std::vector<int> pixels;  // linear indices
  double mean_col = 0.0;
  double mean_row = 0.0;
  double mu20 = 0.0;  // column variance
  double mu02 = 0.0;  // row variance
  double mu11 = 0.0;
  int row_min = 0;
  int row_max = 0;

  /// Principal axis angle to the image x axis, in (-pi/2, pi/2].
  double axis_angle() const {
    double a = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
    if (a <= -std::numbers::pi / 2) a += std::numbers::pi;
    return a;
  }

  /// Ratio of the major to the minor principal standard deviation.
  double elongation() const {
    const double mean = 0.5 * (mu20 + mu02);
    const double r = std::sqrt(0.25 * (mu20 - mu02) * (mu20 - mu02) + mu11 * mu11);
    const double minor = mean - r;
    return minor <= 1e-12 ? INFINITY : std::sqrt((mean + r) / minor);
  }
};

/// 8-connected components of pixels with value `label`.
inline std::vector<Component> connected_components(const ImageGrid& g, std::uint8_t label = 1) {
  const int w = g.width(), h = g.height();
  const auto& d = g.data();
  std::vector<std::uint8_t> seen(d.size(), 0);
  std::vector<Component> comps;
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(d.size()); ++start) {
    if (d[start] != label || seen[start]) continue;
    Component comp;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      comp.pixels.push_back(p);
      const int pr = p / w, pc = p % w;
      for (int dr = -1; dr <= 1; ++dr) {
        const int r = pr + dr;
        if (r < 0 || r >= h) continue;
        for (int dc = -1; dc <= 1; ++dc) {
          const int c = pc + dc;
          if (c < 0 || c >= w) continue;
          const int q = r * w + c;
          if (d[q] == label && !seen[q]) {
            seen[q] = 1;
            stack.push_back(q);
          }
        }
      }
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    double sc = 0, sr = 0;
    comp.row_min = h;
    comp.row_max = -1;
    for (int p : comp.pixels) {
      sc += p % w;
      sr += p / w;
      comp.row_min = std::min(comp.row_min, p / w);
      comp.row_max = std::max(comp.row_max, p / w);
    }
    const double n = static_cast<double>(comp.pixels.size());
    comp.mean_col = sc / n;
    comp.mean_row = sr / n;
    for (int p : comp.pixels) {
      const double dc = p % w - comp.mean_col, dr = p / w - comp.mean_row;
      comp.mu20 += dc * dc;
      comp.mu02 += dr * dr;
      comp.mu11 += dc * dr;
    }
    comp.mu20 /= n;
    comp.mu02 /= n;
    comp.mu11 /= n;
    comps.push_back(std::move(comp));
  }
  return comps;
}

inline LaneObservation analyze_lanes(const ImageGrid& lane_mask, const ImageGrid& /*drivable_mask*/,
                                     const DecisionConfig& cfg) {
  const int w = lane_mask.width();
  const RoiSpec& roi = cfg.roi;
  const double threshold = cfg.line_angle_threshold_deg * std::numbers::pi / 180.0;
  const int left_end = roi.mid_col();

  LaneObservation obs;
  std::vector<const Component*> cross;
  double best_distance = INFINITY;
  int left_roi_pixels = 0;

  const auto comps = connected_components(lane_mask, 1);
  for (const auto& comp : comps) {
    if (static_cast<int>(comp.pixels.size()) < cfg.min_component_pixels) continue;
    if (comp.elongation() < cfg.min_elongation) continue;
    const double angle = comp.axis_angle();
    if (std::abs(angle) < threshold) {
      cross.push_back(&comp);
      continue;
    }
    // Direction along the axis pointing up the image.
    double dx = std::cos(angle), dy = std::sin(angle);
    if (dy > 0) { dx = -dx; dy = -dy; }
    const double heading = std::atan2(dx, -dy);
    const double col_at_ref = comp.mean_col + (roi.center_row() - comp.mean_row) * (dx / dy);
    const double offset = col_at_ref - cfg.target_column;
    if (std::abs(offset) < best_distance) {
      best_distance = std::abs(offset);
      obs.sideline = Sideline{offset, heading};
    }
    for (int p : comp.pixels) {
      const int r = p / w, c = p % w;
      if (r >= roi.row_begin && r < roi.row_end && c >= roi.col_begin && c < left_end) ++left_roi_pixels;
    }
  }
  obs.sideline_in_left_roi = left_roi_pixels >= cfg.min_roi_pixels;

  // Group horizontal components whose row ranges overlap; a dashed line falls
  // apart into several components that share rows.
  std::sort(cross.begin(), cross.end(), [](const Component* a, const Component* b) { return a->row_min < b->row_min; });
  std::vector<std::vector<const Component*>> groups;
  int group_row_max = -1;
  for (const Component* c : cross) {
    if (groups.empty() || c->row_min > group_row_max) {
      groups.push_back({c});
      group_row_max = c->row_max;
    } else {
      groups.back().push_back(c);
      group_row_max = std::max(group_row_max, c->row_max);
    }
  }
  const int mid = roi.mid_col();
  for (const auto& group : groups) {
    // Lowest pixel per column; the line's row is taken where it crosses the
    // vehicle's path (the occupied column nearest the ROI mid column), so the
    // far side of a bend that dips into the ROI at the image edge is not a stop.
    std::vector<int> lowest(w, -1);
    for (const Component* c : group)
      for (int p : c->pixels) lowest[p % w] = std::max(lowest[p % w], p / w);
    const int first = static_cast<int>(std::find_if(lowest.begin(), lowest.end(), [](int r) { return r >= 0; }) - lowest.begin());
    const int last = w - 1 - static_cast<int>(std::find_if(lowest.rbegin(), lowest.rend(), [](int r) { return r >= 0; }) - lowest.rbegin());
    if (last - first + 1 < cfg.crossline_min_span_px || first > mid || last < mid) continue;
    int largest_gap = 0, run = 0;
    for (int c = first; c <= last; ++c) {
      run = lowest[c] >= 0 ? 0 : run + 1;
      largest_gap = std::max(largest_gap, run);
    }
    int row = -1;
    for (int d = 0; row < 0; ++d) row = std::max(mid - d >= 0 ? lowest[mid - d] : -1, mid + d < w ? lowest[mid + d] : -1);
    if (!obs.crossline || row > obs.crossline->row) obs.crossline = Crossline{row, largest_gap < cfg.dash_gap_px};
  }
  return obs;
}

/// Compares drivable mass in the left and right thirds of the lower image half.
inline std::optional<TurnDirection> detect_turn(const ImageGrid& drivable_mask, const DecisionConfig& cfg) {
  const int w = drivable_mask.width(), h = drivable_mask.height();
  long left = 0, right = 0;
  for (int r = h / 2; r < h; ++r) {
    for (int c = 0; c < w / 3; ++c) left += drivable_mask.at(c, r) == 1;
    for (int c = w - w / 3; c < w; ++c) right += drivable_mask.at(c, r) == 1;
  }
  if (std::max(left, right) < cfg.min_roi_pixels) return std::nullopt;
  if (left > cfg.turn_ratio * right) return TurnDirection::Left;
  if (right > cfg.turn_ratio * left) return TurnDirection::Right;
  return std::nullopt;
}

inline double steering_rate(const Sideline& s, const DecisionConfig& cfg) {
  return -(cfg.k_lateral * s.lateral_offset + cfg.k_heading * s.heading);
}

// ---------------------------------------------------------------------------
// Decision

namespace detail {

inline DriveDecision overtake_step(OvertakeState st, bool obstacle_in_roi, const DecisionConfig& cfg) {
  DriveDecision d;
  d.mode = DriveMode::Overtake;
  const double dt = cfg.perception_dt;
  if (!st.active()) st = {OvertakePhase::Shift, 0.0, 0.0, 0};

  if (st.phase == OvertakePhase::Shift && st.shifted >= cfg.overtake_offset - 1e-12) {
    st = {OvertakePhase::Pass, 0.0, 0.0, 0};
  }
  if (st.phase == OvertakePhase::Pass) {
    st.clear_frames = obstacle_in_roi ? 0 : st.clear_frames + 1;
    if (st.travelled >= cfg.overtake_pass_distance - 1e-12 && st.clear_frames >= cfg.overtake_clear_frames)
      st = {OvertakePhase::Return, 0.0, 0.0, 0};
  }
  if (st.phase == OvertakePhase::Return && st.shifted >= cfg.overtake_offset - 1e-12) {
    d.mode = DriveMode::FollowLane;
    d.overtake = {};
    return d;  // caller fills the lane-following command
  }

  switch (st.phase) {
    case OvertakePhase::Shift: {
      const double vy = std::min(cfg.overtake_lateral_speed, (cfg.overtake_offset - st.shifted) / dt);
      d.command = {0.0, vy, 0.0};
      st.shifted += vy * dt;
      break;
    }
    case OvertakePhase::Pass:
      d.command = {cfg.cruise_speed, 0.0, 0.0};
      st.travelled += cfg.cruise_speed * dt;
      break;
    case OvertakePhase::Return: {
      const double vy = std::min(cfg.overtake_lateral_speed, (cfg.overtake_offset - st.shifted) / dt);
      d.command = {0.0, -vy, 0.0};
      st.shifted += vy * dt;
      break;
    }
    case OvertakePhase::None: break;
  }
  d.overtake = st;
  return d;
}

}  // namespace detail

inline DriveDecision decide(const PerceptionFrame& frame, const DriveDecision& prev, const DecisionConfig& cfg) {
  DriveDecision d;
  if (!cfg.enabled) {
    d.command = {cfg.cruise_speed, 0.0, 0.0};
    return d;
  }
  d.triggers = roi_objects(frame, cfg.roi, cfg.min_roi_pixels);
  d.overtake = prev.overtake;

  if (d.triggers.contains(ObjectClass::Pedestrian)) {
    d.mode = DriveMode::StopPedestrian;
    return d;
  }
  if (cfg.light_rule_enabled &&
      (d.triggers.contains(ObjectClass::RedLight) || d.triggers.contains(ObjectClass::AmberLight))) {
    d.mode = DriveMode::StopRedLight;
    return d;
  }
  if (d.triggers.contains(ObjectClass::Obstacle) || prev.overtake.active()) {
    DriveDecision o = detail::overtake_step(prev.overtake, d.triggers.contains(ObjectClass::Obstacle), cfg);
    if (o.mode == DriveMode::Overtake) {
      o.triggers = d.triggers;
      return o;
    }
    d.overtake = {};  // overtake finished this frame; fall through to lane logic
  }

  const LaneObservation lanes = analyze_lanes(frame.lane_mask, frame.drivable_mask, cfg);
  if (lanes.crossline && lanes.crossline->continuous && lanes.crossline->row >= cfg.roi.row_begin) {
    d.mode = DriveMode::StopLine;
    return d;
  }
  if (lanes.sideline && lanes.sideline_in_left_roi) {
    d.mode = DriveMode::FollowLane;
    d.command = {cfg.cruise_speed, 0.0, steering_rate(*lanes.sideline, cfg)};
    return d;
  }
  std::optional<TurnDirection> turn;
  if (prev.mode == DriveMode::Turn) {
    turn = prev.turn;  // keep turning until the sideline is back in the left ROI
  } else {
    turn = detect_turn(frame.drivable_mask, cfg);
  }
  if (turn) {
    d.mode = DriveMode::Turn;
    d.turn = *turn;
    d.command = {cfg.turn_speed, 0.0, *turn == TurnDirection::Left ? cfg.turn_rate : -cfg.turn_rate};
    return d;
  }
  d.mode = DriveMode::FollowLane;
  d.command = {cfg.cruise_speed, 0.0, 0.0};
  return d;
}

}  // namespace avsim
