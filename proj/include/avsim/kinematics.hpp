#pragma once

// Mecanum X-configuration (45 degree rollers) kinematics.
// Wheel order: front-left, front-right, rear-left, rear-right; positive wheel
// speed drives the vehicle forward.

#include <array>
#include <stdexcept>

#include "avsim/geometry.hpp"

namespace avsim {

struct ChassisGeometry {
  double wheel_radius = 0.040;  // m (80 mm wheels)
  double lw_sum = 0.15;         // m, half wheelbase + half track

  void validate() const {
    if (!(wheel_radius > 0.0) || !(lw_sum > 0.0))
      throw std::invalid_argument("ChassisGeometry: radius and L+W must be positive");
  }
};

struct WheelSpeeds {
  double fl = 0.0;
  double fr = 0.0;
  double rl = 0.0;
  double rr = 0.0;

  std::array<double, 4> as_array() const { return {fl, fr, rl, rr}; }
  static WheelSpeeds from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

  friend bool operator==(const WheelSpeeds&, const WheelSpeeds&) = default;
};

inline WheelSpeeds inverse_kinematics(const Twist& t, const ChassisGeometry& g) {
  const double k = g.lw_sum * t.omega;
  const double r = g.wheel_radius;
  return {(t.vx - t.vy - k) / r, (t.vx + t.vy + k) / r, (t.vx + t.vy - k) / r,
          (t.vx - t.vy + k) / r};
}

/// Least-squares body twist for four wheel speeds; the null-space part
/// (fl + fr - rl - rr) is discarded.
inline Twist forward_kinematics(const WheelSpeeds& w, const ChassisGeometry& g) {
  const double r = g.wheel_radius;
  return {r * (w.fl + w.fr + w.rl + w.rr) / 4.0, r * (-w.fl + w.fr + w.rl - w.rr) / 4.0,
          r * (-w.fl + w.fr - w.rl + w.rr) / (4.0 * g.lw_sum)};
}

}  // namespace avsim
