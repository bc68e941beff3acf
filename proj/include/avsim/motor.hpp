#pragma once

// Microcontroller-side motor control: quadrature encoder counters behind a
// gearbox, a fixed-period PID velocity loop, and a first-order DC motor plant
// driven by PWM duty.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <fmt/core.h>

#include "avsim/kinematics.hpp"

namespace avsim {

inline constexpr double kControlPeriod = 0.1;  // s
inline constexpr double kPhysicsStep = 0.001;  // s

struct MotorModel {
  double gain = 20.0;          // steady-state output speed per unit duty, (rad/s)/duty
  double time_constant = 0.2;  // s
  int cpr = 1800;              // counts per output revolution: 12 motor counts x 150:1 gear
  double duty_limit = 1.0;

  void validate() const {
    if (!(gain > 0.0) || !(time_constant > 0.0) || cpr < 1 || !(duty_limit > 0.0))
      throw std::invalid_argument("MotorModel: gain, time constant, cpr and duty limit must be positive");
  }
};

struct MotorState {
  double omega_true = 0.0;  // rad/s at the output shaft
  double theta = 0.0;       // rad, accumulated
  std::int64_t encoder_count = 0;
  double pwm_duty = 0.0;
};

/// PID gains in duty units. `kff` scales the setpoint into a feedforward duty
/// term ("the control set for the given speed"); zero gives the plain PID law.
struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double kff = 0.0;

  void validate() const {
    if (kp < 0.0 || ki < 0.0 || kd < 0.0 || kff < 0.0)
      throw std::invalid_argument("PidGains: gains must be non-negative");
  }
};

/// Gains used by the vehicle unless overridden in config.
inline PidGains default_wheel_gains(const MotorModel& m = {}) {
  return {.kp = 0.05, .ki = 0.0, .kd = 0.005, .kff = 1.0 / m.gain};
}

struct PidState {
  double setpoint = 0.0;
  double prev_error = 0.0;
  double integral = 0.0;
  double prev_measured = 0.0;
};

inline std::int64_t encoder_count_for(double theta, int cpr) {
  return static_cast<std::int64_t>(std::floor(theta * cpr / (2.0 * std::numbers::pi)));
}

inline std::int64_t encoder_sample(const MotorState& m) { return m.encoder_count; }

inline double measure_velocity(std::int64_t count_now, std::int64_t count_prev, double dt, int cpr) {
  if (!(dt > 0.0)) throw std::invalid_argument("measure_velocity: dt must be positive");
  return static_cast<double>(count_now - count_prev) * 2.0 * std::numbers::pi / (cpr * dt);
}

struct PidOutput {
  double duty = 0.0;
  PidState state;
};

inline PidOutput pid_step(const PidState& s, const PidGains& g, double measured, double dt,
                          double duty_limit = 1.0) {
  PidState next = s;
  const double error = s.setpoint - measured;
  if (g.ki > 0.0) {
    const double bound = duty_limit / g.ki;
    next.integral = std::clamp(s.integral + error * dt, -bound, bound);
  }
  const double raw = g.kff * s.setpoint + g.kp * error + g.ki * next.integral +
                     g.kd * (error - s.prev_error) / dt;
  next.prev_error = error;
  next.prev_measured = measured;
  return {std::clamp(raw, -duty_limit, duty_limit), next};
}

/// Advances the first-order plant d(omega)/dt = (K*duty - omega)/tau exactly over dt.
inline MotorState motor_step(const MotorState& m, double duty, const MotorModel& model, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("motor_step: dt must be positive");
  duty = std::clamp(duty, -model.duty_limit, model.duty_limit);
  const double target = model.gain * duty;
  const double decay = std::exp(-dt / model.time_constant);
  MotorState next;
  next.pwm_duty = duty;
  next.omega_true = target + (m.omega_true - target) * decay;
  next.theta = m.theta + target * dt + (m.omega_true - target) * model.time_constant * (1.0 - decay);
  next.encoder_count = encoder_count_for(next.theta, model.cpr);
  return next;
}

/// One wheel: plant state, controller state and the counter value latched at the previous tick.
struct MotorChannel {
  MotorState motor;
  PidState pid;
  std::int64_t last_count = 0;
  double last_measured = 0.0;
};

using MotorQuad = std::array<MotorChannel, 4>;

/// Runs the 0.1 s timer interrupt for all four wheels: latch encoders, compute
/// speeds, run the PID, and write the new duty into each motor's PWM.
inline std::array<double, 4> control_tick(MotorQuad& quad, const WheelSpeeds& setpoints,
                                          const PidGains& gains, const MotorModel& model,
                                          double dt = kControlPeriod) {
  const auto sp = setpoints.as_array();
  std::array<double, 4> duties{};
  for (std::size_t i = 0; i < quad.size(); ++i) {
    auto& ch = quad[i];
    const std::int64_t now = encoder_sample(ch.motor);
    const double measured = measure_velocity(now, ch.last_count, dt, model.cpr);
    ch.last_count = now;
    ch.last_measured = measured;
    ch.pid.setpoint = sp[i];
    const auto out = pid_step(ch.pid, gains, measured, dt, model.duty_limit);
    ch.pid = out.state;
    ch.motor.pwm_duty = out.duty;
    duties[i] = out.duty;
  }
  return duties;
}

/// Advances all four plants by one physics substep at their current duty.
inline void physics_step(MotorQuad& quad, const MotorModel& model, double dt = kPhysicsStep) {
  for (auto& ch : quad) ch.motor = motor_step(ch.motor, ch.motor.pwm_duty, model, dt);
}

inline WheelSpeeds true_wheel_speeds(const MotorQuad& quad) {
  return {quad[0].motor.omega_true, quad[1].motor.omega_true, quad[2].motor.omega_true,
          quad[3].motor.omega_true};
}

/// One telemetry row per motor per tick: `t,motor_id,setpoint,measured,duty,omega_true`.
inline std::string telemetry_rows(double t, const MotorQuad& quad) {
  std::string out;
  for (std::size_t i = 0; i < quad.size(); ++i) {
    const auto& ch = quad[i];
    out += fmt::format("{:.3f},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", t, i, ch.pid.setpoint,
                       ch.last_measured, ch.motor.pwm_duty, ch.motor.omega_true);
  }
  return out;
}

inline constexpr const char* kTelemetryHeader = "t,motor_id,setpoint,measured,duty,omega_true\n";

}  // namespace avsim
