#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

#include <gtest/gtest.h>

#include "avsim/kinematics.hpp"
#include "avsim/motor.hpp"

using namespace avsim;
constexpr double kPi = std::numbers::pi;

namespace {

// floor(a/1000 * cpr / 2pi) with pi bracketed by two 8-digit rationals; both
// brackets must agree or the case is skipped.
std::optional<std::int64_t> exact_count(std::int64_t milli_rad, std::int64_t cpr) {
  auto floor_div = [](std::int64_t n, std::int64_t d) { return n / d - ((n % d != 0) && ((n < 0) != (d < 0))); };
  const std::int64_t num = milli_rad * cpr * 10'000'000;
  const std::int64_t lo = floor_div(num, std::int64_t{2000} * 31'415'927);
  const std::int64_t hi = floor_div(num, std::int64_t{2000} * 31'415'926);
  if (lo != hi) return std::nullopt;
  return lo;
}

}  // namespace

TEST(Encoder, Examples) {
  EXPECT_EQ(encoder_count_for(0.0, 1800), 0);
  EXPECT_EQ(encoder_count_for(2 * kPi, 1800), 1800);
  EXPECT_EQ(encoder_count_for(1.0, 1800), 286);
  EXPECT_EQ(exact_count(1000, 1800), 286);
}

TEST(Encoder, MatchesExactRationalFloor) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::int64_t> milli(-200'000, 200'000);
  int checked = 0;
  for (int i = 0; i < 20000; ++i) {
    const std::int64_t a = milli(rng);
    const auto e = exact_count(a, 1800);
    if (!e) continue;
    ++checked;
    ASSERT_EQ(encoder_count_for(static_cast<double>(a) / 1000.0, 1800), *e) << a;
  }
  EXPECT_GT(checked, 19000);
}

TEST(Encoder, SampleReadsLatchedCount) {
  MotorState m;
  m.encoder_count = 42;
  EXPECT_EQ(encoder_sample(m), 42);
}

TEST(MeasureVelocity, Examples) {
  EXPECT_EQ(measure_velocity(7, 7, 0.1, 1800), 0.0);
  EXPECT_NEAR(measure_velocity(1800, 0, 0.1, 1800), 20 * kPi, 1e-12);
  EXPECT_NEAR(measure_velocity(45, 0, 0.1, 1800), kPi / 2, 1e-12);
  EXPECT_THROW(measure_velocity(1, 0, 0.0, 1800), std::invalid_argument);
}

TEST(Pid, ZeroGainsGiveZeroDuty) {
  PidState s;
  s.setpoint = 10;
  EXPECT_EQ(pid_step(s, {}, 3.0, 0.1).duty, 0.0);
}

TEST(Pid, PureProportional) {
  PidState s;
  s.setpoint = 5;
  EXPECT_NEAR(pid_step(s, {.kp = 0.1}, 3.0, 0.1).duty, 0.2, 1e-15);
}

TEST(Pid, DutyAndIntegralAreClamped) {
  PidState s;
  s.setpoint = 1000;
  const PidGains g{.kp = 1.0, .ki = 2.0};
  for (int i = 0; i < 100; ++i) {
    const auto out = pid_step(s, g, 0.0, 0.1);
    ASSERT_LE(std::abs(out.duty), 1.0);
    ASSERT_LE(std::abs(out.state.integral), 1.0 / g.ki + 1e-12);
    s = out.state;
  }
}

TEST(Pid, NegativeGainsRejected) { EXPECT_THROW((PidGains{.kp = -1}.validate()), std::invalid_argument); }

TEST(MotorStep, RestStaysAtRest) {
  MotorState m;
  for (int i = 0; i < 100; ++i) m = motor_step(m, 0.0, {}, 0.001);
  EXPECT_EQ(m.omega_true, 0.0);
  EXPECT_EQ(m.encoder_count, 0);
}

TEST(MotorStep, FirstOrderStepResponseAgainstEuler) {
  const MotorModel model;
  MotorState m;
  for (int i = 0; i < 200; ++i) m = motor_step(m, 1.0, model, 0.001);
  EXPECT_NEAR(m.omega_true, 20 * (1 - std::exp(-1.0)), 1e-9);
  EXPECT_NEAR(m.omega_true, 12.642, 5e-4);

  double w = 0, th = 0;
  const double h = 1e-6;
  for (int i = 0; i < 200000; ++i) {
    th += h * w;
    w += h * (20.0 - w) / 0.2;
  }
  EXPECT_NEAR(m.omega_true, w, 1e-3);
  EXPECT_NEAR(m.theta, th, 1e-5);
}

TEST(MotorStep, SteadyStateIsGainTimesDuty) {
  MotorState m;
  for (int i = 0; i < 5000; ++i) m = motor_step(m, 0.5, {}, 0.001);
  EXPECT_NEAR(m.omega_true, 10.0, 1e-9);
}

TEST(MotorStep, DutyIsClampedToLimit) {
  const MotorState m = motor_step({}, 3.0, {}, 0.001);
  EXPECT_EQ(m.pwm_duty, 1.0);
}

TEST(ControlTick, RestStaysAtZeroDuty) {
  MotorQuad quad{};
  const auto d = control_tick(quad, {}, default_wheel_gains(), {});
  for (double x : d) EXPECT_EQ(x, 0.0);
}

TEST(ControlTick, IdenticalPlantsGetIdenticalDuties) {
  MotorQuad quad{};
  const MotorModel model;
  for (int tick = 0; tick < 30; ++tick) {
    const auto d = control_tick(quad, {5, 5, 5, 5}, default_wheel_gains(), model);
    ASSERT_EQ(d[0], d[1]);
    ASSERT_EQ(d[0], d[2]);
    ASSERT_EQ(d[0], d[3]);
    for (int k = 0; k < 100; ++k) physics_step(quad, model);
  }
}

TEST(ControlTick, SingleWheelSettlesWithinTwoPercentByTwoSeconds) {
  const MotorModel model;
  const PidGains gains{.kp = 0.05, .kd = 0.01, .kff = 1.0 / model.gain};
  MotorQuad quad{};
  for (int tick = 0; tick < 40; ++tick) {
    control_tick(quad, {10, 10, 10, 10}, gains, model);
    for (int k = 0; k < 100; ++k) {
      physics_step(quad, model);
      if (tick >= 20) {
        ASSERT_NEAR(quad[0].motor.omega_true, 10.0, 0.2) << "t=" << (tick * 100 + k) / 1000.0;
      }
    }
  }
}

TEST(ControlTick, VehicleTwistSettlesAndQuantizationIsBounded) {
  const MotorModel model;
  const ChassisGeometry geom;
  const WheelSpeeds sp = inverse_kinematics({0.2, 0, 0}, geom);
  MotorQuad quad{};
  const double bound = 2 * 2 * kPi / (model.cpr * kControlPeriod);
  for (int tick = 0; tick < 60; ++tick) {
    std::array<double, 4> theta0{};
    for (int i = 0; i < 4; ++i) theta0[i] = quad[i].motor.theta;
    control_tick(quad, sp, default_wheel_gains(model), model);
    for (int k = 0; k < 100; ++k) {
      physics_step(quad, model);
      if (tick >= 30) {
        const Twist t = forward_kinematics(true_wheel_speeds(quad), geom);
        ASSERT_NEAR(t.vx, 0.2, 0.004);
        ASSERT_NEAR(t.vy, 0.0, 0.004);
        ASSERT_NEAR(t.omega, 0.0, 0.004);
      }
    }
    // The next tick measures this tick's motion; compare with the true mean speed.
    MotorQuad probe = quad;
    control_tick(probe, sp, default_wheel_gains(model), model);
    for (int i = 0; i < 4; ++i) {
      const double mean_speed = (quad[i].motor.theta - theta0[i]) / kControlPeriod;
      ASSERT_LE(std::abs(probe[i].last_measured - mean_speed), bound);
    }
  }
}

TEST(ControlTick, DefaultGainsAreStableAcrossSetpoints) {
  const MotorModel model;
  for (double target : {-18.0, -5.0, 0.5, 7.0, 18.0}) {
    MotorQuad quad{};
    double worst_late = 0;
    for (int tick = 0; tick < 100; ++tick) {
      const auto d = control_tick(quad, {target, target, target, target}, default_wheel_gains(model), model);
      for (double x : d) ASSERT_LE(std::abs(x), 1.0);
      for (int k = 0; k < 100; ++k) physics_step(quad, model);
      if (tick >= 50) worst_late = std::max(worst_late, std::abs(quad[0].motor.omega_true - target));
    }
    EXPECT_LE(worst_late, 0.02 * std::abs(target) + 0.1) << target;
  }
}

TEST(Telemetry, FourRowsPerTick) {
  MotorQuad quad{};
  const std::string rows = telemetry_rows(0.1, quad);
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 4);
  EXPECT_EQ(rows.substr(0, 6), "0.100,");
}
