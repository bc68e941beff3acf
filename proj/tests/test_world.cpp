#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "avsim/oracle_backend.hpp"
#include "avsim/sim.hpp"

using namespace avsim;

namespace {

// Does the camera ray through pixel centre (c, r) hit the axis-aligned box
// [x0,x1] x [y0,y1] x [0,h] (body frame)? Slab test, independent of the
// renderer's projection code.
bool ray_hits_box(const CameraModel& cam, int c, int r, double x0, double x1, double y0, double y1, double h) {
  const double a = (c + 0.5 - cam.cx()) / cam.fx();
  const double b = (r + 0.5 - cam.cy()) / cam.fy();
  const double sp = std::sin(cam.pitch), cp = std::cos(cam.pitch);
  // forward (cp, 0, -sp), right (0, -1, 0), down (-sp, 0, -cp)
  const double d[3] = {cp - b * sp, -a, -sp - b * cp};
  const double o[3] = {cam.mount_x, 0.0, cam.mount_height};
  const double lo[3] = {x0, y0, 0.0}, hi[3] = {x1, y1, h};
  double tmin = 0.0, tmax = INFINITY;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (o[k] < lo[k] || o[k] > hi[k]) return false;
      continue;
    }
    double t0 = (lo[k] - o[k]) / d[k], t1 = (hi[k] - o[k]) / d[k];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
  }
  return tmin <= tmax;
}

Scenario straight_road() {
  Scenario s;
  s.bounds = {-1, -1, 4, 1};
  s.drivable_polygons = {{{-0.5, -0.2}, {3.5, -0.2}, {3.5, 0.2}, {-0.5, 0.2}}};
  s.lanes.push_back({{{-0.5, 0.045}, {3.5, 0.045}}, 0.02});
  s.lanes.push_back({{{-0.5, -0.19}, {3.5, -0.19}}, 0.02});
  return s;
}

}  // namespace

TEST(Camera, GroundPointAndProjectionAreInverse) {
  const CameraModel cam;
  for (int r = 0; r < cam.height; r += 7)
    for (int c = 0; c < cam.width; c += 11) {
      const auto g = cam.ground_point(c + 0.5, r + 0.5);
      if (!g) continue;
      const auto p = cam.project(g->x, g->y, 0.0);
      ASSERT_TRUE(p);
      ASSERT_NEAR(p->x, c + 0.5, 1e-9);
      ASSERT_NEAR(p->y, r + 0.5, 1e-9);
    }
}

TEST(Camera, AboveHorizonRaisesHorizonClip) {
  const CameraModel cam;
  EXPECT_LT(cam.horizon_row(), cam.cy());
  if (cam.horizon_row() > 0) {
    EXPECT_THROW(cam.ground_point_checked(256, 0), HorizonClip);
  }
  CameraModel steep;
  steep.pitch = 1.2;  // horizon above the image top
  EXPECT_NO_THROW(steep.ground_point_checked(256, 0));
}

TEST(Camera, RoiSeesGroundJustAheadOfTheCamera) {
  const CameraModel cam;
  const Vec2 near = cam.ground_point_checked(256, 319.5);
  const Vec2 far = cam.ground_point_checked(256, 224.5);
  EXPECT_NEAR(near.x - cam.mount_x, 0.078, 0.005);
  EXPECT_NEAR(far.x - cam.mount_x, 0.148, 0.005);
}

TEST(Render, EmptyScenario) {
  const RenderOutput r = render_masks(Scenario{}, {}, CameraModel{}, 0.0);
  EXPECT_EQ(r.drivable_mask.count(0), r.drivable_mask.size());
  EXPECT_EQ(r.lane_mask.count(0), r.lane_mask.size());
  EXPECT_EQ(r.object_mask.count(0), r.object_mask.size());
  EXPECT_TRUE(r.detections.empty());
}

TEST(Render, InfinitePlaneCoversEveryGroundPixel) {
  Scenario s;
  s.drivable_polygons = {{{-1e4, -1e4}, {1e4, -1e4}, {1e4, 1e4}, {-1e4, 1e4}}};
  const CameraModel cam;
  const RenderOutput r = render_masks(s, {0.3, -0.2, 0.7}, cam, 0.0);
  for (int row = 0; row < cam.height; ++row) {
    const bool ground = row + 0.5 > cam.horizon_row() + 1e-9;
    for (int c = 0; c < cam.width; c += 16) ASSERT_EQ(r.drivable_mask.at(c, row), ground ? 1 : 0) << row;
  }
}

TEST(Render, PedestrianDeadAheadIsCentredAndMatchesRayCast) {
  Scenario s;
  s.actors.push_back({ObjectClass::Pedestrian, {0.47, -0.03, 0.53, 0.03}, 0.15, {}, 0.0});
  const CameraModel cam;
  const RenderOutput r = render_masks(s, {}, cam, 0.0);
  double sum = 0, n = 0, osum = 0, on = 0;
  for (int row = 0; row < cam.height; ++row)
    for (int c = 0; c < cam.width; ++c) {
      if (r.object_mask.at(c, row) == 1) {
        sum += c;
        ++n;
      }
      if (ray_hits_box(cam, c, row, 0.47, 0.53, -0.03, 0.03, 0.15)) {
        osum += c;
        ++on;
      }
    }
  ASSERT_GT(n, 0);
  ASSERT_GT(on, 0);
  const double centroid = sum / n + 0.5, oracle = osum / on + 0.5;  // pixel centres
  EXPECT_NEAR(centroid, 256.0, 1.0);
  EXPECT_NEAR(oracle, 256.0, 1.0);
  EXPECT_NEAR(centroid, oracle, 1.0);
}

TEST(Render, OccludedActorKeepsOnlyVisibleBox) {
  Scenario s;
  s.actors.push_back({ObjectClass::Obstacle, {0.45, -0.05, 0.5, 0.05}, 0.2, {}, 0.0});   // near, tall
  s.actors.push_back({ObjectClass::Pedestrian, {0.7, -0.02, 0.74, 0.02}, 0.1, {}, 0.0});  // hidden behind
  const RenderOutput r = render_masks(s, {}, CameraModel{}, 0.0);
  EXPECT_EQ(r.object_mask.count(1), 0u);
  ASSERT_EQ(r.detections.size(), 1u);
  EXPECT_EQ(r.detections[0].class_id, ObjectClass::Obstacle);
}

TEST(StepWorld, StaticScenarioOnlyAdvancesTime) {
  Scenario s = straight_road();
  s.actors.push_back({ObjectClass::Obstacle, {1, -0.05, 1.1, 0.05}, 0.08, {}, 0.0});
  const WorldState w0 = initial_state(s);
  const WorldState w1 = step_world(s, w0, {}, ChassisGeometry{}, 0.001);
  EXPECT_DOUBLE_EQ(w1.t, 0.001);
  EXPECT_EQ(w1.vehicle, w0.vehicle);
  EXPECT_EQ(w1.actor_centers, w0.actor_centers);
}

TEST(StepWorld, ScriptedActorMovesAlongSegment) {
  Scenario s;
  s.actors.push_back({ObjectClass::Pedestrian, {0.95, -0.05, 1.05, 0.05}, 0.15, {{1.0, 0.0}, {1.0, 1.0}}, 0.1});
  WorldState w = initial_state(s);
  for (int i = 0; i < 1000; ++i) w = step_world(s, w, {}, ChassisGeometry{}, 0.001);
  EXPECT_NEAR(w.actor_centers[0].x, 1.0, 1e-12);
  EXPECT_NEAR(w.actor_centers[0].y, 0.1, 1e-9);
}

TEST(StepWorld, ConstantWheelSpeedsGiveExactDistance) {
  const Scenario s;
  WorldState w = initial_state(s);
  for (int i = 0; i < 10000; ++i) w = step_world(s, w, {5, 5, 5, 5}, ChassisGeometry{}, 0.001);
  EXPECT_NEAR(w.vehicle.x, 2.0, 1e-9);
  EXPECT_NEAR(w.vehicle.y, 0.0, 1e-12);
}

TEST(StepWorld, CoupledWithMotorPlantMatchesWheelRotation) {
  // Distance must equal wheel radius times the plant's exact shaft angle;
  // the shortfall from 2.0 m is the start-up lag.
  const Scenario s;
  const ChassisGeometry geom;
  const MotorModel model;
  WorldState w = initial_state(s);
  MotorQuad quad{};
  for (int k = 0; k < 10000; ++k) {
    if (k % 100 == 0) control_tick(quad, {5, 5, 5, 5}, default_wheel_gains(model), model);
    physics_step(quad, model);
    w = step_world(s, w, true_wheel_speeds(quad), geom, 0.001);
  }
  // The world integrates omega_true at step ends (rectangle rule), the plant exactly.
  EXPECT_NEAR(w.vehicle.x, geom.wheel_radius * quad[0].motor.theta, 2e-4);
  EXPECT_LT(w.vehicle.x, 2.0);
  EXPECT_GT(w.vehicle.x, 1.9);
}

TEST(SimClock, PeriodsMustBeMultiples) {
  SimClock c;
  EXPECT_NO_THROW(c.validate());
  c.control_dt = 0.1005;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ClosedLoop, ZeroDurationGivesEmptyLog) {
  Scenario s = straight_road();
  s.duration = 0.0;
  OracleBackend be(s);
  for (LoopMode m : {LoopMode::SingleThread, LoopMode::TwoTask}) {
    SimConfig cfg;
    cfg.mode = m;
    EXPECT_TRUE(run_closed_loop(s, be, cfg).empty());
  }
}

TEST(ClosedLoop, StraightRoadReachesCruiseWithLittleDrift) {
  Scenario s = straight_road();
  s.duration = 10.0;
  OracleBackend be(s);
  const SimConfig cfg;
  const EpisodeLog log = run_closed_loop(s, be, cfg);
  EXPECT_EQ(log.collisions(), 0u);
  EXPECT_EQ(log.count("leave_drivable"), 0u);
  EXPECT_TRUE(log.saw_mode("FollowLane"));
  EXPECT_LT(std::abs(log.final_pose.theta), 0.01);
  EXPECT_NEAR(log.poses.back().body.vx, cfg.decision.cruise_speed, 0.02 * cfg.decision.cruise_speed);
  EXPECT_LE(log.max_stale_age, 2);
  EXPECT_EQ(log.poses.size(), 100u);
  EXPECT_EQ(log.decisions.size(), 50u);
}

TEST(ClosedLoop, PedestrianAheadStopsWithoutCollision) {
  Scenario s = straight_road();
  s.actors.push_back({ObjectClass::Pedestrian, {0.57, -0.03, 0.63, 0.03}, 0.15, {}, 0.0});  // 0.6 m ahead
  s.duration = 6.0;
  OracleBackend be(s);
  const EpisodeLog log = run_closed_loop(s, be, SimConfig{});
  EXPECT_TRUE(log.saw_mode("StopPedestrian"));
  EXPECT_EQ(log.collisions(), 0u);
  EXPECT_NEAR(log.poses.back().body.vx, 0.0, 1e-3);
}

TEST(ClosedLoop, SingleAndTwoTaskLogsAreByteIdentical) {
  Scenario s = straight_road();
  s.actors.push_back({ObjectClass::Obstacle, {0.95, -0.05, 1.05, 0.05}, 0.08, {}, 0.0});
  s.duration = 4.0;
  auto run = [&](LoopMode m) {
    OracleBackend be(s);
    SimConfig cfg;
    cfg.mode = m;
    return run_closed_loop(s, be, cfg).files();
  };
  const auto a = run(LoopMode::SingleThread);
  EXPECT_EQ(a, run(LoopMode::SingleThread));
  EXPECT_EQ(a, run(LoopMode::TwoTask));
}

TEST(ClosedLoop, WireCarriesOneFramePerDecision) {
  Scenario s = straight_road();
  s.duration = 2.0;
  OracleBackend be(s);
  const EpisodeLog log = run_closed_loop(s, be, SimConfig{});
  EXPECT_EQ(static_cast<std::size_t>(std::count(log.wire.begin(), log.wire.end(), '\n')), log.decisions.size());
  const auto frames = feed_stream(std::vector<std::string>{log.wire});
  for (std::size_t i = 0; i < frames.size(); ++i) ASSERT_TRUE(std::holds_alternative<Twist>(frames[i]));
}

TEST(Scenario, FixturesLoadAndValidate) {
  for (const char* name : {"straight", "pedestrian", "crossline_continuous", "crossline_dashed", "obstacle", "curve"}) {
    const Scenario s = load_scenario(std::string(AVSIM_FIXTURES) + "/" + name + ".ini");
    EXPECT_NO_THROW(s.validate()) << name;
    EXPECT_FALSE(s.drivable_polygons.empty()) << name;
  }
}

TEST(Scenario, BadFileReportsConfigError) {
  EXPECT_THROW(parse_scenario(IniDocument::parse("[drivable]\npolygon = 0 0; 1\n")), ConfigError);
}
