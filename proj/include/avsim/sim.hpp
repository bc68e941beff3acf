#pragma once

// Closed-loop episode driver. A virtual clock interleaves three rates:
//   perception every 200 ms: infer -> postprocess -> decide -> serialize -> framer -> mailbox
//   control    every 100 ms: mailbox -> inverse kinematics -> per-wheel PID
//   physics    every   1 ms: motor plants, actors, vehicle pose, event checks
//
// In TwoTask mode perception runs on its own thread. The driver hands it each
// camera frame and waits for completion before advancing simulated time, so
// both modes produce the same log byte for byte.

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/core.h>

#include "avsim/decision.hpp"
#include "avsim/kinematics.hpp"
#include "avsim/motor.hpp"
#include "avsim/perception.hpp"
#include "avsim/wire.hpp"
#include "avsim/world.hpp"

namespace avsim {

enum class LoopMode { SingleThread, TwoTask };

struct SimConfig {
  DecisionConfig decision;
  ChassisGeometry chassis;
  MotorModel motor;
  PidGains pid = default_wheel_gains();
  TwistLimits limits;
  SimClock clock;
  double score_threshold = 0.5;
  int watchdog_ticks = 10;
  LoopMode mode = LoopMode::SingleThread;
  std::optional<std::filesystem::path> frame_dump_dir;  // replay layout, one frame per perception tick
};

struct Event {
  double t = 0.0;
  std::string kind;  // collision, line_contact, leave_drivable, enter_drivable
  std::string detail;
  friend bool operator==(const Event&, const Event&) = default;
};

struct DecisionRecord {
  double t = 0.0;
  DriveDecision decision;
};

struct PoseRecord {
  double t = 0.0;
  Pose2D pose;
  Twist body;  // from the true wheel speeds
};

struct EpisodeLog {
  std::vector<PoseRecord> poses;  // one per control tick
  std::vector<DecisionRecord> decisions;
  std::vector<Event> events;
  std::vector<CameraFrame> camera_frames;  // what perception was handed, one per perception tick
  std::string wire;       // every byte sent over the command link
  std::string telemetry;  // motor rows, see kTelemetryHeader
  int max_stale_age = 0;
  Pose2D final_pose;

  bool empty() const { return poses.empty() && decisions.empty() && events.empty(); }

  std::size_t count(std::string_view kind) const {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [&](const Event& e) { return e.kind == kind; }));
  }
  std::size_t collisions() const { return count("collision"); }

  bool saw_mode(std::string_view name) const {
    return std::any_of(decisions.begin(), decisions.end(), [&](const DecisionRecord& r) { return mode_name(r.decision) == name; });
  }

  std::string trace_csv() const {
    std::string s = "t,x,y,theta,vx,vy,omega\n";
    for (const auto& p : poses)
      s += fmt::format("{:.3f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f}\n", p.t, p.pose.x, p.pose.y, p.pose.theta,
                       p.body.vx, p.body.vy, p.body.omega);
    return s;
  }

  std::string decisions_csv() const {
    std::string s = "t,mode,vx,vy,omega,trigger_classes\n";
    for (const auto& r : decisions) {
      const auto& c = r.decision.command;
      s += fmt::format("{:.3f},{},{:.6f},{:.6f},{:.6f},{}\n", r.t, mode_name(r.decision), c.vx, c.vy, c.omega,
                       r.decision.triggers.to_string());
    }
    return s;
  }

  std::string events_csv() const {
    std::string s = "t,kind,detail\n";
    for (const auto& e : events) s += fmt::format("{:.3f},{},{}\n", e.t, e.kind, e.detail);
    return s;
  }

  /// Every log file keyed by name; equal maps mean byte-identical logs.
  std::map<std::string, std::string> files() const {
    return {{"trace.csv", trace_csv()},
            {"decisions.csv", decisions_csv()},
            {"events.csv", events_csv()},
            {"wire.txt", wire},
            {"telemetry.csv", std::string(kTelemetryHeader) + telemetry}};
  }

  void write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, body] : files()) write_file(dir / name, body);
  }
};

namespace detail {

/// Perception side of the loop: owns the previous decision and the framer
/// on the receiving end of the command link.
class PerceptionTask {
 public:
  PerceptionTask(InferenceBackend& backend, const SimConfig& cfg, CommandMailbox& mailbox)
      : backend_(&backend), cfg_(&cfg), mailbox_(&mailbox) {}

  void run(const CameraFrame& cam) {
    const RawOutputs raw = backend_->infer(cam);
    const PerceptionFrame frame =
        postprocess(raw, cfg_->score_threshold, {kImageWidth, kImageHeight}, cam.timestamp);
    if (cfg_->frame_dump_dir) write_frame(*cfg_->frame_dump_dir, cam.index, frame);
    prev_ = decide(frame, prev_, cfg_->decision);
    decisions_.push_back({cam.timestamp, prev_});
    const std::string bytes = serialize(prev_.command);
    wire_ += bytes;
    for (const auto& r : framer_.feed(bytes))
      if (const Twist* t = std::get_if<Twist>(&r)) mailbox_->commit(*t);
  }

  std::vector<DecisionRecord>& decisions() { return decisions_; }
  std::string& wire() { return wire_; }

 private:
  InferenceBackend* backend_;
  const SimConfig* cfg_;
  CommandMailbox* mailbox_;
  StreamFramer framer_;
  DriveDecision prev_;
  std::vector<DecisionRecord> decisions_;
  std::string wire_;
};

/// Runs a PerceptionTask on a worker thread, one frame at a time.
class PerceptionWorker {
 public:
  explicit PerceptionWorker(PerceptionTask& task) : task_(&task), thread_([this] { loop(); }) {}

  ~PerceptionWorker() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
  }

  /// Hands over one frame and blocks until the worker has processed it.
  void process(const CameraFrame& cam) {
    std::unique_lock lock(mu_);
    pending_ = cam;
    cv_.notify_all();
    cv_.wait(lock, [&] { return !pending_.has_value(); });
    if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
  }

 private:
  void loop() {
    std::unique_lock lock(mu_);
    for (;;) {
      cv_.wait(lock, [&] { return stop_ || pending_.has_value(); });
      if (stop_) return;
      const CameraFrame cam = *pending_;
      lock.unlock();
      try {
        task_->run(cam);
      } catch (...) {
        lock.lock();
        error_ = std::current_exception();
        lock.unlock();
      }
      lock.lock();
      pending_.reset();
      cv_.notify_all();
    }
  }

  PerceptionTask* task_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::optional<CameraFrame> pending_;
  std::exception_ptr error_;
  bool stop_ = false;
  std::thread thread_;
};

inline bool footprint_on_drivable(const std::vector<Vec2>& corners, const Scenario& s) {
  for (Vec2 c : corners) {
    const bool inside = std::any_of(s.drivable_polygons.begin(), s.drivable_polygons.end(),
                                    [&](const auto& p) { return point_in_polygon(c, p); });
    if (!inside) return false;
  }
  return true;
}

inline bool footprint_touches_lane(const std::vector<Vec2>& corners, const LaneMarking& l) {
  for (std::size_t i = 0; i + 1 < l.points.size(); ++i) {
    const Vec2 a = l.points[i], b = l.points[i + 1];
    const Vec2 d = b - a;
    const double len = norm(d);
    if (len <= 0) continue;
    const Vec2 n = (l.width / 2 / len) * Vec2{-d.y, d.x};
    if (convex_polygons_overlap(corners, {a + n, b + n, b - n, a - n})) return true;
  }
  return false;
}

}  // namespace detail

inline EpisodeLog run_closed_loop(const Scenario& s, InferenceBackend& backend, const SimConfig& cfg) {
  cfg.clock.validate();
  cfg.decision.validate();
  cfg.chassis.validate();
  cfg.motor.validate();
  cfg.pid.validate();

  EpisodeLog log;
  const double dt = cfg.clock.physics_dt;
  const long steps = std::lround(s.duration / dt);
  const int control_every = cfg.clock.control_every();
  const int perception_every = cfg.clock.perception_every();

  CommandMailbox mailbox;
  CommandReader reader(mailbox, cfg.watchdog_ticks);
  detail::PerceptionTask task(backend, cfg, mailbox);
  std::unique_ptr<detail::PerceptionWorker> worker;
  if (cfg.mode == LoopMode::TwoTask && steps > 0) worker = std::make_unique<detail::PerceptionWorker>(task);

  WorldState state = initial_state(s);
  MotorQuad quad{};
  std::vector<bool> in_collision(s.actors.size(), false);
  std::vector<bool> on_line(s.lanes.size(), false);
  bool on_drivable = true;

  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (k % perception_every == 0) {
      const CameraFrame cam{static_cast<std::size_t>(k / perception_every), t, state.vehicle};
      log.camera_frames.push_back(cam);
      if (worker) worker->process(cam);
      else task.run(cam);
    }
    if (k % control_every == 0) {
      const Twist cmd = clamp_twist(reader.on_tick(), cfg.limits);
      log.max_stale_age = std::max(log.max_stale_age, reader.stale_age());
      control_tick(quad, inverse_kinematics(cmd, cfg.chassis), cfg.pid, cfg.motor, cfg.clock.control_dt);
      log.telemetry += telemetry_rows(t, quad);
      log.poses.push_back({t, state.vehicle, forward_kinematics(true_wheel_speeds(quad), cfg.chassis)});
    }

    physics_step(quad, cfg.motor, dt);
    state = step_world(s, state, true_wheel_speeds(quad), cfg.chassis, dt);
    state.t = static_cast<double>(k + 1) * dt;

    const auto body = vehicle_footprint(state.vehicle, s.vehicle_length, s.vehicle_width);
    for (std::size_t i = 0; i < s.actors.size(); ++i) {
      const bool hit = convex_polygons_overlap(body, s.actors[i].footprint.moved_to(state.actor_centers[i]).corners());
      if (hit && !in_collision[i])
        log.events.push_back({state.t, "collision", fmt::format("actor={} class={}", i, to_string(s.actors[i].cls))});
      in_collision[i] = hit;
    }
    for (std::size_t i = 0; i < s.lanes.size(); ++i) {
      if (s.lanes[i].role != LaneRole::Cross) continue;
      const bool touch = detail::footprint_touches_lane(body, s.lanes[i]);
      if (touch && !on_line[i]) log.events.push_back({state.t, "line_contact", fmt::format("lane={}", i)});
      on_line[i] = touch;
    }
    if (!s.drivable_polygons.empty()) {
      const bool inside = detail::footprint_on_drivable(body, s);
      if (inside != on_drivable) log.events.push_back({state.t, inside ? "enter_drivable" : "leave_drivable", ""});
      on_drivable = inside;
    }
  }
  worker.reset();

  log.decisions = std::move(task.decisions());
  log.wire = std::move(task.wire());
  log.final_pose = state.vehicle;
  return log;
}

}  // namespace avsim
