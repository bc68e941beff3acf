#pragma once

// Run configuration for the command-line tool. One file may hold both the
// scenario and the run settings, or point at a separate scenario file with
// `scenario = path` in [run] (relative paths resolve against the config's
// directory).

#include <cstdint>
#include <filesystem>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "avsim/config.hpp"
#include "avsim/oracle_backend.hpp"
#include "avsim/perception.hpp"
#include "avsim/sim.hpp"
#include "avsim/world.hpp"

namespace avsim {

enum class BackendKind { Oracle, Noisy, Replay };

inline BackendKind parse_backend_kind(const std::string& s) {
  if (s == "oracle") return BackendKind::Oracle;
  if (s == "noisy") return BackendKind::Noisy;
  if (s == "replay") return BackendKind::Replay;
  throw ConfigError("backend must be oracle, noisy or replay, got '" + s + "'");
}

inline const char* to_string(BackendKind b) {
  switch (b) {
    case BackendKind::Oracle: return "oracle";
    case BackendKind::Noisy: return "noisy";
    case BackendKind::Replay: return "replay";
  }
  return "?";
}

struct RunConfig {
  std::filesystem::path scenario_path;
  Scenario scenario;
  BackendKind backend = BackendKind::Oracle;
  double flip_prob = 0.0;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> replay_dir;
  SimConfig sim;
  int iterations = 50;                      // bench
  std::vector<double> flip_grid{0.0, 0.01, 0.02, 0.05, 0.1};  // evaluate without --pred
  std::vector<Pose2D> render_poses;         // render; empty means the oracle episode's camera poses
  std::filesystem::path out_dir = "out";

  /// Parameter ranges beyond the per-struct validate() checks.
  void validate() const {
    if (!(flip_prob >= 0.0 && flip_prob < 0.5)) throw ConfigError("flip_prob must lie in [0, 0.5)");
    for (double p : flip_grid)
      if (!(p >= 0.0 && p < 0.5)) throw ConfigError("[evaluate] flip_grid entries must lie in [0, 0.5)");
    if (backend == BackendKind::Replay && !replay_dir) throw ConfigError("replay backend needs [run] replay_dir");
    if (replay_dir && !std::filesystem::is_directory(*replay_dir))
      throw ConfigError("replay_dir not found: " + replay_dir->string());
    if (!(sim.score_threshold >= 0.0 && sim.score_threshold <= 1.0)) throw ConfigError("score_threshold must lie in [0, 1]");
    if (sim.watchdog_ticks < 1) throw ConfigError("watchdog_ticks must be at least 1");
    try {
      sim.decision.validate();
      sim.chassis.validate();
      sim.motor.validate();
      sim.pid.validate();
      sim.clock.validate();
      scenario.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

inline void apply_decision(const IniSection& sec, DecisionConfig& d) {
  sec.require_known({"enabled", "cruise_speed", "roi", "line_angle_threshold_deg", "dash_gap_px", "crossline_min_span_px",
                     "min_component_pixels", "min_elongation", "target_column", "k_lateral", "k_heading",
                     "overtake_offset", "overtake_lateral_speed", "overtake_pass_distance", "overtake_clear_frames",
                     "min_roi_pixels", "light_rule_enabled", "turn_ratio", "turn_speed", "turn_rate"});
  d.enabled = sec.get_bool("enabled", d.enabled);
  d.cruise_speed = sec.get_double("cruise_speed", d.cruise_speed);
  if (sec.has("roi")) {
    const auto r = sec.get_numbers("roi");
    if (r.size() != 4) throw ConfigError("[decision] roi: expected 'col_begin col_end row_begin row_end'");
    d.roi = {static_cast<int>(r[0]), static_cast<int>(r[1]), static_cast<int>(r[2]), static_cast<int>(r[3])};
  }
  d.line_angle_threshold_deg = sec.get_double("line_angle_threshold_deg", d.line_angle_threshold_deg);
  d.dash_gap_px = sec.get_int("dash_gap_px", d.dash_gap_px);
  d.crossline_min_span_px = sec.get_int("crossline_min_span_px", d.crossline_min_span_px);
  d.min_component_pixels = sec.get_int("min_component_pixels", d.min_component_pixels);
  d.min_elongation = sec.get_double("min_elongation", d.min_elongation);
  d.target_column = sec.get_int("target_column", d.target_column);
  d.k_lateral = sec.get_double("k_lateral", d.k_lateral);
  d.k_heading = sec.get_double("k_heading", d.k_heading);
  d.overtake_offset = sec.get_double("overtake_offset", d.overtake_offset);
  d.overtake_lateral_speed = sec.get_double("overtake_lateral_speed", d.overtake_lateral_speed);
  d.overtake_pass_distance = sec.get_double("overtake_pass_distance", d.overtake_pass_distance);
  d.overtake_clear_frames = sec.get_int("overtake_clear_frames", d.overtake_clear_frames);
  d.min_roi_pixels = sec.get_int("min_roi_pixels", d.min_roi_pixels);
  d.light_rule_enabled = sec.get_bool("light_rule_enabled", d.light_rule_enabled);
  d.turn_ratio = sec.get_double("turn_ratio", d.turn_ratio);
  d.turn_speed = sec.get_double("turn_speed", d.turn_speed);
  d.turn_rate = sec.get_double("turn_rate", d.turn_rate);
}

inline std::filesystem::path resolve(const std::filesystem::path& base_dir, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

}  // namespace detail

inline RunConfig parse_run_config(const IniDocument& doc, const std::filesystem::path& config_path) {
  static const std::vector<std::string_view> kSections{"run",   "decision", "chassis", "motor",  "pid",   "limits",
                                                       "clock", "evaluate", "render",  "scenario", "map", "drivable",
                                                       "lane",  "actor",    "light",   "vehicle",  "camera"};
  for (const auto& sec : doc.sections())
    if (std::find(kSections.begin(), kSections.end(), sec.name()) == kSections.end())
      throw ConfigError(fmt::format("line {}: unknown section [{}]", sec.line(), sec.name()));

  RunConfig rc;
  const std::filesystem::path base = config_path.parent_path();
  rc.scenario_path = config_path;
  if (const auto* sec = doc.find("run")) {
    sec->require_known({"scenario", "backend", "flip_prob", "seed", "replay_dir", "mode", "score_threshold",
                        "watchdog_ticks", "iterations", "out", "duration"});
    if (sec->has("scenario")) rc.scenario_path = detail::resolve(base, sec->get_string("scenario"));
    rc.backend = parse_backend_kind(sec->get_string("backend", "oracle"));
    rc.flip_prob = sec->get_double("flip_prob", rc.flip_prob);
    const double seed = sec->get_double("seed", 1.0);
    if (seed < 0 || seed != std::floor(seed)) throw ConfigError("[run] seed must be a non-negative integer");
    rc.seed = static_cast<std::uint64_t>(seed);
    if (sec->has("replay_dir")) rc.replay_dir = detail::resolve(base, sec->get_string("replay_dir"));
    const std::string mode = sec->get_string("mode", "single");
    if (mode == "single") rc.sim.mode = LoopMode::SingleThread;
    else if (mode == "two_task") rc.sim.mode = LoopMode::TwoTask;
    else throw ConfigError("[run] mode must be single or two_task");
    rc.sim.score_threshold = sec->get_double("score_threshold", rc.sim.score_threshold);
    rc.sim.watchdog_ticks = sec->get_int("watchdog_ticks", rc.sim.watchdog_ticks);
    rc.iterations = sec->get_int("iterations", rc.iterations);
    if (sec->has("out")) rc.out_dir = sec->get_string("out");
  }
  rc.scenario = rc.scenario_path == config_path ? parse_scenario(doc) : load_scenario(rc.scenario_path);
  if (rc.scenario.name == "scenario") rc.scenario.name = rc.scenario_path.stem().string();
  if (const auto* sec = doc.find("run"); sec && sec->has("duration")) rc.scenario.duration = sec->get_double("duration");

  if (const auto* sec = doc.find("decision")) detail::apply_decision(*sec, rc.sim.decision);
  if (const auto* sec = doc.find("chassis")) {
    sec->require_known({"wheel_radius", "lw_sum"});
    rc.sim.chassis.wheel_radius = sec->get_double("wheel_radius", rc.sim.chassis.wheel_radius);
    rc.sim.chassis.lw_sum = sec->get_double("lw_sum", rc.sim.chassis.lw_sum);
  }
  if (const auto* sec = doc.find("motor")) {
    sec->require_known({"gain", "time_constant", "cpr", "duty_limit"});
    rc.sim.motor.gain = sec->get_double("gain", rc.sim.motor.gain);
    rc.sim.motor.time_constant = sec->get_double("time_constant", rc.sim.motor.time_constant);
    rc.sim.motor.cpr = sec->get_int("cpr", rc.sim.motor.cpr);
    rc.sim.motor.duty_limit = sec->get_double("duty_limit", rc.sim.motor.duty_limit);
  }
  if (const auto* sec = doc.find("pid")) {
    sec->require_known({"kp", "ki", "kd", "kff"});
    rc.sim.pid.kp = sec->get_double("kp", rc.sim.pid.kp);
    rc.sim.pid.ki = sec->get_double("ki", rc.sim.pid.ki);
    rc.sim.pid.kd = sec->get_double("kd", rc.sim.pid.kd);
    rc.sim.pid.kff = sec->get_double("kff", rc.sim.pid.kff);
  }
  if (const auto* sec = doc.find("limits")) {
    sec->require_known({"v_max", "omega_max"});
    rc.sim.limits.v_max = sec->get_double("v_max", rc.sim.limits.v_max);
    rc.sim.limits.omega_max = sec->get_double("omega_max", rc.sim.limits.omega_max);
  }
  if (const auto* sec = doc.find("clock")) {
    sec->require_known({"physics_dt", "control_dt", "perception_dt"});
    rc.sim.clock.physics_dt = sec->get_double("physics_dt", rc.sim.clock.physics_dt);
    rc.sim.clock.control_dt = sec->get_double("control_dt", rc.sim.clock.control_dt);
    rc.sim.clock.perception_dt = sec->get_double("perception_dt", rc.sim.clock.perception_dt);
  }
  rc.sim.decision.perception_dt = rc.sim.clock.perception_dt;
  if (const auto* sec = doc.find("evaluate")) {
    sec->require_known({"flip_grid"});
    rc.flip_grid = sec->get_numbers("flip_grid");
  }
  if (const auto* sec = doc.find("render")) {
    sec->require_known({"poses"});
    for (const auto& t : sec->get_tuples("poses")) {
      if (t.size() != 3) throw ConfigError("[render] poses: entries are 'x y theta_deg'");
      rc.render_poses.push_back({t[0], t[1], normalize_angle(t[2] * std::numbers::pi / 180.0)});
    }
  }
  return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  const IniDocument doc = IniDocument::load(path);
  try {
    return parse_run_config(doc, path);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline std::shared_ptr<InferenceBackend> make_backend(const RunConfig& rc) {
  switch (rc.backend) {
    case BackendKind::Oracle: return std::make_shared<OracleBackend>(rc.scenario);
    case BackendKind::Noisy:
      return std::make_shared<NoisyBackend>(std::make_shared<OracleBackend>(rc.scenario), rc.flip_prob, rc.seed);
    case BackendKind::Replay: return std::make_shared<ReplayBackend>(*rc.replay_dir);
  }
  return nullptr;
}

/// Camera frames of the clean (oracle) episode; the default frame set for
/// render, evaluate and bench.
inline std::vector<CameraFrame> oracle_episode_frames(const RunConfig& rc) {
  OracleBackend oracle(rc.scenario);
  SimConfig cfg = rc.sim;
  cfg.mode = LoopMode::SingleThread;
  cfg.frame_dump_dir.reset();
  return run_closed_loop(rc.scenario, oracle, cfg).camera_frames;
}

}  // namespace avsim
