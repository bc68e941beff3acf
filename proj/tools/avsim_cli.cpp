// avsim: simulate, evaluate, bench and render from the command line.
// Exit codes: 0 success, 2 collision during simulate, 1 usage or IO error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "avsim/bench.hpp"
#include "avsim/metrics.hpp"
#include "avsim/run_config.hpp"

namespace fs = std::filesystem;
using namespace avsim;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> backend;
  std::optional<double> flip_prob;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* c = cmd->add_option("--config", f.config, "run/scenario config file")->check(CLI::ExistingFile);
  if (config_required) c->required();
  cmd->add_option("--seed", f.seed, "seed for the noisy backend");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--backend", f.backend, "inference backend")->check(CLI::IsMember({"oracle", "noisy", "replay"}));
  cmd->add_option("--flip-prob", f.flip_prob, "per-pixel flip probability for the noisy backend")
      ->check(CLI::Range(0.0, 0.4999999));
}

RunConfig load(const CommonFlags& f) {
  RunConfig rc = load_run_config(f.config);
  if (f.seed) rc.seed = *f.seed;
  if (f.out) rc.out_dir = *f.out;
  if (f.backend) rc.backend = parse_backend_kind(*f.backend);
  if (f.flip_prob) {
    rc.flip_prob = *f.flip_prob;
    if (!f.backend && rc.flip_prob > 0.0) rc.backend = BackendKind::Noisy;
  }
  rc.validate();
  return rc;
}

int cmd_simulate(const CommonFlags& f, const std::optional<std::string>& mode, bool dump_frames) {
  RunConfig rc = load(f);
  if (mode) rc.sim.mode = *mode == "two_task" ? LoopMode::TwoTask : LoopMode::SingleThread;
  if (dump_frames) rc.sim.frame_dump_dir = rc.out_dir / "frames";
  auto backend = make_backend(rc);
  const EpisodeLog log = run_closed_loop(rc.scenario, *backend, rc.sim);
  log.write(rc.out_dir);

  std::map<std::string, int> modes;
  for (const auto& d : log.decisions) ++modes[mode_name(d.decision)];
  fmt::print("scenario {} backend {} duration {:.1f} s\n", rc.scenario.name, backend->name(), rc.scenario.duration);
  for (const auto& [name, n] : modes) fmt::print("  {:<18} {:>5} decisions\n", name, n);
  for (const auto& e : log.events) fmt::print("  event t={:.3f} {} {}\n", e.t, e.kind, e.detail);
  fmt::print("final pose x={:.4f} y={:.4f} theta={:.4f}\nlogs written to {}\n", log.final_pose.x, log.final_pose.y,
             log.final_pose.theta, rc.out_dir.string());
  return log.collisions() > 0 ? 2 : 0;
}

int cmd_evaluate(const CommonFlags& f, const std::optional<std::string>& pred, const std::optional<std::string>& gt) {
  if (pred || gt) {
    if (!pred || !gt) throw CLI::ValidationError("--pred and --gt go together");
    const fs::path out = f.out.value_or("out");
    const std::size_t n = count_frames(*gt);
    if (n == 0) throw MissingFrame(fmt::format("missing frame {:06d} in {}", 0, *gt));
    std::vector<PerceptionFrame> pf, gf;
    for (std::size_t i = 0; i < n; ++i) {
      gf.push_back(read_frame(*gt, i));
      pf.push_back(read_frame(*pred, i));
    }
    const std::vector<EvalRow> rows{evaluate_frames(fs::path(*pred).filename().string(), pf, gf)};
    const std::string table = format_report(rows);
    fs::create_directories(out);
    write_file(out / "report.txt", table);
    write_file(out / "report.csv", format_report_csv(rows));
    fmt::print("{}", table);
    return 0;
  }
  if (f.config.empty()) throw CLI::ValidationError("evaluate needs --pred/--gt or --config");
  RunConfig rc = load(f);
  std::vector<double> grid = rc.flip_grid;
  if (f.flip_prob) grid = {0.0, *f.flip_prob};
  const auto cams = oracle_episode_frames(rc);
  const auto rows = degradation_experiment(std::make_shared<OracleBackend>(rc.scenario), grid, cams, rc.seed);
  std::vector<EvalRow> measured;
  for (const auto& r : rows) measured.push_back(r.measured);
  const std::string table = format_report(measured) + "\n" + format_degradation_table(rows);
  fs::create_directories(rc.out_dir);
  write_file(rc.out_dir / "report.txt", table);
  write_file(rc.out_dir / "report.csv", format_report_csv(measured));
  fmt::print("{} frames from scenario {}\n{}", cams.size(), rc.scenario.name, table);
  return 0;
}

int cmd_bench(const CommonFlags& f, std::optional<int> iterations) {
  RunConfig rc = load(f);
  if (iterations) rc.iterations = *iterations;
  auto backend = make_backend(rc);
  auto cams = oracle_episode_frames(rc);
  const LatencyReport rep = run_bench(*backend, cams, rc.iterations, rc.sim.decision, rc.sim.score_threshold);
  fs::create_directories(rc.out_dir);
  const std::string text = format_latency_report(rep);
  write_file(rc.out_dir / "bench.txt", text);
  write_file(rc.out_dir / "bench.csv", format_latency_csv(rep));
  fmt::print("{}", text);
  return 0;
}

int cmd_render(const CommonFlags& f) {
  RunConfig rc = load(f);
  std::vector<CameraFrame> cams;
  if (rc.render_poses.empty()) cams = oracle_episode_frames(rc);
  else
    for (std::size_t i = 0; i < rc.render_poses.size(); ++i) cams.push_back({i, 0.0, rc.render_poses[i]});
  auto backend = make_backend(rc);
  for (const auto& c : cams)
    write_frame(rc.out_dir, c.index, postprocess(backend->infer(c), rc.sim.score_threshold, {kImageWidth, kImageHeight}, c.timestamp));
  fmt::print("rendered {} frames to {}\n", cams.size(), rc.out_dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop mecanum vehicle simulator, evaluator and latency bench"};
  app.require_subcommand(1);

  CommonFlags sim_f, eval_f, bench_f, render_f;
  std::optional<std::string> mode, pred, gt;
  std::optional<int> iterations;
  bool dump_frames = false;

  auto* sim = app.add_subcommand("simulate", "run one closed-loop episode and write its logs");
  add_common(sim, sim_f, true);
  sim->add_option("--mode", mode, "loop mode")->check(CLI::IsMember({"single", "two_task"}));
  sim->add_flag("--dump-frames", dump_frames, "write every perception frame under <out>/frames");

  auto* eval = app.add_subcommand("evaluate", "score a prediction dump, or run the flip-noise study on a scenario");
  add_common(eval, eval_f, false);
  eval->add_option("--pred", pred, "predicted frame directory")->check(CLI::ExistingDirectory);
  eval->add_option("--gt", gt, "ground-truth frame directory")->check(CLI::ExistingDirectory);

  auto* bench = app.add_subcommand("bench", "time the perception pipeline stages");
  add_common(bench, bench_f, true);
  bench->add_option("--iterations", iterations, "timed iterations (at least 30)")->check(CLI::Range(kBenchMinIterations, 1 << 30));

  auto* render = app.add_subcommand("render", "write frames in the replay layout");
  add_common(render, render_f, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) return cmd_simulate(sim_f, mode, dump_frames);
    if (*eval) return cmd_evaluate(eval_f, pred, gt);
    if (*bench) return cmd_bench(bench_f, iterations);
    if (*render) return cmd_render(render_f);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
