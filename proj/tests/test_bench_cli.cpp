#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "avsim/bench.hpp"
#include "avsim/oracle_backend.hpp"
#include "avsim/run_config.hpp"

using namespace avsim;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = AVSIM_FIXTURES;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("avsim_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

// Exit status of the CLI; stdout and stderr go to `log`.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(AVSIM_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::vector<CameraFrame> a_few_frames() {
  std::vector<CameraFrame> cams;
  for (std::size_t i = 0; i < 4; ++i) cams.push_back({i, 0.2 * i, {0.05 * i, 0.0, 0.0}});
  return cams;
}

}  // namespace

TEST(Bench, ThroughputIsInverseMeanAndStagesAreComplete) {
  const Scenario s = load_scenario(kFixtures + "/pedestrian.ini");
  OracleBackend be(s);
  const LatencyReport r = run_bench(be, a_few_frames(), 30);
  EXPECT_EQ(r.iterations, 30);
  ASSERT_EQ(r.stages.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.stages[i].name, kBenchStages[i]);
  EXPECT_NEAR(r.throughput * r.execution.mean, 1.0, 1e-9);
  for (const auto& st : r.stages) {
    EXPECT_GE(st.mean, 0.0);
    EXPECT_LE(st.p50, st.p95);
  }
  EXPECT_LE(r.stage_mean_sum(), r.execution.mean * 1.1);
}

TEST(Bench, TooFewIterationsRejected) {
  OracleBackend be(Scenario{});
  EXPECT_THROW(run_bench(be, a_few_frames(), 29), std::invalid_argument);
  EXPECT_THROW(run_bench(be, {}, 30), std::invalid_argument);
}

TEST(Bench, PercentileIsNearestRank) {
  EXPECT_EQ(percentile({5, 1, 4, 2, 3}, 0.5), 3.0);
  EXPECT_EQ(percentile({5, 1, 4, 2, 3}, 0.95), 5.0);
  EXPECT_EQ(percentile({7}, 0.5), 7.0);
}

TEST(Bench, ReportLabelsTheReferenceRow) {
  LatencyReport r;
  r.backend = "oracle";
  r.iterations = 30;
  for (const char* n : kBenchStages) r.stages.push_back({n, 0.001, 0.001, 0.002});
  r.execution = {"execution", 0.004, 0.004, 0.005};
  r.throughput = 250.0;
  const std::string t = format_latency_report(r);
  EXPECT_NE(t.find("paper reference — not reproduced"), std::string::npos);
  EXPECT_NE(t.find("Execution time [s]"), std::string::npos);
  EXPECT_NE(t.find("250.00"), std::string::npos);
  const std::string csv = format_latency_csv(r);
  EXPECT_NE(csv.find("throughput_fps,250.000000000"), std::string::npos);
}

TEST(RunConfig, OverridesAndScenarioReference) {
  const fs::path dir = scratch_dir("cfg");
  spit(dir / "run.ini", "[run]\nscenario = " + kFixtures + "/straight.ini\nbackend = noisy\nflip_prob = 0.02\nseed = 9\n"
                        "mode = two_task\nduration = 2\n[pid]\nkp = 0.1\n[decision]\ncruise_speed = 0.15\n");
  const RunConfig rc = load_run_config(dir / "run.ini");
  EXPECT_EQ(rc.backend, BackendKind::Noisy);
  EXPECT_EQ(rc.flip_prob, 0.02);
  EXPECT_EQ(rc.seed, 9u);
  EXPECT_EQ(rc.sim.mode, LoopMode::TwoTask);
  EXPECT_EQ(rc.scenario.duration, 2.0);
  EXPECT_EQ(rc.scenario.name, "straight");
  EXPECT_EQ(rc.sim.pid.kp, 0.1);
  EXPECT_EQ(rc.sim.decision.cruise_speed, 0.15);
  EXPECT_NO_THROW(rc.validate());
  fs::remove_all(dir);
}

TEST(RunConfig, ErrorsAreReported) {
  const fs::path dir = scratch_dir("cfg_bad");
  auto bad = [&](const std::string& text) {
    spit(dir / "bad.ini", text);
    return [&] {
      RunConfig rc = load_run_config(dir / "bad.ini");
      rc.validate();
    };
  };
  EXPECT_THROW(bad("[nonsense]\n")(), ConfigError);
  EXPECT_THROW(bad("[run]\nbackend = gpu\n")(), ConfigError);
  EXPECT_THROW(bad("[run]\nmode = three\n")(), ConfigError);
  EXPECT_THROW(bad("[run]\nflip_prob = 0.7\n")(), ConfigError);
  EXPECT_THROW(bad("[run]\nbackend = replay\n")(), ConfigError);
  EXPECT_THROW(bad("[pid]\nkp = -1\n")(), ConfigError);
  EXPECT_THROW(bad("[pid]\nkq = 1\n")(), ConfigError);
  fs::remove_all(dir);
}

TEST(Cli, SimulateExitCodes) {
  const fs::path dir = scratch_dir("simulate");
  EXPECT_EQ(run_cli("simulate --config " + kFixtures + "/straight.ini --out " + (dir / "s").string(), dir / "log"), 0)
      << slurp(dir / "log");
  for (const char* f : {"trace.csv", "decisions.csv", "events.csv", "wire.txt", "telemetry.csv"})
    EXPECT_TRUE(fs::exists(dir / "s" / f)) << f;
  EXPECT_EQ(run_cli("simulate --config " + kFixtures + "/pedestrian.ini --out " + (dir / "p").string(), dir / "log"), 0)
      << slurp(dir / "log");
  EXPECT_EQ(run_cli("simulate --config " + kFixtures + "/pedestrian_blind.ini --out " + (dir / "b").string(), dir / "log"), 2)
      << slurp(dir / "log");
  spit(dir / "bad.ini", "[run]\nbackend = gpu\n");
  EXPECT_EQ(run_cli("simulate --config " + (dir / "bad.ini").string(), dir / "log"), 1);
  EXPECT_NE(slurp(dir / "log").find("backend"), std::string::npos);
  EXPECT_EQ(run_cli("simulate --config /nonexistent.ini", dir / "log"), 1);
  EXPECT_EQ(run_cli("frobnicate", dir / "log"), 1);
  fs::remove_all(dir);
}

TEST(Cli, SimulateModesWriteIdenticalLogs) {
  const fs::path dir = scratch_dir("modes");
  const std::string cfg = "simulate --config " + kFixtures + "/obstacle.ini --out ";
  ASSERT_EQ(run_cli(cfg + (dir / "a").string() + " --mode single", dir / "log"), 0);
  ASSERT_EQ(run_cli(cfg + (dir / "b").string() + " --mode two_task", dir / "log"), 0);
  for (const char* f : {"trace.csv", "decisions.csv", "events.csv", "wire.txt", "telemetry.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  fs::remove_all(dir);
}

TEST(Cli, RenderPosesThenReplayIsIdentical) {
  const fs::path dir = scratch_dir("render");
  spit(dir / "render.ini", "[run]\nscenario = " + kFixtures + "/pedestrian.ini\n[render]\nposes = 0 0 0; 0.1 0 0; 0.2 0.02 5\n");
  ASSERT_EQ(run_cli("render --config " + (dir / "render.ini").string() + " --out " + (dir / "gt").string(), dir / "log"), 0)
      << slurp(dir / "log");
  EXPECT_EQ(count_frames(dir / "gt"), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    for (const char* f : {"obj.pgm", "drv.pgm", "lane.pgm", "det.csv"})
      EXPECT_TRUE(fs::exists(frame_file(dir / "gt", i, f))) << i << " " << f;

  spit(dir / "replay.ini", "[run]\nscenario = " + kFixtures + "/pedestrian.ini\nbackend = replay\nreplay_dir = " +
                               (dir / "gt").string() + "\n[render]\nposes = 0 0 0; 0.1 0 0; 0.2 0.02 5\n");
  ASSERT_EQ(run_cli("render --config " + (dir / "replay.ini").string() + " --out " + (dir / "re").string(), dir / "log"), 0)
      << slurp(dir / "log");
  for (std::size_t i = 0; i < 3; ++i)
    for (const char* f : {"obj.pgm", "drv.pgm", "lane.pgm", "det.csv"})
      EXPECT_EQ(slurp(frame_file(dir / "gt", i, f)), slurp(frame_file(dir / "re", i, f))) << i << " " << f;

  // A complete dump scores perfectly against itself.
  ASSERT_EQ(run_cli("evaluate --pred " + (dir / "re").string() + " --gt " + (dir / "gt").string() + " --out " +
                        (dir / "ev").string(),
                    dir / "log"),
            0)
      << slurp(dir / "log");
  EXPECT_NE(slurp(dir / "ev" / "report.csv").find("1.000000,1.000000,1.000000"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, EvaluateWithEmptyPredictionNamesMissingFrame) {
  const fs::path dir = scratch_dir("evaluate");
  write_frame(dir / "gt", 0, PerceptionFrame{});
  fs::create_directories(dir / "pred");
  EXPECT_EQ(run_cli("evaluate --pred " + (dir / "pred").string() + " --gt " + (dir / "gt").string(), dir / "log"), 1);
  const std::string log = slurp(dir / "log");
  EXPECT_NE(log.find("000000"), std::string::npos) << log;
  EXPECT_NE(log.find((dir / "pred").string()), std::string::npos) << log;
  fs::remove_all(dir);
}

TEST(Cli, EvaluateFlipStudyWritesReport) {
  const fs::path dir = scratch_dir("flip");
  spit(dir / "run.ini", "[run]\nscenario = " + kFixtures + "/straight.ini\nduration = 2\n");
  ASSERT_EQ(run_cli("evaluate --config " + (dir / "run.ini").string() + " --flip-prob 0.01 --seed 3 --out " +
                        (dir / "o").string(),
                    dir / "log"),
            0)
      << slurp(dir / "log");
  const std::string report = slurp(dir / "o" / "report.txt");
  EXPECT_NE(report.find("Flip-noise degradation"), std::string::npos);
  EXPECT_NE(report.find("0.010"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, BenchWritesTextAndCsv) {
  const fs::path dir = scratch_dir("bench");
  spit(dir / "run.ini", "[run]\nscenario = " + kFixtures + "/straight.ini\nduration = 2\n");
  ASSERT_EQ(run_cli("bench --config " + (dir / "run.ini").string() + " --iterations 30 --out " + (dir / "o").string(),
                    dir / "log"),
            0)
      << slurp(dir / "log");
  EXPECT_NE(slurp(dir / "o" / "bench.txt").find("not reproduced"), std::string::npos);
  EXPECT_NE(slurp(dir / "o" / "bench.csv").find("throughput_fps"), std::string::npos);
  EXPECT_EQ(run_cli("bench --config " + (dir / "run.ini").string() + " --iterations 5", dir / "log"), 1);
  fs::remove_all(dir);
}
