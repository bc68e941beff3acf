#pragma once

// Per-stage latency of one perception iteration: infer, postprocess, decide,
// serialize. Timed with steady_clock over warm iterations.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "avsim/decision.hpp"
#include "avsim/perception.hpp"
#include "avsim/wire.hpp"

namespace avsim {

inline constexpr int kBenchWarmup = 5;
inline constexpr int kBenchMinIterations = 30;
inline constexpr std::array<const char*, 4> kBenchStages{"render/infer", "postprocess", "decide", "serialize"};

struct StageStats {
  std::string name;
  double mean = 0.0;  // s
  double p50 = 0.0;
  double p95 = 0.0;
};

struct LatencyReport {
  std::string backend;
  int iterations = 0;  // timed, after warm-up
  std::vector<StageStats> stages;
  StageStats execution;  // whole iteration
  double throughput = 0.0;  // fps = 1 / execution.mean

  double stage_mean_sum() const {
    double s = 0.0;
    for (const auto& st : stages) s += st.mean;
    return s;
  }
};

/// Nearest-rank percentile of an unsorted sample, q in (0, 1].
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

inline StageStats stage_stats(std::string name, const std::vector<double>& samples) {
  StageStats s;
  s.name = std::move(name);
  if (samples.empty()) return s;
  double sum = 0.0;
  for (double x : samples) sum += x;
  s.mean = sum / static_cast<double>(samples.size());
  s.p50 = percentile(samples, 0.50);
  s.p95 = percentile(samples, 0.95);
  return s;
}

/// Times `iterations` passes of the perception pipeline after kBenchWarmup
/// untimed ones. Frame i is cams[i % cams.size()].
inline LatencyReport run_bench(InferenceBackend& backend, const std::vector<CameraFrame>& cams, int iterations,
                               const DecisionConfig& decision = {}, double score_threshold = 0.5) {
  if (iterations < kBenchMinIterations)
    throw std::invalid_argument(fmt::format("bench needs at least {} iterations, got {}", kBenchMinIterations, iterations));
  if (cams.empty()) throw std::invalid_argument("bench needs at least one camera frame");
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::duration d) { return std::chrono::duration<double>(d).count(); };

  std::array<std::vector<double>, kBenchStages.size()> samples;
  std::vector<double> total;
  DriveDecision prev;
  StreamFramer framer;
  CommandMailbox mailbox;
  for (int i = 0; i < kBenchWarmup + iterations; ++i) {
    const CameraFrame& cam = cams[static_cast<std::size_t>(i) % cams.size()];
    const auto t0 = clock::now();
    const RawOutputs raw = backend.infer(cam);
    const auto t1 = clock::now();
    const PerceptionFrame frame = postprocess(raw, score_threshold, {kImageWidth, kImageHeight}, cam.timestamp);
    const auto t2 = clock::now();
    prev = decide(frame, prev, decision);
    const auto t3 = clock::now();
    for (const auto& r : framer.feed(serialize(prev.command)))
      if (const Twist* t = std::get_if<Twist>(&r)) mailbox.commit(*t);
    const auto t4 = clock::now();
    if (i < kBenchWarmup) continue;
    samples[0].push_back(seconds(t1 - t0));
    samples[1].push_back(seconds(t2 - t1));
    samples[2].push_back(seconds(t3 - t2));
    samples[3].push_back(seconds(t4 - t3));
    total.push_back(seconds(t4 - t0));
  }

  LatencyReport rep;
  rep.backend = backend.name();
  rep.iterations = iterations;
  for (std::size_t s = 0; s < kBenchStages.size(); ++s) rep.stages.push_back(stage_stats(kBenchStages[s], samples[s]));
  rep.execution = stage_stats("execution", total);
  rep.throughput = rep.execution.mean > 0.0 ? 1.0 / rep.execution.mean : 0.0;
  return rep;
}

struct PlatformReference {
  const char* platform;
  double power_w, fps, execution_s, inference_s;
};

/// Published figures for the FPGA board, printed for context only.
inline constexpr PlatformReference kReferenceBoard{"Kria KV260", 5.0, 4.85, 0.206, 0.073};

inline std::string format_latency_report(const LatencyReport& r) {
  std::string s = fmt::format("Per-stage latency, backend {}, {} timed iterations ({} warm-up discarded)\n", r.backend,
                              r.iterations, kBenchWarmup);
  s += fmt::format("{:<14} {:>12} {:>12} {:>12}\n", "stage", "mean [s]", "p50 [s]", "p95 [s]");
  for (const auto& st : r.stages) s += fmt::format("{:<14} {:>12.6f} {:>12.6f} {:>12.6f}\n", st.name, st.mean, st.p50, st.p95);
  s += fmt::format("{:<14} {:>12.6f} {:>12.6f} {:>12.6f}\n\n", "execution", r.execution.mean, r.execution.p50, r.execution.p95);

  const std::string here = "this host (" + r.backend + ")";
  const std::string ref = std::string(kReferenceBoard.platform) + " (paper reference — not reproduced)";
  const std::size_t w = std::max(here.size(), ref.size());
  s += fmt::format("{:<{}} | {:>9} | {:>11} | {:>18} | {:>24}\n", "Platform", w, "Power [W]", "Speed [fps]",
                   "Execution time [s]", "Model Inference time [s]");
  s += fmt::format("{:<{}} | {:>9} | {:>11.2f} | {:>18.6f} | {:>24.6f}\n", here, w, "n/a", r.throughput, r.execution.mean,
                   r.stages[0].mean);
  s += fmt::format("{:<{}} | {:>9.0f} | {:>11.2f} | {:>18.3f} | {:>24.3f}\n", ref, w, kReferenceBoard.power_w, kReferenceBoard.fps,
                   kReferenceBoard.execution_s, kReferenceBoard.inference_s);
  return s;
}

inline std::string format_latency_csv(const LatencyReport& r) {
  std::string s = "stage,mean_s,p50_s,p95_s\n";
  for (const auto& st : r.stages) s += fmt::format("{},{:.9f},{:.9f},{:.9f}\n", st.name, st.mean, st.p50, st.p95);
  s += fmt::format("execution,{:.9f},{:.9f},{:.9f}\n", r.execution.mean, r.execution.p50, r.execution.p95);
  s += fmt::format("throughput_fps,{:.9f},,\n", r.throughput);
  return s;
}

}  // namespace avsim
