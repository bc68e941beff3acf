#pragma once

// Frame pipeline: an inference backend produces raw per-branch logits plus
// decoded boxes, and postprocess() turns them into class masks and a sorted,
// thresholded detection list.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "avsim/geometry.hpp"
#include "avsim/mask_io.hpp"

namespace avsim {

class ShapeMismatch : public std::runtime_error {
 public:
  explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

class MissingFrame : public std::runtime_error {
 public:
  explicit MissingFrame(const std::string& what) : std::runtime_error(what) {}
};

/// Per-pixel class scores, row-major with channels innermost.
struct LogitVolume {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  LogitVolume() = default;
  LogitVolume(int w, int h, int c) : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, 0.0f) {}

  float& at(int col, int row, int ch) { return data[(static_cast<std::size_t>(row) * width + col) * channels + ch]; }
  float at(int col, int row, int ch) const { return data[(static_cast<std::size_t>(row) * width + col) * channels + ch]; }

  friend bool operator==(const LogitVolume&, const LogitVolume&) = default;
};

struct RawOutputs {
  LogitVolume object_logits;    // 6 channels
  LogitVolume drivable_logits;  // 2 channels
  LogitVolume lane_logits;      // 2 channels
  std::vector<BoundingBox> detections;

  friend bool operator==(const RawOutputs&, const RawOutputs&) = default;
};

struct PerceptionFrame {
  ImageGrid object_mask{kImageWidth, kImageHeight, kObjectClassCount};
  ImageGrid drivable_mask{kImageWidth, kImageHeight, kDrivableClassCount};
  ImageGrid lane_mask{kImageWidth, kImageHeight, kLaneClassCount};
  std::vector<BoundingBox> detections;  // detection_order
  double timestamp = 0.0;

  friend bool operator==(const PerceptionFrame&, const PerceptionFrame&) = default;
};

/// The "image" handed to a backend. Simulation backends render from the pose
/// and time; replay backends use the index.
struct CameraFrame {
  std::size_t index = 0;
  double timestamp = 0.0;
  Pose2D pose;
};

class InferenceBackend {
 public:
  virtual ~InferenceBackend() = default;
  virtual RawOutputs infer(const CameraFrame& frame) = 0;
  virtual std::string name() const = 0;
};

/// Argmax over channels; ties go to the lowest class index.
inline ImageGrid argmax_mask(const LogitVolume& v) {
  ImageGrid grid(v.width, v.height, v.channels);
  auto& out = grid.mutable_data();
  const float* p = v.data.data();
  for (std::size_t i = 0; i < out.size(); ++i, p += v.channels) {
    int best = 0;
    for (int c = 1; c < v.channels; ++c)
      if (p[c] > p[best]) best = c;
    out[i] = static_cast<std::uint8_t>(best);
  }
  return grid;
}

inline LogitVolume lift_one_hot(const ImageGrid& mask) {
  LogitVolume v(mask.width(), mask.height(), mask.class_count());
  const auto& d = mask.data();
  for (std::size_t i = 0; i < d.size(); ++i) v.data[i * v.channels + d[i]] = 1.0f;
  return v;
}

inline RawOutputs lift_frame(const PerceptionFrame& f) {
  return {lift_one_hot(f.object_mask), lift_one_hot(f.drivable_mask), lift_one_hot(f.lane_mask),
          f.detections};
}

struct ImageSize {
  int width = kImageWidth;
  int height = kImageHeight;
};

inline PerceptionFrame postprocess(const RawOutputs& raw, double score_threshold = 0.5,
                                   ImageSize expected = {}, double timestamp = 0.0) {
  auto check = [&](const LogitVolume& v, int channels, const char* branch) {
    if (v.width != expected.width || v.height != expected.height || v.channels != channels ||
        v.data.size() != static_cast<std::size_t>(v.width) * v.height * v.channels)
      throw ShapeMismatch(fmt::format("{} logits are {}x{}x{}, expected {}x{}x{}", branch, v.width,
                                      v.height, v.channels, expected.width, expected.height, channels));
  };
  check(raw.object_logits, kObjectClassCount, "object");
  check(raw.drivable_logits, kDrivableClassCount, "drivable");
  check(raw.lane_logits, kLaneClassCount, "lane");

  PerceptionFrame f;
  f.object_mask = argmax_mask(raw.object_logits);
  f.drivable_mask = argmax_mask(raw.drivable_logits);
  f.lane_mask = argmax_mask(raw.lane_logits);
  f.timestamp = timestamp;
  for (const auto& b : raw.detections)
    if (b.score >= score_threshold) f.detections.push_back(b);
  std::sort(f.detections.begin(), f.detections.end(), detection_order);
  return f;
}

/// Wraps a backend and degrades its output: each pixel's argmax class is
/// replaced by a uniformly chosen other class with probability `flip_prob`,
/// and box corners are jittered by rounded Gaussian noise. Randomness is
/// derived from (seed, frame index), so output depends only on the frame.
class NoisyBackend : public InferenceBackend {
 public:
  NoisyBackend(std::shared_ptr<InferenceBackend> inner, double flip_prob, std::uint64_t seed,
               double jitter_sigma = 2.0)
      : inner_(std::move(inner)), p_(flip_prob), seed_(seed), sigma_(jitter_sigma) {
    if (!inner_) throw std::invalid_argument("NoisyBackend: null inner backend");
    if (!(flip_prob >= 0.0 && flip_prob < 0.5)) throw std::invalid_argument("NoisyBackend: flip probability must be in [0, 0.5)");
  }

  RawOutputs infer(const CameraFrame& frame) override {
    RawOutputs raw = inner_->infer(frame);
    if (p_ == 0.0) return raw;
    std::mt19937_64 rng(seed_ * 0x9E3779B97F4A7C15ULL + frame.index * 0xBF58476D1CE4E5B9ULL + 1);
    degrade(raw.object_logits, rng);
    degrade(raw.drivable_logits, rng);
    degrade(raw.lane_logits, rng);
    std::normal_distribution<double> jitter(0.0, sigma_);
    const int w = raw.object_logits.width, h = raw.object_logits.height;
    for (auto& b : raw.detections) {
      auto shift = [&](int v, int hi) { return std::clamp(v + static_cast<int>(std::lround(jitter(rng))), 0, hi); };
      b.x_min = shift(b.x_min, w - 1);
      b.y_min = shift(b.y_min, h - 1);
      b.x_max = std::max(shift(b.x_max, w), b.x_min + 1);
      b.y_max = std::max(shift(b.y_max, h), b.y_min + 1);
    }
    return raw;
  }

  std::string name() const override { return fmt::format("noisy(p={},seed={})", p_, seed_); }

 private:
  void degrade(LogitVolume& v, std::mt19937_64& rng) const {
    ImageGrid mask = argmax_mask(v);
    auto& d = mask.mutable_data();
    std::geometric_distribution<std::size_t> gap(p_);
    std::uniform_int_distribution<int> other(1, v.channels - 1);
    for (std::size_t i = gap(rng); i < d.size(); i += gap(rng) + 1)
      d[i] = static_cast<std::uint8_t>((d[i] + other(rng)) % v.channels);
    v = lift_one_hot(mask);
  }

  std::shared_ptr<InferenceBackend> inner_;
  double p_;
  std::uint64_t seed_;
  double sigma_;
};

// Replay directory layout: NNNNNN.obj.pgm, NNNNNN.drv.pgm, NNNNNN.lane.pgm,
// NNNNNN.det.csv with a zero-padded six digit frame index.

inline std::filesystem::path frame_file(const std::filesystem::path& dir, std::size_t index, const char* suffix) {
  return dir / fmt::format("{:06d}.{}", index, suffix);
}

inline void write_frame(const std::filesystem::path& dir, std::size_t index, const PerceptionFrame& f) {
  std::filesystem::create_directories(dir);
  write_pgm(frame_file(dir, index, "obj.pgm"), f.object_mask);
  write_pgm(frame_file(dir, index, "drv.pgm"), f.drivable_mask);
  write_pgm(frame_file(dir, index, "lane.pgm"), f.lane_mask);
  write_file(frame_file(dir, index, "det.csv"), encode_detections(f.detections));
}

inline bool frame_exists(const std::filesystem::path& dir, std::size_t index) {
  return std::filesystem::exists(frame_file(dir, index, "obj.pgm"));
}

/// Loads frame `index`. Throws MissingFrame when the frame's object mask is
/// absent and FormatError when any other file of the quadruple is missing or bad.
inline PerceptionFrame read_frame(const std::filesystem::path& dir, std::size_t index) {
  if (!frame_exists(dir, index))
    throw MissingFrame(fmt::format("missing frame {:06d} in {}", index, dir.string()));
  PerceptionFrame f;
  f.object_mask = read_pgm(frame_file(dir, index, "obj.pgm"), kObjectClassCount);
  f.drivable_mask = read_pgm(frame_file(dir, index, "drv.pgm"), kDrivableClassCount);
  f.lane_mask = read_pgm(frame_file(dir, index, "lane.pgm"), kLaneClassCount);
  const auto det = frame_file(dir, index, "det.csv");
  if (!std::filesystem::exists(det)) throw FormatError("missing file " + det.string());
  f.detections = decode_detections(read_file(det), det.string());
  std::sort(f.detections.begin(), f.detections.end(), detection_order);
  return f;
}

inline std::size_t count_frames(const std::filesystem::path& dir) {
  std::size_t n = 0;
  while (frame_exists(dir, n)) ++n;
  return n;
}

class ReplayBackend : public InferenceBackend {
 public:
  explicit ReplayBackend(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_)) throw FormatError("replay directory not found: " + dir_.string());
  }

  RawOutputs infer(const CameraFrame& frame) override { return lift_frame(read_frame(dir_, frame.index)); }

  std::string name() const override { return "replay(" + dir_.string() + ")"; }

 private:
  std::filesystem::path dir_;
};

}  // namespace avsim
