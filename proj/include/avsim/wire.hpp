#pragma once

// Command link from the perception computer to the motor microcontroller.
//
// Frame: "<vx>,<vy>,<omega>\n", each field printed with exactly three decimals
// (m/s, m/s, rad/s), rounded half away from zero, no spaces. Parsers accept
// surrounding whitespace and a CR before the LF.

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "avsim/geometry.hpp"

namespace avsim {

struct MalformedFrame {
  std::string reason;
  friend bool operator==(const MalformedFrame&, const MalformedFrame&) = default;
};

using FrameResult = std::variant<Twist, MalformedFrame>;

inline constexpr std::size_t kMaxFrameBytes = 64;

namespace detail {

// Rounds the shortest round-trip decimal form of `v` to three decimals, half
// away from zero. Working on the decimal digits keeps 0.0015 -> 0.002 even
// though the nearest double lies just below 0.0015.
inline void append_fixed3(std::string& out, double v) {
  char buf[400];
  auto res = std::to_chars(buf, buf + sizeof buf, std::abs(v), std::chars_format::fixed);
  std::string_view digits(buf, static_cast<std::size_t>(res.ptr - buf));
  const std::size_t dot = digits.find('.');
  std::string int_part(digits.substr(0, dot));
  std::string frac = dot == std::string_view::npos ? std::string{} : std::string(digits.substr(dot + 1));
  const bool round_up = frac.size() > 3 && frac[3] >= '5';
  frac.resize(3, '0');

  std::string mag = int_part + frac;  // scaled by 1000
  if (round_up) {
    int i = static_cast<int>(mag.size()) - 1;
    for (; i >= 0; --i) {
      if (mag[i] == '9') {
        mag[i] = '0';
      } else {
        ++mag[i];
        break;
      }
    }
    if (i < 0) mag.insert(mag.begin(), '1');
  }
  const bool zero = mag.find_first_not_of('0') == std::string::npos;
  if (std::signbit(v) && !zero) out += '-';
  out.append(mag, 0, mag.size() - 3);
  out += '.';
  out.append(mag, mag.size() - 3, 3);
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

}  // namespace detail

inline std::string serialize(const Twist& t) {
  std::string out;
  out.reserve(24);
  detail::append_fixed3(out, t.vx);
  out += ',';
  detail::append_fixed3(out, t.vy);
  out += ',';
  detail::append_fixed3(out, t.omega);
  out += '\n';
  return out;
}

/// Parses one frame. Leading/trailing whitespace (including CR and the LF
/// terminator) is ignored; everything between must be three comma-separated
/// finite decimal numbers.
inline FrameResult parse(std::string_view bytes) {
  while (!bytes.empty() && detail::is_space(bytes.front())) bytes.remove_prefix(1);
  while (!bytes.empty() && detail::is_space(bytes.back())) bytes.remove_suffix(1);
  if (bytes.empty()) return MalformedFrame{"empty frame"};

  double values[3];
  int field = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= bytes.size(); ++i) {
    if (i != bytes.size() && bytes[i] != ',') continue;
    if (field == 3) return MalformedFrame{"too many fields"};
    const std::string_view f = bytes.substr(start, i - start);
    if (f.empty()) return MalformedFrame{"empty field"};
    for (char c : f) {
      const bool ok = (c >= '0' && c <= '9') || c == '.' || c == '-' || c == 'e' || c == 'E' || c == '+';
      if (!ok) return MalformedFrame{"non-numeric field '" + std::string(f) + "'"};
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec == std::errc::result_out_of_range) return MalformedFrame{"numeric overflow"};
    if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(v))
      return MalformedFrame{"non-numeric field '" + std::string(f) + "'"};
    values[field++] = v;
    start = i + 1;
  }
  if (field != 3) return MalformedFrame{"expected 3 fields, got " + std::to_string(field)};
  return Twist{values[0], values[1], values[2]};
}

/// Reassembles LF-delimited frames from arbitrarily chunked UART input.
/// A partial frame longer than kMaxFrameBytes is reported once as malformed
/// and the framer discards input until the next LF.
class StreamFramer {
 public:
  std::vector<FrameResult> feed(std::string_view chunk) {
    std::vector<FrameResult> out;
    for (char c : chunk) {
      if (c == '\n') {
        if (discarding_) {
          discarding_ = false;
        } else {
          out.push_back(parse(buffer_));
        }
        buffer_.clear();
        continue;
      }
      if (discarding_) continue;
      buffer_ += c;
      if (buffer_.size() > kMaxFrameBytes) {
        out.push_back(MalformedFrame{"frame exceeds 64 bytes"});
        buffer_.clear();
        discarding_ = true;
      }
    }
    return out;
  }

  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::string buffer_;
  bool discarding_ = false;
};

/// Convenience: all results from a sequence of chunks.
template <typename Range>
std::vector<FrameResult> feed_stream(const Range& chunks) {
  StreamFramer framer;
  std::vector<FrameResult> all;
  for (const auto& c : chunks) {
    auto part = framer.feed(std::string_view(c));
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

struct MailboxSnapshot {
  Twist command;
  std::uint64_t seq = 0;
};

/// Latest-value slot between one writer (decision loop) and one reader
/// (motor control loop). Implemented as a seqlock: the writer never blocks,
/// the reader retries only while a write is in flight.
class CommandMailbox {
 public:
  void commit(const Twist& t) {
    const std::uint64_t s = seq_.load(std::memory_order_relaxed);
    seq_.store(s + 1, std::memory_order_relaxed);  // odd: write in progress
    std::atomic_thread_fence(std::memory_order_release);
    vx_.store(t.vx, std::memory_order_relaxed);
    vy_.store(t.vy, std::memory_order_relaxed);
    omega_.store(t.omega, std::memory_order_relaxed);
    seq_.store(s + 2, std::memory_order_release);
    seq_.notify_all();
  }

  MailboxSnapshot read() const {
    for (;;) {
      const std::uint64_t s0 = seq_.load(std::memory_order_acquire);
      if (s0 & 1U) continue;
      MailboxSnapshot snap;
      snap.command = {vx_.load(std::memory_order_relaxed), vy_.load(std::memory_order_relaxed),
                      omega_.load(std::memory_order_relaxed)};
      std::atomic_thread_fence(std::memory_order_acquire);
      if (seq_.load(std::memory_order_relaxed) == s0) {
        snap.seq = s0 / 2;  // number of commits so far
        return snap;
      }
    }
  }

  std::uint64_t commits() const { return seq_.load(std::memory_order_acquire) / 2; }

  /// Blocks until at least `n` commits have happened.
  void wait_for_commits(std::uint64_t n) const {
    for (;;) {
      const std::uint64_t s = seq_.load(std::memory_order_acquire);
      if (s / 2 >= n) return;
      seq_.wait(s, std::memory_order_acquire);
    }
  }

 private:
  std::atomic<std::uint64_t> seq_{0};
  std::atomic<double> vx_{0.0};
  std::atomic<double> vy_{0.0};
  std::atomic<double> omega_{0.0};
};

/// Reader side of the mailbox as seen by the motor loop: tracks how many
/// control ticks have passed without a fresh command and zeroes the command
/// once the link has been silent for longer than the watchdog limit.
class CommandReader {
 public:
  explicit CommandReader(const CommandMailbox& box, int watchdog_ticks = 10)
      : box_(&box), watchdog_ticks_(watchdog_ticks) {}

  Twist on_tick() {
    const MailboxSnapshot snap = box_->read();
    if (snap.seq != last_seq_) {
      last_seq_ = snap.seq;
      stale_age_ = 0;
    } else {
      ++stale_age_;
    }
    if (snap.seq == 0 || stale_age_ > watchdog_ticks_) return {};
    return snap.command;
  }

  int stale_age() const { return stale_age_; }
  std::uint64_t last_seq() const { return last_seq_; }

 private:
  const CommandMailbox* box_;
  int watchdog_ticks_;
  std::uint64_t last_seq_ = 0;
  int stale_age_ = 0;
};

}  // namespace avsim
