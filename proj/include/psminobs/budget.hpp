#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

namespace psminobs {

/// Search budget: a wall-clock deadline or a count of work units (one unit
/// per neighbour evaluation). Copies share the wall-clock start but keep
/// their own unit counter, so each worker spends its iteration budget
/// independently of scheduling.
class Budget {
 public:
  using Clock = std::chrono::steady_clock;

  static Budget wall_clock(double seconds, Clock::time_point start = Clock::now()) {
    Budget b;
    b.iteration_based_ = false;
    b.start_ = start;
    b.limit_ = seconds;
    return b;
  }

  static Budget iterations(std::uint64_t units) {
    Budget b;
    b.iteration_based_ = true;
    b.limit_ = static_cast<double>(units);
    return b;
  }

  static Budget unlimited_iterations() { return iterations(std::numeric_limits<std::uint64_t>::max()); }

  /// Optional external stop request (e.g. SIGINT); polled by exhausted().
  Budget& with_cancel(const std::atomic<bool>* flag) {
    cancel_ = flag;
    return *this;
  }

  bool iteration_based() const { return iteration_based_; }
  double limit() const { return limit_; }
  std::uint64_t units_used() const { return units_; }

  void charge(std::uint64_t units = 1) { units_ += units; }

  /// Seconds since start, or units consumed for iteration budgets.
  double elapsed() const {
    if (iteration_based_) return static_cast<double>(units_);
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

  bool exhausted() const {
    if (cancel_ != nullptr && cancel_->load(std::memory_order_relaxed)) return true;
    return elapsed() >= limit_;
  }

 private:
  Budget() = default;

  bool iteration_based_ = true;
  Clock::time_point start_{};
  double limit_ = 0.0;
  std::uint64_t units_ = 0;
  const std::atomic<bool>* cancel_ = nullptr;
};

struct Snapshot {
  double elapsed = 0.0;
  double score = 0.0;
  std::size_t worker = 0;

  bool operator==(const Snapshot&) const = default;
};

using SnapshotSink = std::function<void(const Snapshot&)>;

/// Emits (boundary, best score) whenever elapsed crosses a multiple of the
/// interval, and a closing snapshot at the actual end time.
class SnapshotClock {
 public:
  SnapshotClock(double interval, SnapshotSink sink, std::size_t worker)
      : interval_(interval), next_(interval), sink_(std::move(sink)), worker_(worker) {}

  /// `best` must be the best score found before the current moment; a
  /// boundary crossed before any score exists is skipped.
  void poll(const Budget& budget, double best) {
    if (!sink_ || !(interval_ > 0.0)) return;
    const double now = budget.elapsed();
    while (now >= next_) {
      if (std::isfinite(best)) emit(next_, best);
      next_ += interval_;
    }
  }

  void finish(const Budget& budget, double best) {
    poll(budget, best);
    if (!sink_) return;
    const double now = budget.elapsed();
    if (!emitted_ || now > last_) emit(now, best);
  }

 private:
  void emit(double at, double best) {
    sink_(Snapshot{at, best, worker_});
    last_ = at;
    emitted_ = true;
  }

  double interval_;
  double next_;
  SnapshotSink sink_;
  std::size_t worker_;
  double last_ = 0.0;
  bool emitted_ = false;
};

}  // namespace psminobs
