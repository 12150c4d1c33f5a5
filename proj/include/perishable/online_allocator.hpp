#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "perishable/errors.hpp"
#include "perishable/instance.hpp"
#include "perishable/rng.hpp"

namespace perishable {

enum class Mode { kAllocate, kWait, kHalt };
enum class Decision : std::uint8_t { kAllocated, kDiscarded, kHalted };

/// Draws the wait budget for a phase whose bound grows from `prev_bound` to
/// `cur_bound`, given a budget currently uniform on [0, prev_bound].
///
/// Keeps `current` with probability prev_bound / cur_bound, otherwise redraws
/// uniformly on (prev_bound, cur_bound]; the result is uniform on [0, cur_bound].
/// Draw order: the keep/replace coin first, then the position. Equal bounds
/// consume no draws.
inline double resample_wait_budget(Rng& rng, double current, std::size_t prev_bound, std::size_t cur_bound) {
  if (prev_bound > cur_bound) {
    throw Error(ErrorCode::kInvariantViolation, "wait bounds must be non-decreasing");
  }
  if (prev_bound == cur_bound) return current;
  const double lo = static_cast<double>(prev_bound);
  const double hi = static_cast<double>(cur_bound);
  const bool keep = rng.uniform01() < lo / hi;
  const double offset = rng.uniform01();
  if (keep) return current;
  // hi - offset * (hi - lo) lies in (lo, hi], so ceil() is uniform on lo+1..hi.
  return hi - offset * (hi - lo);
}

/// The randomized ALLOCATE/WAIT state machine, fed one copy per step().
///
/// `phase()` is the peak currently targeted (or waited at), 1-based. The
/// allocator halts for good once the terminal peak is reached.
class OnlineAllocator {
 public:
  OnlineAllocator(CriticalPointSequence points, std::uint64_t seed)
      : points_(std::move(points)), rng_(seed) {}

  Decision step() {
    switch (mode_) {
      case Mode::kHalt:
        ++consumed_;
        return Decision::kHalted;

      case Mode::kAllocate: {
        ++consumed_;
        ++allocated_;
        if (allocated_ == points_.peak_end(phase_)) {
          if (points_.is_terminal(phase_)) {
            mode_ = Mode::kHalt;
          } else {
            budget_ = resample_wait_budget(rng_, budget_, points_.wait_bound(phase_ - 1),
                                           points_.wait_bound(phase_));
            if (static_cast<double>(discarded_) >= budget_) {
              ++phase_;
            } else {
              mode_ = Mode::kWait;
            }
          }
        }
        return Decision::kAllocated;
      }

      case Mode::kWait:
        ++consumed_;
        ++discarded_;
        if (static_cast<double>(discarded_) >= budget_) {
          mode_ = Mode::kAllocate;
          ++phase_;
        }
        return Decision::kDiscarded;
    }
    return Decision::kHalted;
  }

  const CriticalPointSequence& points() const noexcept { return points_; }
  std::size_t phase() const noexcept { return phase_; }
  Mode mode() const noexcept { return mode_; }
  std::size_t allocated() const noexcept { return allocated_; }
  std::size_t discarded() const noexcept { return discarded_; }
  std::size_t consumed() const noexcept { return consumed_; }
  double wait_budget() const noexcept { return budget_; }

 private:
  CriticalPointSequence points_;
  Rng rng_;
  Mode mode_ = Mode::kAllocate;
  std::size_t phase_ = 1;
  std::size_t allocated_ = 0;
  std::size_t discarded_ = 0;
  std::size_t consumed_ = 0;
  double budget_ = 0.0;
};

inline OnlineAllocator new_allocator(const CriticalPointSequence& points, std::uint64_t seed) {
  return OnlineAllocator(points, seed);
}

struct RunOutcome {
  std::size_t allocated = 0;
  double revenue = 0.0;
  std::vector<Decision> trace;  // empty unless requested
};

inline RunOutcome run(const RevenueCurve& curve, std::size_t supply, std::uint64_t seed,
                      bool record_trace = false) {
  OnlineAllocator allocator(find_critical_points(curve), seed);
  RunOutcome out;
  if (record_trace) out.trace.reserve(supply);
  for (std::size_t k = 0; k < supply; ++k) {
    const Decision d = allocator.step();
    if (record_trace) out.trace.push_back(d);
    if (d == Decision::kHalted && !record_trace) break;
  }
  out.allocated = allocator.allocated();
  out.revenue = curve.revenue(out.allocated);
  return out;
}

/// Same machinery on an arbitrary tabulated sublinear f(1..n).
inline RunOutcome run_generic(std::span<const double> f, std::size_t supply, std::uint64_t seed,
                              bool record_trace = false) {
  return run(RevenueCurve::from_values(std::vector<double>(f.begin(), f.end())), supply, seed, record_trace);
}

}  // namespace perishable
