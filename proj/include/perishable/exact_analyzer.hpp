#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "perishable/errors.hpp"
#include "perishable/instance.hpp"
#include "perishable/offline_oracle.hpp"

namespace perishable {

using Rational = boost::multiprecision::cpp_rational;

template <class P>
struct ProbabilityTraits;

template <>
struct ProbabilityTraits<double> {
  static constexpr bool kExact = false;
  static double ratio(std::size_t num, std::size_t den) { return static_cast<double>(num) / static_cast<double>(den); }
  static double to_double(double p) { return p; }
};

template <>
struct ProbabilityTraits<Rational> {
  static constexpr bool kExact = true;
  static Rational ratio(std::size_t num, std::size_t den) {
    return Rational(static_cast<std::uint64_t>(num), static_cast<std::uint64_t>(den));
  }
  static double to_double(const Rational& p) { return p.convert_to<double>(); }
};

template <class P>
P ratio_of(std::size_t num, std::size_t den) {
  return ProbabilityTraits<P>::ratio(num, den);
}

template <class P>
double to_double(const P& p) {
  return ProbabilityTraits<P>::to_double(p);
}

/// Largest wait bound for which rational arithmetic is used by default.
inline constexpr std::size_t kRationalBoundLimit = 1000;

inline bool rational_eligible(const CriticalPointSequence& points) {
  const auto d = points.wait_bounds();
  return *std::max_element(d.begin(), d.end()) <= kRationalBoundLimit;
}

/// Joint law of the integer wait counts W_i = ceil(T_i), i = 0..K, W_0 = 0.
///
/// Transition into phase i (bounds D_{i-1} -> D_i), for j <= D_{i-1}:
///   Pr[W_i = k | W_{i-1} = j] = (D_{i-1}/D_i)[k == j] + [D_{i-1} < k <= D_i] / D_i.
/// Marginals are propagated through the kernel, not assumed.
template <class P>
class WaitChainDistribution {
 public:
  explicit WaitChainDistribution(const CriticalPointSequence& points)
      : bounds_(points.wait_bounds().begin(), points.wait_bounds().end()) {
    marginals_.push_back({P(1)});
    for (std::size_t i = 1; i < bounds_.size(); ++i) {
      const std::vector<P>& prev = marginals_.back();
      std::vector<P> next(bounds_[i] + 1, P(0));
      for (std::size_t j = 0; j < prev.size(); ++j) {
        if (prev[j] == P(0)) continue;
        for (std::size_t k = 0; k < next.size(); ++k) {
          const P t = transition(i, j, k);
          if (t != P(0)) next[k] += prev[j] * t;
        }
      }
      marginals_.push_back(std::move(next));
    }
  }

  /// Largest phase index carried (K).
  std::size_t phases() const noexcept { return bounds_.size() - 1; }
  std::size_t bound(std::size_t i) const { return bounds_.at(i); }

  P transition(std::size_t i, std::size_t from, std::size_t to) const {
    const std::size_t lo = bounds_.at(i - 1);
    const std::size_t hi = bounds_.at(i);
    if (from > lo) return P(0);
    if (lo == hi) return from == to ? P(1) : P(0);
    P p(0);
    if (to == from) p += ratio_of<P>(lo, hi);
    if (to > lo && to <= hi) p += ratio_of<P>(1, hi);
    return p;
  }

  /// Law of W_i over 0..D_i.
  const std::vector<P>& marginal(std::size_t i) const { return marginals_.at(i); }

  /// Pr[W_i > m].
  P tail_above(std::size_t i, std::size_t m) const {
    P p(0);
    const auto& law = marginal(i);
    for (std::size_t k = m + 1; k < law.size(); ++k) p += law[k];
    return p;
  }

  /// Pr[W_i < m].
  P below(std::size_t i, std::size_t m) const {
    P p(0);
    const auto& law = marginal(i);
    for (std::size_t k = 0; k < std::min(m, law.size()); ++k) p += law[k];
    return p;
  }

  /// Pr[W_{i-1} <= m <= W_i], from the joint law of consecutive phases.
  P straddle(std::size_t i, std::size_t m) const {
    P p(0);
    const auto& prev = marginal(i - 1);
    for (std::size_t j = 0; j < prev.size() && j <= m; ++j) {
      if (prev[j] == P(0)) continue;
      for (std::size_t k = m; k <= bounds_.at(i); ++k) p += prev[j] * transition(i, j, k);
    }
    return p;
  }

  /// E[W_i | W_i < m], if the event has positive probability.
  std::optional<P> mean_below(std::size_t i, std::size_t m) const {
    P mass(0);
    P first(0);
    const auto& law = marginal(i);
    for (std::size_t k = 0; k < std::min(m, law.size()); ++k) {
      mass += law[k];
      first += law[k] * P(static_cast<std::uint64_t>(k));
    }
    if (mass == P(0)) return std::nullopt;
    return first / mass;
  }

  /// E[W_i | W_i > m], if the event has positive probability.
  std::optional<P> mean_above(std::size_t i, std::size_t m) const {
    P mass(0);
    P first(0);
    const auto& law = marginal(i);
    for (std::size_t k = m + 1; k < law.size(); ++k) {
      mass += law[k];
      first += law[k] * P(static_cast<std::uint64_t>(k));
    }
    if (mass == P(0)) return std::nullopt;
    return first / mass;
  }

 private:
  std::vector<std::size_t> bounds_;
  std::vector<std::vector<P>> marginals_;
};

/// Exact law of the number of copies allocated after `supply` arrivals.
template <class P>
struct OutcomeDistribution {
  std::size_t supply = 0;
  /// i with end_i < supply <= end_{i+1}; 0 below the first peak, K past the last.
  std::size_t bracket = 0;
  /// supply - end_i, or 0 when bracket == 0.
  std::size_t residual = 0;
  std::map<std::size_t, P> support;
  P expected_allocated = P(0);
  double expected_revenue = 0.0;

  P probability(std::size_t x) const {
    auto it = support.find(x);
    return it == support.end() ? P(0) : it->second;
  }

  P probability_below(std::size_t x) const {
    P p(0);
    for (auto it = support.begin(); it != support.end() && it->first < x; ++it) p += it->second;
    return p;
  }

  P probability_above(std::size_t x) const {
    P p(0);
    for (auto it = support.upper_bound(x); it != support.end(); ++it) p += it->second;
    return p;
  }

  P total() const {
    P p(0);
    for (const auto& [x, q] : support) p += q;
    return p;
  }

  std::optional<P> conditional_mean_below(std::size_t x) const {
    P mass(0);
    P first(0);
    for (auto it = support.begin(); it != support.end() && it->first < x; ++it) {
      mass += it->second;
      first += it->second * P(static_cast<std::uint64_t>(it->first));
    }
    if (mass == P(0)) return std::nullopt;
    return first / mass;
  }

  std::optional<P> conditional_mean_above(std::size_t x) const {
    P mass(0);
    P first(0);
    for (auto it = support.upper_bound(x); it != support.end(); ++it) {
      mass += it->second;
      first += it->second * P(static_cast<std::uint64_t>(it->first));
    }
    if (mass == P(0)) return std::nullopt;
    return first / mass;
  }
};

/// Dynamic programme over (phase, W) states.
///
/// Entering phase i with wait count w: the allocator reaches end_i after
/// end_i + w copies, so supply < end_i + w leaves it allocating at supply - w.
/// Otherwise the wait count moves to W_i through the kernel and the allocator
/// sits at end_i while supply <= end_i + W_i. The last peak halts the machine.
template <class P>
OutcomeDistribution<P> outcome_distribution(const RevenueCurve& curve, const CriticalPointSequence& points,
                                            std::size_t supply) {
  OutcomeDistribution<P> out;
  out.supply = supply;
  out.bracket = points.bracket(supply);
  out.residual = out.bracket == 0 ? 0 : supply - points.peak_end(out.bracket);

  auto emit = [&](std::size_t x, const P& p) {
    if (p == P(0)) return;
    out.support[x] += p;
  };

  const std::size_t phases = points.phases();
  std::map<std::size_t, P> mass{{0, P(1)}};
  for (std::size_t i = 1; i <= phases && !mass.empty(); ++i) {
    const std::size_t end = points.peak_end(i);
    for (auto it = mass.begin(); it != mass.end();) {
      if (supply < end + it->first) {
        emit(supply - it->first, it->second);
        it = mass.erase(it);
      } else {
        ++it;
      }
    }
    if (mass.empty()) break;
    if (i == phases) {
      P rest(0);
      for (const auto& [w, p] : mass) rest += p;
      emit(end, rest);
      break;
    }
    const std::size_t lo = points.wait_bound(i - 1);
    const std::size_t hi = points.wait_bound(i);
    if (hi != lo) {
      P total(0);
      for (auto& [w, p] : mass) {
        total += p;
        p *= ratio_of<P>(lo, hi);
      }
      const P fresh = total * ratio_of<P>(1, hi);
      for (std::size_t k = lo + 1; k <= hi; ++k) mass[k] += fresh;
    }
    for (auto it = mass.begin(); it != mass.end();) {
      if (it->second == P(0) || supply <= end + it->first) {
        emit(end, it->second);
        it = mass.erase(it);
      } else {
        ++it;
      }
    }
  }

  for (const auto& [x, p] : out.support) {
    out.expected_allocated += p * P(static_cast<std::uint64_t>(x));
    out.expected_revenue += to_double(p) * curve.revenue(x);
  }
  return out;
}

template <class P = double>
OutcomeDistribution<P> outcome_distribution(const RevenueCurve& curve, std::size_t supply) {
  return outcome_distribution<P>(curve, find_critical_points(curve), supply);
}

/// ALG = E[f(X)] for the given supply.
inline double expected_revenue(const RevenueCurve& curve, const CriticalPointSequence& points, std::size_t supply) {
  return outcome_distribution<double>(curve, points, supply).expected_revenue;
}

inline double expected_revenue(const RevenueCurve& curve, std::size_t supply) {
  return expected_revenue(curve, find_critical_points(curve), supply);
}

// Case analysis ----------------------------------------------------------------

enum class CaseTag { k1a, k1b, k1c, k2a, k2b, k2c, kTerminal };

inline const char* to_string(CaseTag tag) {
  switch (tag) {
    case CaseTag::k1a: return "1a";
    case CaseTag::k1b: return "1b";
    case CaseTag::k1c: return "1c";
    case CaseTag::k2a: return "2a";
    case CaseTag::k2b: return "2b";
    case CaseTag::k2c: return "2c";
    case CaseTag::kTerminal: return "terminal";
  }
  return "?";
}

namespace detail {

// Orderings of M, J_i and a_{i+1}; M == a_{i+1} counts as case 1. Where the
// printed row conditions overlap at equality, the first of 1a..2c wins.
inline CaseTag order_case(std::size_t supply, std::size_t threshold, std::size_t next_start) {
  if (supply <= next_start) {
    if (threshold < supply) return CaseTag::k1a;
    return threshold < next_start ? CaseTag::k1b : CaseTag::k1c;
  }
  if (threshold < next_start) return CaseTag::k2a;
  return supply <= threshold ? CaseTag::k2b : CaseTag::k2c;
}

}  // namespace detail

/// Where a supply value falls relative to the bracketing peaks, with the
/// closed-form event probabilities and the ratio bound argued for that case.
struct CaseAnalysis {
  CaseTag tag = CaseTag::kTerminal;
  std::size_t phase = 0;       // i: end_i < supply <= end_{i+1}
  std::size_t supply = 0;      // M
  std::size_t residual = 0;    // M' = M - end_i
  std::size_t peak_end = 0;    // b_i
  std::size_t next_start = 0;  // a_{i+1}; 0 for terminal
  std::size_t prev_bound = 0;  // D_{i-1}
  std::size_t bound = 0;       // D_i
  std::size_t threshold = 0;   // J_i
  /// Pr[X < b_i], Pr[X = b_i], Pr[X > b_i] in the continuous-budget model.
  std::array<double, 3> probabilities{};
  /// Lower bound M - (M' + D_{i-1})/2 on E[X | X < b_i], when that event is possible.
  std::optional<double> mean_below_bound;
  /// M - min(M', D_i)/2 = E[X | X > b_i], when that event is possible.
  std::optional<double> mean_above;
  double opt = 0.0;
  double ratio_lower_bound = 0.0;
};

/// Exact closed-form probabilities (Pr[X<b_i], Pr[X=b_i], Pr[X>b_i]) of the
/// tagged case, with the wait budget treated as a continuous uniform variable.
template <class P = double>
std::array<P, 3> table1_probabilities(const CaseAnalysis& a) {
  const std::size_t m = a.residual;
  auto one_minus = [](const P& p) { return P(1) - p; };
  switch (a.tag) {
    case CaseTag::k1a:
      return {P(0), one_minus(ratio_of<P>(m, a.bound)), ratio_of<P>(m, a.bound)};
    case CaseTag::k1b:
      return {one_minus(ratio_of<P>(m, a.prev_bound)), ratio_of<P>(m, a.prev_bound) - ratio_of<P>(m, a.bound),
              ratio_of<P>(m, a.bound)};
    case CaseTag::k1c:
    case CaseTag::k2b:
      return {one_minus(ratio_of<P>(m, a.prev_bound)), P(0), ratio_of<P>(m, a.prev_bound)};
    case CaseTag::k2a:
    case CaseTag::k2c:
      return {P(0), P(0), P(1)};
    case CaseTag::kTerminal:
      break;
  }
  throw Error(ErrorCode::kInvalidConfig, "no closed-form row past the last peak");
}

/// Continuous-budget event probabilities for the bracketing phase, from the
/// generic uniform tails Pr[T_{i-1} > M'] and Pr[T_i < M'] (no case split).
template <class P = double>
std::array<P, 3> continuous_event_probabilities(const CriticalPointSequence& points, std::size_t supply) {
  const std::size_t i = points.bracket(supply);
  if (i == 0 || i == points.phases()) {
    throw Error(ErrorCode::kInvalidConfig, "supply outside the bracketed range");
  }
  const std::size_t m = supply - points.peak_end(i);
  const std::size_t lo = points.wait_bound(i - 1);
  const std::size_t hi = points.wait_bound(i);
  const P below = lo == 0 || m >= lo ? P(0) : ratio_of<P>(lo - m, lo);
  const P above = ratio_of<P>(std::min(m, hi), hi);
  return {below, P(1) - below - above, above};
}

/// Mass the integer wait count puts exactly on M': Pr[W_i = M'] = 1/D_i for
/// 1 <= M' <= D_i. The discrete allocator is at b_i on that event, where the
/// continuous model has it past b_i.
template <class P = double>
P boundary_atom(const CaseAnalysis& a) {
  if (a.tag == CaseTag::kTerminal || a.residual == 0 || a.residual > a.bound) return P(0);
  return ratio_of<P>(1, a.bound);
}

inline CaseAnalysis case_classify(const RevenueCurve& curve, const CriticalPointSequence& points,
                                  std::size_t supply) {
  const std::size_t i = points.bracket(supply);
  if (i == 0) {
    throw Error(ErrorCode::kDegenerateBelowFirstPeak,
                "supply " + std::to_string(supply) + " does not exceed the first peak");
  }
  CaseAnalysis a;
  a.phase = i;
  a.supply = supply;
  a.peak_end = points.peak_end(i);
  a.residual = supply - a.peak_end;
  a.prev_bound = points.wait_bound(i - 1);
  a.bound = points.wait_bound(i);
  a.threshold = points.threshold(i);
  a.opt = opt_revenue(curve, supply).revenue;
  if (points.is_terminal(i)) {
    a.tag = CaseTag::kTerminal;
    return a;
  }
  a.next_start = points.peak_start(i + 1);

  const std::size_t m = supply;
  const std::size_t next = a.next_start;
  a.tag = detail::order_case(m, a.threshold, next);

  a.probabilities = table1_probabilities<double>(a);
  const double md = static_cast<double>(m);
  const double rd = static_cast<double>(a.residual);
  if (a.probabilities[0] > 0.0) a.mean_below_bound = md - (rd + static_cast<double>(a.prev_bound)) / 2.0;
  if (a.probabilities[2] > 0.0) a.mean_above = md - std::min(rd, static_cast<double>(a.bound)) / 2.0;

  const double b = static_cast<double>(a.peak_end);
  const double an = static_cast<double>(next);
  switch (a.tag) {
    case CaseTag::k1a: {
      const double x = rd / static_cast<double>(a.bound);
      const double y = static_cast<double>(a.bound) / an;
      a.ratio_lower_bound = 1.0 + x * x * y / 2.0 - x * y;
      break;
    }
    case CaseTag::k1b: {
      const double x = rd / static_cast<double>(a.prev_bound);
      const double q = static_cast<double>(a.prev_bound) / static_cast<double>(a.bound);
      a.ratio_lower_bound = (1.0 - x) / 2.0 + x * (1.0 - q + q * b / an);
      break;
    }
    case CaseTag::k1c:
    case CaseTag::k2b:
      a.ratio_lower_bound = 0.5;
      break;
    case CaseTag::k2a:
    case CaseTag::k2c:
      a.ratio_lower_bound = (md - static_cast<double>(a.bound) / 2.0) / md;
      break;
    case CaseTag::kTerminal:
      break;
  }
  return a;
}

inline CaseAnalysis case_classify(const RevenueCurve& curve, std::size_t supply) {
  return case_classify(curve, find_critical_points(curve), supply);
}

/// "below" for supply <= b_1, the case tag otherwise.
inline std::string case_label(const CriticalPointSequence& points, std::size_t supply) {
  const std::size_t i = points.bracket(supply);
  if (i == 0) return "below";
  if (points.is_terminal(i)) return "terminal";
  return to_string(detail::order_case(supply, points.threshold(i), points.peak_start(i + 1)));
}

// Sweeps ---------------------------------------------------------------------

struct SweepRow {
  std::size_t supply = 0;
  double alg = 0.0;
  double opt = 0.0;
  double ratio = 1.0;
  std::string case_tag;
};

struct RatioSweep {
  std::vector<SweepRow> rows;
  double min_ratio = 1.0;
  std::size_t argmin = 0;
};

inline RatioSweep competitive_ratio_sweep(const RevenueCurve& curve, std::size_t max_supply) {
  const auto points = find_critical_points(curve);
  const auto opts = opt_curve(curve, max_supply);
  RatioSweep sweep;
  sweep.rows.reserve(max_supply);
  for (std::size_t m = 1; m <= max_supply; ++m) {
    SweepRow row;
    row.supply = m;
    row.alg = expected_revenue(curve, points, m);
    row.opt = opts[m - 1].revenue;
    row.ratio = row.opt > 0.0 ? row.alg / row.opt : 1.0;
    row.case_tag = case_label(points, m);
    if (sweep.rows.empty() || row.ratio < sweep.min_ratio) {
      sweep.min_ratio = row.ratio;
      sweep.argmin = m;
    }
    sweep.rows.push_back(std::move(row));
  }
  return sweep;
}

/// max over phases of D_{i-1}/b_i and (when a next peak exists) D_i/a_{i+1}.
inline double smoothness_bound(const CriticalPointSequence& points) {
  double eps = 0.0;
  for (std::size_t i = 1; i <= points.phases(); ++i) {
    eps = std::max(eps, static_cast<double>(points.wait_bound(i - 1)) / static_cast<double>(points.peak_end(i)));
    if (!points.is_terminal(i)) {
      eps = std::max(eps, static_cast<double>(points.wait_bound(i)) / static_cast<double>(points.peak_start(i + 1)));
    }
  }
  return eps;
}

}  // namespace perishable
