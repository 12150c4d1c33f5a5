#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perishable/errors.hpp"
#include "perishable/exact_analyzer.hpp"
#include "perishable/instance.hpp"
#include "perishable/offline_oracle.hpp"
#include "perishable/online_allocator.hpp"
#include "perishable/rng.hpp"
#include "perishable/trials.hpp"

namespace perishable {

// Random split ---------------------------------------------------------------

/// Side of every bidder (canonical order), one fair coin each.
struct Partition {
  std::vector<bool> in_s;
  std::vector<std::string> group_s;
  std::vector<std::string> group_t;
};

/// Rebuilds a partition from recorded coins.
inline Partition replay_partition(const BidProfile& profile, std::vector<bool> coins) {
  if (coins.size() != profile.size()) throw Error(ErrorCode::kInvalidConfig, "coin record does not match profile");
  Partition p;
  p.in_s = std::move(coins);
  for (std::size_t k = 0; k < profile.size(); ++k) {
    (p.in_s[k] ? p.group_s : p.group_t).push_back(profile.bidders()[k].id);
  }
  return p;
}

inline Partition partition_bidders(const BidProfile& profile, std::uint64_t seed) {
  if (profile.size() < 2) throw Error(ErrorCode::kTooFewBidders, "a random split needs at least two bidders");
  Rng rng(seed);
  std::vector<bool> coins(profile.size());
  for (std::size_t k = 0; k < coins.size(); ++k) coins[k] = rng.bernoulli(0.5);
  return replay_partition(profile, std::move(coins));
}

// Fictitious runs ------------------------------------------------------------

/// Records x(G,k), the copies the allocator would have handed group G after k
/// arrivals. The horizon grows on demand since the supply is not known upfront.
class FictitiousRun {
 public:
  FictitiousRun(const RevenueCurve& group_curve, std::uint64_t seed) : curve_(group_curve), seed_(seed) {
    if (!curve_.empty()) allocator_.emplace(find_critical_points(curve_), seed);
  }

  /// x(G,k); x(G,0) = 0. An empty group never allocates.
  std::size_t allocated_after(std::size_t k) {
    if (k == 0) return 0;
    while (counts_.size() < k) {
      if (allocator_) allocator_->step();
      counts_.push_back(allocator_ ? allocator_->allocated() : 0);
    }
    return counts_[k - 1];
  }

  /// p(G,k): the price of the x(G,k)-th bid within G, 0 when nothing is allocated.
  double price_after(std::size_t k) {
    const std::size_t x = allocated_after(k);
    return x == 0 ? 0.0 : curve_.price(x);
  }

  const std::vector<std::size_t>& counts() const noexcept { return counts_; }
  const RevenueCurve& curve() const noexcept { return curve_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  RevenueCurve curve_;
  std::uint64_t seed_;
  std::optional<OnlineAllocator> allocator_;
  std::vector<std::size_t> counts_;
};

inline FictitiousRun fictitious_run(const BidProfile& group, std::size_t horizon, std::uint64_t seed) {
  const RevenueCurve curve = group.total_bids() == 0 ? RevenueCurve::none() : build_revenue_curve(group);
  FictitiousRun run(curve, seed);
  run.allocated_after(horizon);
  return run;
}

// VCG ------------------------------------------------------------------------

/// VCG sale of `copies` units over a group's sorted bids. Vectors are indexed
/// by the owners' bidder indices.
struct VcgResult {
  std::size_t copies = 0;
  std::vector<std::size_t> quantities;
  std::vector<double> payments;
  double revenue = 0.0;
};

/// With decreasing marginals the efficient allocation is the top `copies` bids.
/// A winner holding q of them pays the welfare the others lose: their next q
/// bids after the cut-off, i.e. the sorted bids past position `copies` that
/// it does not own (missing bids count as zero).
inline VcgResult vcg_on_curve(const RevenueCurve& curve, std::size_t num_bidders, std::size_t copies) {
  VcgResult out;
  out.copies = std::min(copies, curve.size());
  out.quantities.assign(num_bidders, 0);
  out.payments.assign(num_bidders, 0.0);
  const auto owners = curve.owners();
  const auto prices = curve.prices();
  for (std::size_t i = 0; i < out.copies; ++i) ++out.quantities[owners[i].bidder];

  std::vector<bool> done(num_bidders, false);
  for (std::size_t i = 0; i < out.copies; ++i) {
    const std::size_t bidder = owners[i].bidder;
    if (done[bidder]) continue;
    done[bidder] = true;
    std::size_t need = out.quantities[bidder];
    double pay = 0.0;
    for (std::size_t r = out.copies; r < prices.size() && need > 0; ++r) {
      if (owners[r].bidder == bidder) continue;
      pay += prices[r];
      --need;
    }
    out.payments[bidder] = pay;
    out.revenue += pay;
  }
  return out;
}

/// Payments keyed by bidder id for a stand-alone group.
struct GroupVcg {
  std::map<std::string, std::size_t> quantities;
  std::map<std::string, double> payments;
  double revenue = 0.0;
};

inline GroupVcg vcg_payments(const BidProfile& group, std::size_t copies) {
  GroupVcg out;
  for (const auto& b : group.bidders()) {
    out.quantities[b.id] = 0;
    out.payments[b.id] = 0.0;
  }
  if (group.total_bids() == 0) return out;
  const VcgResult r = vcg_on_curve(build_revenue_curve(group), group.size(), copies);
  for (std::size_t k = 0; k < group.size(); ++k) {
    out.quantities[group.bidders()[k].id] = r.quantities[k];
    out.payments[group.bidders()[k].id] = r.payments[k];
  }
  out.revenue = r.revenue;
  return out;
}

// Bidder dominance -----------------------------------------------------------

/// max over bidders i and prices p of n(i,p)*p, with n(i,p) counting bids >= p.
/// For each bidder the maximum sits at one of its own bids: max_r r * bid_r.
inline double max_bidder_mass(const BidProfile& profile) {
  double best = 0.0;
  for (const auto& b : profile.bidders()) {
    for (std::size_t r = 0; r < b.bids.size(); ++r) best = std::max(best, static_cast<double>(r + 1) * b.bids[r]);
  }
  return best;
}

/// eta = max_{i,p} n(i,p)*p / OPT(profile, supply).
inline double bidder_dominance(const BidProfile& profile, std::size_t supply) {
  const double opt = opt_revenue(build_revenue_curve(profile), supply).revenue;
  if (opt <= 0.0) return std::numeric_limits<double>::infinity();
  return max_bidder_mass(profile) / opt;
}

// The mechanism --------------------------------------------------------------

enum class Pacing {
  kCrossGroup,  // each side is paced by the other side's fictitious run
  kOwnGroup,    // deliberately broken control: paced by its own run
};

enum class CopyFate : std::uint8_t { kDiscarded, kToS, kToT };

struct MechanismOutcome {
  Partition partition;
  /// Recorded x(S,k) and x(T,k).
  std::vector<std::size_t> fictitious_s;
  std::vector<std::size_t> fictitious_t;
  /// Cap consulted at every even copy (for T) and every odd copy (for S).
  std::vector<std::size_t> caps_t;
  std::vector<std::size_t> caps_s;
  std::vector<CopyFate> fates;
  std::size_t allocated_s = 0;
  std::size_t allocated_t = 0;
  /// Per bidder, canonical order.
  std::vector<std::size_t> quantities;
  std::vector<double> payments;
  double revenue = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  double opt = 0.0;
  RevenueCurve curve_s = RevenueCurve::none();
  RevenueCurve curve_t = RevenueCurve::none();
};

struct MechanismConfig {
  std::size_t supply = 0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  Pacing pacing = Pacing::kCrossGroup;
};

inline void validate(const MechanismConfig& config) {
  if (!(config.gamma >= 0.0 && config.gamma < 1.0 / 6.0)) {
    throw Error(ErrorCode::kInvalidConfig, "gamma must lie in [0, 1/6)");
  }
  if (config.supply < 1) throw Error(ErrorCode::kInvalidConfig, "supply must be >= 1");
}

/// Pacing cap floor((1 - 6 gamma) * x); the small offset keeps exact products
/// such as 0.925 * 40 from rounding down a whole unit.
inline std::size_t pacing_cap(double gamma, std::size_t fictitious) {
  return static_cast<std::size_t>(std::floor((1.0 - 6.0 * gamma) * static_cast<double>(fictitious) + 1e-9));
}

/// Random split, fictitious runs on both halves, cross-paced live allocation,
/// then a VCG sale inside each half for the copies it received.
///
/// Coins: partition from derive_seed(seed, "partition"), fictitious runs from
/// "fict-S" / "fict-T". None depends on the bids.
inline MechanismOutcome run_mechanism(const BidProfile& profile, const MechanismConfig& config) {
  validate(config);
  const RevenueCurve full = build_revenue_curve(profile);

  MechanismOutcome out;
  out.gamma = config.gamma;
  out.partition = partition_bidders(profile, derive_seed(config.seed, "partition"));
  std::vector<bool> in_t(out.partition.in_s.size());
  for (std::size_t k = 0; k < in_t.size(); ++k) in_t[k] = !out.partition.in_s[k];
  out.curve_s = RevenueCurve::restrict(full, out.partition.in_s);
  out.curve_t = RevenueCurve::restrict(full, in_t);

  FictitiousRun run_s(out.curve_s, derive_seed(config.seed, "fict-S"));
  FictitiousRun run_t(out.curve_t, derive_seed(config.seed, "fict-T"));
  const bool cross = config.pacing == Pacing::kCrossGroup;
  FictitiousRun& pace_t = cross ? run_s : run_t;
  FictitiousRun& pace_s = cross ? run_t : run_s;

  out.fates.reserve(config.supply);
  for (std::size_t j = 1; j <= config.supply; ++j) {
    if (j % 2 == 0) {
      const std::size_t cap = pacing_cap(config.gamma, pace_t.allocated_after(j / 2));
      out.caps_t.push_back(cap);
      if (out.allocated_t < cap && out.allocated_t < out.curve_t.size()) {
        ++out.allocated_t;
        out.fates.push_back(CopyFate::kToT);
      } else {
        out.fates.push_back(CopyFate::kDiscarded);
      }
    } else {
      const std::size_t cap = pacing_cap(config.gamma, pace_s.allocated_after((j + 1) / 2));
      out.caps_s.push_back(cap);
      if (out.allocated_s < cap && out.allocated_s < out.curve_s.size()) {
        ++out.allocated_s;
        out.fates.push_back(CopyFate::kToS);
      } else {
        out.fates.push_back(CopyFate::kDiscarded);
      }
    }
  }
  out.fictitious_s = run_s.counts();
  out.fictitious_t = run_t.counts();

  const VcgResult vcg_s = vcg_on_curve(out.curve_s, profile.size(), out.allocated_s);
  const VcgResult vcg_t = vcg_on_curve(out.curve_t, profile.size(), out.allocated_t);
  out.quantities.assign(profile.size(), 0);
  out.payments.assign(profile.size(), 0.0);
  for (std::size_t k = 0; k < profile.size(); ++k) {
    out.quantities[k] = vcg_s.quantities[k] + vcg_t.quantities[k];
    out.payments[k] = vcg_s.payments[k] + vcg_t.payments[k];
  }
  out.revenue = vcg_s.revenue + vcg_t.revenue;
  out.opt = opt_revenue(full, config.supply).revenue;
  out.eta = out.opt > 0.0 ? max_bidder_mass(profile) / out.opt : std::numeric_limits<double>::infinity();
  return out;
}

inline MechanismOutcome run_mechanism(const BidProfile& profile, std::size_t supply, double gamma,
                                      std::uint64_t seed, Pacing pacing = Pacing::kCrossGroup) {
  return run_mechanism(profile, MechanismConfig{supply, gamma, seed, pacing});
}

// Truthfulness testing -------------------------------------------------------

enum class Misreport { kScaleDown, kScaleUp, kDropSubset, kFlattenUp, kPerturb };
inline constexpr std::size_t kMisreportKinds = 5;

inline const char* to_string(Misreport kind) {
  switch (kind) {
    case Misreport::kScaleDown: return "scale-down";
    case Misreport::kScaleUp: return "scale-up";
    case Misreport::kDropSubset: return "drop-subset";
    case Misreport::kFlattenUp: return "flatten-up";
    case Misreport::kPerturb: return "perturb";
  }
  return "?";
}

/// Value of q copies to a bidder with the given true marginal bids.
inline double true_value(const std::vector<double>& true_bids, std::size_t copies) {
  double v = 0.0;
  for (std::size_t r = 0; r < std::min(copies, true_bids.size()); ++r) v += true_bids[r];
  return v;
}

/// Reported bid list for one misreport, kept non-increasing and positive.
inline std::vector<double> make_misreport(const std::vector<double>& truth, Misreport kind, Rng& rng) {
  std::vector<double> out;
  switch (kind) {
    case Misreport::kScaleDown:
      for (double b : truth) out.push_back(b * rng.uniform(0.05, 1.0));
      break;
    case Misreport::kScaleUp:
      for (double b : truth) out.push_back(b * rng.uniform(1.0, 3.0));
      break;
    case Misreport::kDropSubset:
      for (double b : truth) {
        if (rng.bernoulli(0.5)) out.push_back(b);
      }
      if (out.size() == truth.size() && !out.empty()) out.pop_back();
      break;
    case Misreport::kFlattenUp: {
      const double level = truth.empty() ? 1.0 : truth.front() * rng.uniform(1.0, 2.0);
      out.assign(truth.size(), level);
      break;
    }
    case Misreport::kPerturb:
      for (double b : truth) out.push_back(b * rng.uniform(0.5, 2.0));
      break;
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

struct Deviation {
  std::string bidder;
  Misreport kind = Misreport::kScaleDown;
  std::vector<double> reported;
  double truthful_utility = 0.0;
  double deviating_utility = 0.0;
};

struct TruthReport {
  std::size_t deviations = 0;
  std::size_t violations = 0;
  double max_gain = -std::numeric_limits<double>::infinity();
  std::map<std::string, std::size_t> by_kind;
  std::vector<Deviation> violating;
};

/// Utility gains below this (relative to the bidder's truthful value) are
/// treated as floating-point noise from re-ordered payment sums.
inline constexpr double kTruthTolerance = 1e-9;

/// Samples (bidder, misreport) pairs and reruns the mechanism with every coin
/// held fixed, comparing the deviator's true utility against truthful bidding.
inline TruthReport check_truthfulness(const BidProfile& profile, const MechanismConfig& config,
                                      std::size_t num_deviations, std::uint64_t deviation_seed) {
  const MechanismOutcome truthful = run_mechanism(profile, config);
  std::vector<std::size_t> candidates;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    if (!profile.bidders()[k].bids.empty()) candidates.push_back(k);
  }
  TruthReport report;
  if (candidates.empty()) return report;

  for (std::size_t d = 0; d < num_deviations; ++d) {
    Rng rng = Rng(deviation_seed).split(static_cast<std::uint64_t>(d));
    const std::size_t who = candidates[rng.uniform_int(0, candidates.size() - 1)];
    const auto kind = static_cast<Misreport>(rng.uniform_int(0, kMisreportKinds - 1));
    const Bidder& bidder = profile.bidders()[who];

    std::vector<Bidder> lied = profile.bidders();
    lied[who].bids = make_misreport(bidder.bids, kind, rng);
    const BidProfile reported(std::move(lied));

    double lying_utility = 0.0;
    if (reported.total_bids() > 0) {
      const MechanismOutcome outcome = run_mechanism(reported, config);
      lying_utility = true_value(bidder.bids, outcome.quantities[who]) - outcome.payments[who];
    }
    const double honest_utility = true_value(bidder.bids, truthful.quantities[who]) - truthful.payments[who];
    const double gain = lying_utility - honest_utility;

    ++report.deviations;
    ++report.by_kind[to_string(kind)];
    report.max_gain = std::max(report.max_gain, gain);
    if (gain > kTruthTolerance * std::max(1.0, true_value(bidder.bids, bidder.bids.size()))) {
      ++report.violations;
      report.violating.push_back({bidder.id, kind, reported.bidders()[who].bids, honest_utility, lying_utility});
    }
  }
  return report;
}

// Revenue experiment ---------------------------------------------------------

struct RevenueExperimentConfig {
  std::size_t supply = 0;
  double gamma = 0.0;
  double delta = 0.05;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct RevenueStats {
  std::size_t trials = 0;
  double opt = 0.0;
  double epsilon = 0.0;  // 8 * gamma
  double mean_revenue = 0.0;
  double stderr_revenue = 0.0;
  /// Mean over trials of min(ALG/OPT) of the allocator on the two halves.
  double mean_alpha = 0.0;
  double min_alpha = 1.0;
  /// Trials with revenue >= alpha_trial * (1 - epsilon) * OPT.
  double fraction_meeting_bound = 0.0;
  /// Trials with OPT(S, ceil(M/2)) + OPT(T, floor(M/2)) > (1 - 2 gamma) OPT.
  double fraction_split_concentrated = 0.0;
  /// Trials with |n(S,p) - n(B,p)/2| <= gamma n(B,p) at every p in Q.
  double fraction_counts_concentrated = 0.0;
  /// 1 - 2|Q| exp(-2 gamma^2 / eta); may be vacuous (<= 0).
  double counts_concentration_bound = 0.0;
  double eta = 0.0;
  std::size_t distinct_prices = 0;
  /// Sufficient condition 2 gamma^2 (1/2 - gamma) / eta > log(4|Q| / delta).
  double hypothesis_lhs = 0.0;
  double hypothesis_rhs = 0.0;
  bool hypothesis_satisfied = false;
};

namespace detail {

inline double ratio_or_one(double alg, double opt) { return opt > 0.0 ? alg / opt : 1.0; }

struct ExperimentAccumulator {
  Moments revenue;
  Moments alpha;
  double min_alpha = 1.0;
  std::size_t meeting = 0;
  std::size_t split_ok = 0;
  std::size_t counts_ok = 0;

  void merge(const ExperimentAccumulator& o) {
    revenue.merge(o.revenue);
    alpha.merge(o.alpha);
    min_alpha = std::min(min_alpha, o.min_alpha);
    meeting += o.meeting;
    split_ok += o.split_ok;
    counts_ok += o.counts_ok;
  }
};

/// |n(S,p) - n(B,p)/2| <= gamma n(B,p) at every distinct price p, with n
/// counting bids >= p.
inline bool counts_concentrated(const RevenueCurve& full, const std::vector<bool>& in_s, double gamma) {
  std::size_t n_all = 0;
  std::size_t n_s = 0;
  const auto prices = full.prices();
  const auto owners = full.owners();
  for (std::size_t i = 0; i < prices.size(); ++i) {
    ++n_all;
    if (in_s[owners[i].bidder]) ++n_s;
    if (i + 1 == prices.size() || prices[i + 1] != prices[i]) {
      const double dev = std::abs(static_cast<double>(n_s) - static_cast<double>(n_all) / 2.0);
      if (dev > gamma * static_cast<double>(n_all)) return false;
    }
  }
  return true;
}

}  // namespace detail

/// Monte Carlo over partition and allocator coins; trial t uses
/// derive_seed(seed, t) as the mechanism seed.
inline RevenueStats revenue_experiment(const BidProfile& profile, const RevenueExperimentConfig& config) {
  if (config.trials < 1) throw Error(ErrorCode::kInvalidConfig, "trials must be >= 1");
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw Error(ErrorCode::kInvalidConfig, "delta must lie in (0,1)");
  validate(MechanismConfig{config.supply, config.gamma, config.seed, Pacing::kCrossGroup});

  const RevenueCurve full = build_revenue_curve(profile);
  RevenueStats stats;
  stats.trials = config.trials;
  stats.opt = opt_revenue(full, config.supply).revenue;
  stats.epsilon = 8.0 * config.gamma;
  stats.eta = stats.opt > 0.0 ? max_bidder_mass(profile) / stats.opt : std::numeric_limits<double>::infinity();

  std::size_t distinct = 0;
  const auto fp = full.prices();
  for (std::size_t i = 0; i < fp.size(); ++i) {
    if (i == 0 || fp[i] != fp[i - 1]) ++distinct;
  }
  stats.distinct_prices = distinct;
  const double q = static_cast<double>(distinct);
  stats.counts_concentration_bound = 1.0 - 2.0 * q * std::exp(-2.0 * config.gamma * config.gamma / stats.eta);
  stats.hypothesis_lhs = 2.0 * config.gamma * config.gamma * (0.5 - config.gamma) / stats.eta;
  stats.hypothesis_rhs = std::log(4.0 * q / config.delta);
  stats.hypothesis_satisfied = stats.hypothesis_lhs > stats.hypothesis_rhs;

  const std::size_t half_up = (config.supply + 1) / 2;
  const std::size_t half_down = config.supply / 2;
  const double threshold_split = (1.0 - 2.0 * config.gamma) * stats.opt;

  auto trial = [&](std::size_t t, detail::ExperimentAccumulator& acc) {
    const std::uint64_t trial_seed = derive_seed(config.seed, static_cast<std::uint64_t>(t));
    const MechanismOutcome out = run_mechanism(profile, config.supply, config.gamma, trial_seed);
    acc.revenue.add(out.revenue);

    double opt_s = 0.0;
    double opt_t = 0.0;
    double alpha = 1.0;
    if (!out.curve_s.empty()) {
      opt_s = opt_revenue(out.curve_s, half_up).revenue;
      alpha = std::min(alpha, detail::ratio_or_one(expected_revenue(out.curve_s, half_up), opt_s));
    }
    if (!out.curve_t.empty() && half_down > 0) {
      opt_t = opt_revenue(out.curve_t, half_down).revenue;
      alpha = std::min(alpha, detail::ratio_or_one(expected_revenue(out.curve_t, half_down), opt_t));
    }
    acc.alpha.add(alpha);
    acc.min_alpha = std::min(acc.min_alpha, alpha);
    if (out.revenue >= alpha * (1.0 - stats.epsilon) * stats.opt) ++acc.meeting;
    if (opt_s + opt_t > threshold_split) ++acc.split_ok;
    if (detail::counts_concentrated(full, out.partition.in_s, config.gamma)) ++acc.counts_ok;
  };
  const auto acc = parallel_trials<detail::ExperimentAccumulator>(
      config.trials, config.workers, [] { return detail::ExperimentAccumulator{}; }, trial);

  const double n = static_cast<double>(config.trials);
  stats.mean_revenue = acc.revenue.mean();
  stats.stderr_revenue = acc.revenue.stderr_of_mean();
  stats.mean_alpha = acc.alpha.mean();
  stats.min_alpha = acc.min_alpha;
  stats.fraction_meeting_bound = static_cast<double>(acc.meeting) / n;
  stats.fraction_split_concentrated = static_cast<double>(acc.split_ok) / n;
  stats.fraction_counts_concentrated = static_cast<double>(acc.counts_ok) / n;
  return stats;
}

}  // namespace perishable
