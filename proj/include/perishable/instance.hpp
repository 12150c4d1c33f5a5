#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "perishable/errors.hpp"
#include "perishable/rng.hpp"

namespace perishable {

/// One bidder: an opaque id and its marginal bids, highest first.
struct Bidder {
  std::string id;
  std::vector<double> bids;

  friend bool operator==(const Bidder&, const Bidder&) = default;
};

/// A validated set of bidders with decreasing marginal bids.
///
/// Bidders are kept in canonical order (ascending id); every bid is finite and
/// positive and each bidder's list is non-increasing. A bidder may hold no bids.
class BidProfile {
 public:
  BidProfile() = default;

  explicit BidProfile(std::vector<Bidder> bidders) : bidders_(std::move(bidders)) {
    std::sort(bidders_.begin(), bidders_.end(),
              [](const Bidder& a, const Bidder& b) { return a.id < b.id; });
    for (std::size_t k = 0; k < bidders_.size(); ++k) {
      const Bidder& bidder = bidders_[k];
      if (k > 0 && bidders_[k - 1].id == bidder.id) {
        throw Error(ErrorCode::kInvalidConfig, "duplicate bidder id '" + bidder.id + "'");
      }
      for (std::size_t p = 0; p < bidder.bids.size(); ++p) {
        const double bid = bidder.bids[p];
        if (!std::isfinite(bid) || bid <= 0.0) {
          throw Error(ErrorCode::kInvalidBid, "bidder '" + bidder.id + "' bid #" + std::to_string(p) +
                                                  " must be finite and positive");
        }
        if (p > 0 && bid > bidder.bids[p - 1]) {
          throw Error(ErrorCode::kInvalidBid, "bidder '" + bidder.id +
                                                  "' marginal bids must be non-increasing (bid #" +
                                                  std::to_string(p) + ")");
        }
      }
    }
  }

  const std::vector<Bidder>& bidders() const noexcept { return bidders_; }
  std::size_t size() const noexcept { return bidders_.size(); }
  bool empty() const noexcept { return bidders_.empty(); }

  std::size_t total_bids() const noexcept {
    std::size_t total = 0;
    for (const auto& b : bidders_) total += b.bids.size();
    return total;
  }

  /// Index of `id` in canonical order, or size() when absent.
  std::size_t index_of(std::string_view id) const {
    auto it = std::lower_bound(bidders_.begin(), bidders_.end(), id,
                               [](const Bidder& b, std::string_view v) { return b.id < v; });
    if (it == bidders_.end() || it->id != id) return bidders_.size();
    return static_cast<std::size_t>(it - bidders_.begin());
  }

  /// Sub-profile of the bidders whose flag is set (flags indexed canonically).
  BidProfile subset(const std::vector<bool>& keep) const {
    BidProfile out;
    for (std::size_t k = 0; k < bidders_.size(); ++k) {
      if (keep[k]) out.bidders_.push_back(bidders_[k]);
    }
    return out;
  }

  friend bool operator==(const BidProfile&, const BidProfile&) = default;

 private:
  std::vector<Bidder> bidders_;
};

/// Owner of one flattened bid: canonical bidder index and position in its list.
struct BidOwner {
  std::size_t bidder = 0;
  std::size_t position = 0;

  friend bool operator==(const BidOwner&, const BidOwner&) = default;
};

/// Single-price revenue curve f(l) = l * u_l over sorted prices u_1 >= ... >= u_n.
///
/// Quantities are 1-based throughout: revenue(l) is the revenue of selling l
/// copies, and revenue(0) == 0.
class RevenueCurve {
 public:
  enum class Origin { kFromBids, kGenericF };

  /// Flattens every marginal bid and sorts by (bid desc, bidder id asc, position asc).
  static RevenueCurve from_bids(const BidProfile& profile) {
    struct Entry {
      double bid;
      BidOwner owner;
    };
    std::vector<Entry> entries;
    entries.reserve(profile.total_bids());
    for (std::size_t k = 0; k < profile.size(); ++k) {
      const auto& bids = profile.bidders()[k].bids;
      for (std::size_t p = 0; p < bids.size(); ++p) entries.push_back({bids[p], {k, p}});
    }
    if (entries.empty()) throw Error(ErrorCode::kEmptyInstance, "profile holds no bids");
    // Entries are generated in (id, position) order, so a stable sort on the bid
    // alone realises the full tie-break.
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.bid > b.bid; });

    RevenueCurve curve;
    curve.origin_ = Origin::kFromBids;
    curve.prices_.reserve(entries.size());
    curve.revenues_.reserve(entries.size());
    curve.owners_.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      curve.prices_.push_back(entries[i].bid);
      curve.revenues_.push_back(static_cast<double>(i + 1) * entries[i].bid);
      curve.owners_.push_back(entries[i].owner);
    }
    return curve;
  }

  /// Wraps an arbitrary tabulated f(1..n). f must be finite, positive, and
  /// sublinear: f(l+1)/(l+1) <= f(l)/l up to 1e-12 relative.
  static RevenueCurve from_values(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::kEmptyInstance, "tabulated f is empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i]) || values[i] <= 0.0) {
        throw Error(ErrorCode::kInvalidBid, "f(" + std::to_string(i + 1) + ") must be finite and positive");
      }
    }
    RevenueCurve curve;
    curve.origin_ = Origin::kGenericF;
    curve.prices_.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      curve.prices_.push_back(values[i] / static_cast<double>(i + 1));
    }
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (curve.prices_[i] > curve.prices_[i - 1] * (1.0 + 1e-12)) {
        throw Error(ErrorCode::kNotSublinear,
                    "f(l)/l increases at l=" + std::to_string(i + 1));
      }
    }
    curve.revenues_ = std::move(values);
    return curve;
  }

  /// The sub-curve of a bid curve formed by the kept bidders' bids, in the
  /// same relative order. Owners keep their indices into the full profile.
  /// Returns an empty curve when nothing is kept.
  static RevenueCurve restrict(const RevenueCurve& full, const std::vector<bool>& keep_bidder) {
    RevenueCurve curve;
    curve.origin_ = Origin::kFromBids;
    for (std::size_t i = 0; i < full.owners_.size(); ++i) {
      if (!keep_bidder[full.owners_[i].bidder]) continue;
      curve.prices_.push_back(full.prices_[i]);
      curve.revenues_.push_back(static_cast<double>(curve.prices_.size()) * full.prices_[i]);
      curve.owners_.push_back(full.owners_[i]);
    }
    return curve;
  }

  /// A bid curve with no bids, e.g. for an empty group.
  static RevenueCurve none() { return RevenueCurve(); }

  Origin origin() const noexcept { return origin_; }
  std::size_t size() const noexcept { return prices_.size(); }
  bool empty() const noexcept { return prices_.empty(); }

  /// u_l for 1 <= l <= n.
  double price(std::size_t l) const { return prices_.at(l - 1); }

  /// f(l) for 0 <= l <= n.
  double revenue(std::size_t l) const { return l == 0 ? 0.0 : revenues_.at(l - 1); }

  std::span<const double> prices() const noexcept { return prices_; }
  std::span<const double> revenues() const noexcept { return revenues_; }

  /// Owner of the l-th sorted bid (0-based index); empty for generic curves.
  std::span<const BidOwner> owners() const noexcept { return owners_; }

 private:
  RevenueCurve() = default;

  Origin origin_ = Origin::kFromBids;
  std::vector<double> prices_;
  std::vector<double> revenues_;
  std::vector<BidOwner> owners_;
};

inline RevenueCurve build_revenue_curve(const BidProfile& profile) {
  return RevenueCurve::from_bids(profile);
}

/// A maximal non-decreasing run [start, end] of f that tops every earlier value.
struct Peak {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Peak&, const Peak&) = default;
};

/// Peak/valley structure of a revenue curve together with the wait bounds
/// D_i = max_{j<=i}(start_{j+1} - end_j) and thresholds J_i = end_i + D_{i-1}.
///
/// Phases are 1-based (1..K). wait_bound(0) == 0 and, as the last phase has no
/// successor, wait_bound(K) == wait_bound(K-1).
class CriticalPointSequence {
 public:
  CriticalPointSequence() = default;

  explicit CriticalPointSequence(std::vector<Peak> peaks) : peaks_(std::move(peaks)) {
    if (peaks_.empty()) throw Error(ErrorCode::kInvariantViolation, "no peaks");
    wait_bounds_.assign(peaks_.size() + 1, 0);
    for (std::size_t i = 1; i < peaks_.size(); ++i) {
      if (peaks_[i].start <= peaks_[i - 1].end || peaks_[i].end < peaks_[i].start) {
        throw Error(ErrorCode::kInvariantViolation, "peaks must be ordered and disjoint");
      }
      wait_bounds_[i] = std::max(wait_bounds_[i - 1], peaks_[i].start - peaks_[i - 1].end);
    }
    wait_bounds_.back() = wait_bounds_[peaks_.size() - 1];
    thresholds_.reserve(peaks_.size());
    for (std::size_t i = 0; i < peaks_.size(); ++i) {
      thresholds_.push_back(peaks_[i].end + wait_bounds_[i]);
    }
  }

  std::size_t phases() const noexcept { return peaks_.size(); }

  const Peak& peak(std::size_t i) const { return peaks_.at(i - 1); }
  std::size_t peak_start(std::size_t i) const { return peak(i).start; }
  std::size_t peak_end(std::size_t i) const { return peak(i).end; }
  std::size_t wait_bound(std::size_t i) const { return wait_bounds_.at(i); }
  std::size_t threshold(std::size_t i) const { return thresholds_.at(i - 1); }
  bool is_terminal(std::size_t i) const noexcept { return i == peaks_.size(); }

  std::span<const Peak> peaks() const noexcept { return peaks_; }
  /// D_0..D_K.
  std::span<const std::size_t> wait_bounds() const noexcept { return wait_bounds_; }
  /// J_1..J_K.
  std::span<const std::size_t> thresholds() const noexcept { return thresholds_; }

  /// The phase i with end_i < m <= end_{i+1}; 0 when m <= end_1 and K when m > end_K.
  std::size_t bracket(std::size_t m) const {
    auto it = std::lower_bound(peaks_.begin(), peaks_.end(), m,
                               [](const Peak& p, std::size_t v) { return p.end < v; });
    return static_cast<std::size_t>(it - peaks_.begin());
  }

  friend bool operator==(const CriticalPointSequence&, const CriticalPointSequence&) = default;

 private:
  std::vector<Peak> peaks_;
  std::vector<std::size_t> wait_bounds_;
  std::vector<std::size_t> thresholds_;
};

/// Scans f once. A run extends while f(l+1) >= f(l) (plateaus included); the
/// next run starts at the first l whose value reaches the previous run's end
/// value (ties start a new peak).
inline CriticalPointSequence find_critical_points(const RevenueCurve& curve) {
  const auto f = curve.revenues();
  const std::size_t n = f.size();
  std::vector<Peak> peaks;
  std::size_t start = 1;
  while (true) {
    std::size_t end = start;
    while (end < n && f[end] >= f[end - 1]) ++end;
    peaks.push_back({start, end});
    std::size_t next = end + 1;
    while (next <= n && f[next - 1] < f[end - 1]) ++next;
    if (next > n) break;
    start = next;
  }
  return CriticalPointSequence(std::move(peaks));
}

// Generators -----------------------------------------------------------------

namespace detail {

inline std::string numbered_id(std::string_view prefix, std::size_t k, std::size_t width = 5) {
  std::string digits = std::to_string(k);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(prefix) + digits;
}

inline double round_to(double value, double quantum) { return std::round(value / quantum) * quantum; }

}  // namespace detail

/// One bid of 1 plus `count` single-bid bidders at epsilon.
inline BidProfile gen_spike(double epsilon, std::size_t count) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::kInvalidConfig, "spike epsilon must lie in (0,1)");
  if (count < 1) throw Error(ErrorCode::kInvalidConfig, "spike count must be >= 1");
  std::vector<Bidder> bidders;
  bidders.reserve(count + 1);
  bidders.push_back({"spike", {1.0}});
  for (std::size_t k = 0; k < count; ++k) bidders.push_back({detail::numbered_id("e", k), {epsilon}});
  return BidProfile(std::move(bidders));
}

/// Descending price plateaus, each long enough for the curve to climb back over
/// the previous plateau's peak, so every plateau contributes a peak. Bids are
/// dealt to a handful of bidders; each bidder's list is sorted afterwards.
inline BidProfile gen_multipeak(std::size_t num_peaks, std::uint64_t seed) {
  if (num_peaks < 1) throw Error(ErrorCode::kInvalidConfig, "num_peaks must be >= 1");
  Rng rng(derive_seed(seed, "multipeak"));
  std::vector<double> bids;
  double price = detail::round_to(rng.uniform(50.0, 100.0), 0.01);
  std::size_t first = static_cast<std::size_t>(rng.uniform_int(1, 6));
  bids.insert(bids.end(), first, price);

  auto peaks_of = [](const std::vector<double>& sorted) {
    std::vector<Bidder> tmp{{"x", sorted}};
    return find_critical_points(build_revenue_curve(BidProfile(std::move(tmp)))).phases();
  };

  while (peaks_of(bids) < num_peaks) {
    const double total = static_cast<double>(bids.size());
    const double peak_value = total * price;
    // Strict drop right after the current peak: (total+1)*next < peak_value.
    double next = detail::round_to(price * rng.uniform(0.55, 0.9), 0.01);
    while (next > 0.01 && (total + 1.0) * next >= peak_value) next = detail::round_to(next - 0.01, 0.01);
    if (next < 0.01 || (total + 1.0) * next >= peak_value) {
      throw Error(ErrorCode::kInvalidConfig, "cent price grid too coarse for " + std::to_string(num_peaks) + " peaks");
    }
    // Climb back: (total + c) * next >= peak_value, plus a random extension.
    auto climb = static_cast<std::size_t>(std::ceil(peak_value / next - total));
    climb += static_cast<std::size_t>(rng.uniform_int(0, 4));
    bids.insert(bids.end(), std::max<std::size_t>(climb, 1), next);
    price = next;
  }

  const std::size_t num_bidders = 2 + static_cast<std::size_t>(rng.uniform_int(0, 4));
  std::vector<Bidder> bidders(num_bidders);
  for (std::size_t k = 0; k < num_bidders; ++k) bidders[k].id = detail::numbered_id("m", k, 3);
  for (double bid : bids) bidders[rng.uniform_int(0, num_bidders - 1)].bids.push_back(bid);
  for (auto& b : bidders) std::sort(b.bids.begin(), b.bids.end(), std::greater<>());
  return BidProfile(std::move(bidders));
}

/// `num_bidders` bidders, each with 1..max_bids_per_bidder bids drawn uniformly
/// from [1, 100] at cent resolution.
inline BidProfile gen_random_profile(std::size_t num_bidders, std::size_t max_bids_per_bidder,
                                     std::uint64_t seed) {
  if (num_bidders < 1 || max_bids_per_bidder < 1) {
    throw Error(ErrorCode::kInvalidConfig, "num_bidders and max_bids_per_bidder must be >= 1");
  }
  Rng rng(derive_seed(seed, "random-profile"));
  std::vector<Bidder> bidders(num_bidders);
  for (std::size_t k = 0; k < num_bidders; ++k) {
    bidders[k].id = detail::numbered_id("r", k);
    const auto count = static_cast<std::size_t>(rng.uniform_int(1, max_bids_per_bidder));
    for (std::size_t c = 0; c < count; ++c) {
      bidders[k].bids.push_back(detail::round_to(rng.uniform(1.0, 100.0), 0.01));
    }
    std::sort(bidders[k].bids.begin(), bidders[k].bids.end(), std::greater<>());
  }
  return BidProfile(std::move(bidders));
}

}  // namespace perishable
