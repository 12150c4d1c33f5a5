#pragma once

// Test-only reference implementations. Each one recomputes a library result
// from its definition, without sharing code with the library.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

using Rational = boost::multiprecision::cpp_rational;

/// Prices sorted high to low from raw bid lists.
inline std::vector<double> sorted_prices(const std::vector<std::vector<double>>& bids) {
  std::vector<double> out;
  for (const auto& b : bids) out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

inline std::vector<double> revenues(const std::vector<double>& prices) {
  std::vector<double> f(prices.size());
  for (std::size_t i = 0; i < prices.size(); ++i) f[i] = static_cast<double>(i + 1) * prices[i];
  return f;
}

/// Peaks as (start, end), 1-based. Ends are the prefix-record local maxima of
/// f; each later start is the first position reaching the previous end's value.
inline std::vector<std::pair<std::size_t, std::size_t>> critical_points(const std::vector<double>& f) {
  const std::size_t n = f.size();
  std::vector<std::size_t> ends;
  double best = -1.0;
  for (std::size_t l = 1; l <= n; ++l) {
    const bool record = f[l - 1] >= best;
    best = std::max(best, f[l - 1]);
    const bool local_max = l == n || f[l] < f[l - 1];
    if (record && local_max) ends.push_back(l);
  }
  std::vector<std::pair<std::size_t, std::size_t>> peaks;
  std::size_t start = 1;
  for (std::size_t e : ends) {
    peaks.emplace_back(start, e);
    start = e + 1;
    while (start <= n && f[start - 1] < f[e - 1]) ++start;
  }
  return peaks;
}

/// Best single price: p * min(#bids >= p, supply) over bid values p.
inline double opt_revenue(const std::vector<double>& prices, std::size_t supply) {
  double best = 0.0;
  for (double p : prices) {
    std::size_t count = 0;
    for (double q : prices) count += q >= p ? 1 : 0;
    best = std::max(best, p * static_cast<double>(std::min(count, supply)));
  }
  return best;
}

/// Value of the first q bids of one bidder.
inline double value_of(const std::vector<double>& bids, std::size_t q) {
  return std::accumulate(bids.begin(), bids.begin() + static_cast<std::ptrdiff_t>(q), 0.0);
}

/// Max welfare from at most `copies` copies over the bidders not excluded.
inline double best_welfare(const std::vector<std::vector<double>>& bids, std::size_t copies, std::size_t excluded) {
  double best = 0.0;
  std::vector<std::size_t> q(bids.size(), 0);
  std::function<void(std::size_t, std::size_t, double)> rec = [&](std::size_t k, std::size_t left, double acc) {
    if (k == bids.size()) {
      best = std::max(best, acc);
      return;
    }
    if (k == excluded) {
      rec(k + 1, left, acc);
      return;
    }
    for (std::size_t take = 0; take <= std::min(left, bids[k].size()); ++take) {
      rec(k + 1, left - take, acc + value_of(bids[k], take));
    }
  };
  rec(0, copies, 0.0);
  return best;
}

struct VcgCheck {
  bool efficient = false;
  std::vector<double> payments;
};

/// For a proposed allocation: is it welfare-maximal, and what are the
/// welfare-difference payments h_i - (others' value under the allocation)?
inline VcgCheck vcg(const std::vector<std::vector<double>>& bids, std::size_t copies,
                    const std::vector<std::size_t>& quantities) {
  VcgCheck out;
  double total = 0.0;
  for (std::size_t i = 0; i < bids.size(); ++i) total += value_of(bids[i], quantities[i]);
  const double optimum = best_welfare(bids, copies, bids.size());
  out.efficient = total == optimum;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    const double others_now = total - value_of(bids[i], quantities[i]);
    out.payments.push_back(quantities[i] == 0 ? 0.0 : best_welfare(bids, copies, i) - others_now);
  }
  return out;
}

/// Exact law of the allocated count after `supply` copies, by enumerating
/// every path of the integer wait counts W_1 <= W_2 <= ... and replaying the
/// allocator deterministically on each path.
inline std::map<std::size_t, Rational> outcome_law(const std::vector<std::pair<std::size_t, std::size_t>>& peaks,
                                                   std::size_t supply) {
  const std::size_t k_total = peaks.size();
  std::vector<std::size_t> bound(k_total + 1, 0);
  for (std::size_t i = 1; i < k_total; ++i) {
    bound[i] = std::max(bound[i - 1], peaks[i].first - peaks[i - 1].second);
  }
  if (k_total >= 1) bound[k_total] = bound[k_total - 1];

  // Replay with discards fixed per phase by the path: allocate to end_i, then
  // discard until the cumulative discards reach W_i, then go on.
  auto replay = [&](const std::vector<std::size_t>& waits) {
    std::size_t copies = 0;
    std::size_t allocated = 0;
    std::size_t discarded = 0;
    for (std::size_t i = 0; i < k_total; ++i) {
      while (allocated < peaks[i].second) {
        if (copies == supply) return allocated;
        ++copies;
        ++allocated;
      }
      if (i + 1 == k_total) return allocated;
      while (discarded < waits[i]) {
        if (copies == supply) return allocated;
        ++copies;
        ++discarded;
      }
    }
    return allocated;
  };

  std::map<std::size_t, Rational> law;
  std::vector<std::size_t> waits;
  std::function<void(std::size_t, std::size_t, Rational)> rec = [&](std::size_t i, std::size_t prev, Rational p) {
    if (i + 1 >= k_total) {
      law[replay(waits)] += p;
      return;
    }
    const std::size_t lo = bound[i];
    const std::size_t hi = bound[i + 1];
    if (lo == hi) {
      waits.push_back(prev);
      rec(i + 1, prev, p);
      waits.pop_back();
      return;
    }
    if (lo > 0) {
      waits.push_back(prev);
      rec(i + 1, prev, p * Rational(lo, hi));
      waits.pop_back();
    }
    for (std::size_t w = lo + 1; w <= hi; ++w) {
      waits.push_back(w);
      rec(i + 1, w, p * Rational(1, hi));
      waits.pop_back();
    }
  };
  // Phase 1's wait count starts uniform on 1..D_1 (W_0 = 0).
  rec(0, 0, Rational(1));
  return law;
}

}  // namespace oracle
