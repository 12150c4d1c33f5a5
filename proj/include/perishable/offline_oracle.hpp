#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "perishable/instance.hpp"

namespace perishable {

/// Best single-price sale for a given supply.
struct OptResult {
  std::size_t quantity = 0;
  double price = 0.0;
  double revenue = 0.0;

  friend bool operator==(const OptResult&, const OptResult&) = default;
};

/// max over 1 <= l <= min(supply, n) of f(l), ties to the smallest l.
/// Zero supply sells nothing.
inline OptResult opt_revenue(const RevenueCurve& curve, std::size_t supply) {
  OptResult best;
  const std::size_t limit = std::min(supply, curve.size());
  for (std::size_t l = 1; l <= limit; ++l) {
    if (curve.revenue(l) > best.revenue) best = {l, curve.price(l), curve.revenue(l)};
  }
  return best;
}

/// opt_revenue for every supply 1..max_supply in one pass.
inline std::vector<OptResult> opt_curve(const RevenueCurve& curve, std::size_t max_supply) {
  std::vector<OptResult> out;
  out.reserve(max_supply);
  OptResult best;
  for (std::size_t m = 1; m <= max_supply; ++m) {
    if (m <= curve.size() && curve.revenue(m) > best.revenue) best = {m, curve.price(m), curve.revenue(m)};
    out.push_back(best);
  }
  return out;
}

}  // namespace perishable
