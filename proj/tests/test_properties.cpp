// Seeded property checks over generated instances.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "perishable/exact_analyzer.hpp"
#include "perishable/mechanism.hpp"
#include "perishable/online_allocator.hpp"

using namespace perishable;

namespace {

BidProfile instance_for(std::uint64_t seed) {
  switch (seed % 3) {
    case 0: return gen_random_profile(4 + seed % 7, 4, seed);
    case 1: return gen_multipeak(1 + seed % 4, seed);
    default: return gen_spike(0.05 + 0.01 * static_cast<double>(seed % 20), 10 + seed % 30);
  }
}

}  // namespace

TEST(AllocatorProperties, StateInvariants) {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const auto curve = build_revenue_curve(instance_for(seed));
    const auto cps = find_critical_points(curve);
    OnlineAllocator alloc(cps, seed * 7 + 1);
    double budget = 0.0;
    for (std::size_t k = 1; k <= 2 * curve.size() + 10; ++k) {
      const Decision d = alloc.step();
      EXPECT_GE(alloc.wait_budget(), budget);
      budget = alloc.wait_budget();
      EXPECT_LE(static_cast<double>(alloc.discarded()), std::ceil(budget));
      EXPECT_EQ(alloc.consumed(), k);
      if (alloc.mode() != Mode::kHalt) {
        EXPECT_EQ(alloc.allocated() + alloc.discarded(), k);
      }
      if (alloc.mode() == Mode::kWait) {
        EXPECT_EQ(alloc.allocated(), cps.peak_end(alloc.phase()));
        EXPECT_FALSE(cps.is_terminal(alloc.phase()));
      }
      if (d == Decision::kHalted) {
        EXPECT_EQ(alloc.allocated(), cps.peak_end(cps.phases()));
      }
    }
  }
}

TEST(AnalyzerProperties, DistributionIsProper) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto curve = build_revenue_curve(instance_for(seed));
    const auto cps = find_critical_points(curve);
    for (std::size_t m = 1; m <= 2 * curve.size(); m += 1 + m / 10) {
      const auto law = outcome_distribution<Rational>(curve, cps, m);
      EXPECT_EQ(law.total(), Rational(1));
      double alg = 0.0;
      for (const auto& [x, p] : law.support) {
        EXPECT_LE(x, m);
        alg += to_double(p) * curve.revenue(x);
      }
      EXPECT_NEAR(law.expected_revenue, alg, 1e-12 * std::max(1.0, alg));
    }
  }
}

TEST(AnalyzerProperties, HalfCompetitiveWithCeilingSlack) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto curve = build_revenue_curve(instance_for(seed));
    const auto cps = find_critical_points(curve);
    const auto sweep = competitive_ratio_sweep(curve, 2 * curve.size());
    EXPECT_GE(sweep.min_ratio, 0.5 - 1.0 / (2.0 * static_cast<double>(cps.peak_end(1))) - 1e-12) << "seed " << seed;
  }
}

TEST(AnalyzerProperties, SampleMeanNearExact) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto curve = build_revenue_curve(instance_for(seed));
    const std::size_t m = curve.size();
    Moments mc;
    for (std::uint64_t t = 0; t < 20000; ++t) mc.add(run(curve, m, derive_seed(seed, t)).revenue);
    EXPECT_NEAR(mc.mean(), expected_revenue(curve, m), 4 * mc.stderr_of_mean() + 1e-9 * std::max(1.0, mc.mean()));
  }
}

TEST(VcgProperties, NonnegativeAndLoserIrrelevant) {
  for (std::uint64_t seed = 0; seed < 80; ++seed) {
    const auto profile = gen_random_profile(5, 3, seed);
    const std::size_t k = 1 + seed % profile.total_bids();
    const auto curve = build_revenue_curve(profile);
    const auto r = vcg_on_curve(curve, profile.size(), k);
    for (double p : r.payments) EXPECT_GE(p, 0.0);
    for (std::size_t i = 0; i < profile.size(); ++i) {
      if (r.quantities[i] != 0) continue;
      std::vector<bool> keep(profile.size(), true);
      keep[i] = false;
      const auto without = vcg_on_curve(RevenueCurve::restrict(curve, keep), profile.size(), k);
      // A loser's bids sit below the cut-off; removing them can only lower
      // the others' externalities, never raise them.
      for (std::size_t j = 0; j < profile.size(); ++j) {
        if (j == i) continue;
        EXPECT_EQ(without.quantities[j], r.quantities[j]);
        EXPECT_LE(without.payments[j], r.payments[j] + 1e-12);
      }
    }
  }
}

TEST(MechanismProperties, OtherSideMutationsKeepCaps) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto base = gen_random_profile(8, 3, seed);
    const auto ref = run_mechanism(base, 24, 0.0125, seed);
    Rng rng(seed);
    std::vector<Bidder> changed = base.bidders();
    for (std::size_t k = 0; k < changed.size(); ++k) {
      if (!ref.partition.in_s[k]) {
        for (double& b : changed[k].bids) b = std::max(0.01, b * rng.uniform(0.2, 3.0));
        std::sort(changed[k].bids.begin(), changed[k].bids.end(), std::greater<>());
      }
    }
    const auto out = run_mechanism(BidProfile(changed), 24, 0.0125, seed);
    EXPECT_EQ(out.caps_t, ref.caps_t);
    EXPECT_EQ(out.fictitious_s, ref.fictitious_s);
  }
}
