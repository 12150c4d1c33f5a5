#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "perishable/exact_analyzer.hpp"
#include "perishable/instance.hpp"

using namespace perishable;

namespace {

RevenueCurve two_peak_curve() {
  return build_revenue_curve(BidProfile({{"a", {10}}, {"b", {3, 3, 3}}, {"c", {3, 3}}}));
}

std::vector<std::pair<std::size_t, std::size_t>> as_pairs(const CriticalPointSequence& cps) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& p : cps.peaks()) out.emplace_back(p.start, p.end);
  return out;
}

}  // namespace

TEST(WaitChain, MarginalsUniformAndRowsStochastic) {
  const CriticalPointSequence cps({{1, 1}, {3, 3}, {9, 10}, {12, 12}, {20, 25}});
  WaitChainDistribution<Rational> chain(cps);
  for (std::size_t i = 1; i <= chain.phases(); ++i) {
    const auto& law = chain.marginal(i);
    const std::size_t d = chain.bound(i);
    EXPECT_EQ(law[0], Rational(0));
    for (std::size_t k = 1; k <= d; ++k) EXPECT_EQ(law[k], Rational(1, d)) << "i=" << i << " k=" << k;
    for (std::size_t j = 0; j <= chain.bound(i - 1); ++j) {
      if (i > 1 && j == 0) continue;
      Rational row(0);
      for (std::size_t k = 0; k <= d; ++k) row += chain.transition(i, j, k);
      EXPECT_EQ(row, Rational(1));
    }
  }
}

TEST(WaitChain, CouplingIsMonotone) {
  const CriticalPointSequence cps({{1, 1}, {4, 5}, {11, 11}});
  WaitChainDistribution<Rational> chain(cps);
  for (std::size_t j = 1; j <= chain.bound(1); ++j) {
    for (std::size_t k = 0; k < j; ++k) EXPECT_EQ(chain.transition(2, j, k), Rational(0));
  }
}

TEST(OutcomeDistribution, MonotoneIsDeterministic) {
  const auto curve = RevenueCurve::from_values({1, 2, 3, 4, 5});
  for (std::size_t m = 1; m <= 8; ++m) {
    const auto law = outcome_distribution<Rational>(curve, m);
    EXPECT_EQ(law.probability(std::min<std::size_t>(m, 5)), Rational(1));
    EXPECT_DOUBLE_EQ(law.expected_revenue, curve.revenue(std::min<std::size_t>(m, 5)));
  }
}

TEST(OutcomeDistribution, TwoPeakSupplyThree) {
  // Frozen from the path-enumeration oracle: W_1 in {1,2,3}; W_1 = 1 leaves one
  // copy to allocate, otherwise the run is still waiting at b_1 = 1.
  const auto law = outcome_distribution<Rational>(two_peak_curve(), 3);
  EXPECT_EQ(law.probability(1), Rational(2, 3));
  EXPECT_EQ(law.probability(2), Rational(1, 3));
  EXPECT_EQ(law.total(), Rational(1));
  EXPECT_DOUBLE_EQ(law.expected_revenue, 26.0 / 3.0);
  EXPECT_EQ(law.bracket, 1u);
  EXPECT_EQ(law.residual, 2u);
}

TEST(OutcomeDistribution, SpikeAtHalf) {
  const auto curve = build_revenue_curve(gen_spike(0.01, 400));
  const double x = 0.5;
  EXPECT_NEAR(expected_revenue(curve, 50), 1 - x + x * x / 2, 0.02);
}

TEST(OutcomeDistribution, SpikeHalfEpsilonIsOne) {
  EXPECT_DOUBLE_EQ(expected_revenue(build_revenue_curve(gen_spike(0.5, 3)), 2), 1.0);
}

TEST(OutcomeDistribution, MatchesPathOracle) {
  std::size_t compared = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto profile = seed % 3 == 0 ? gen_random_profile(6, 3, seed) : gen_multipeak(2 + seed % 3, seed);
    const auto curve = build_revenue_curve(profile);
    const auto cps = find_critical_points(curve);
    std::size_t paths = 1;
    for (std::size_t i = 1; i < cps.phases(); ++i) paths *= cps.wait_bound(i);
    if (paths > 20000) continue;
    for (std::size_t m = 1; m <= curve.size() + 4; ++m) {
      const auto expected = oracle::outcome_law(as_pairs(cps), m);
      const auto law = outcome_distribution<Rational>(curve, cps, m);
      ASSERT_EQ(law.support.size(), expected.size()) << "seed " << seed << " m " << m;
      for (const auto& [x, p] : expected) EXPECT_EQ(law.probability(x), p) << "x=" << x;
      ++compared;
    }
  }
  EXPECT_GT(compared, 200u);
}

TEST(OutcomeDistribution, DoubleAgreesWithRational) {
  const auto curve = build_revenue_curve(gen_multipeak(4, 21));
  const auto cps = find_critical_points(curve);
  for (std::size_t m = 1; m <= curve.size() + 3; ++m) {
    const auto exact = outcome_distribution<Rational>(curve, cps, m);
    const auto approx = outcome_distribution<double>(curve, cps, m);
    EXPECT_NEAR(approx.expected_revenue, exact.expected_revenue, 1e-9);
    EXPECT_NEAR(approx.total(), 1.0, 1e-12);
  }
}

TEST(RationalMode, EligibilityLimit) {
  EXPECT_TRUE(rational_eligible(CriticalPointSequence({{1, 1}, {1001, 1001}})));
  EXPECT_FALSE(rational_eligible(CriticalPointSequence({{1, 1}, {1003, 1003}})));
}

TEST(CaseClassify, TwoPeakTags) {
  const auto curve = two_peak_curve();
  EXPECT_EQ(case_classify(curve, 3).tag, CaseTag::k1a);
  EXPECT_EQ(case_classify(curve, 4).tag, CaseTag::k1a);  // M = a_2 stays in case 1
  const auto five = case_classify(curve, 5);
  EXPECT_TRUE(five.tag == CaseTag::k2a || five.tag == CaseTag::k2b || five.tag == CaseTag::k2c);
  EXPECT_EQ(five.tag, CaseTag::k2a);
  EXPECT_EQ(case_classify(curve, 7).tag, CaseTag::kTerminal);
  try {
    case_classify(curve, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateBelowFirstPeak);
  }
  EXPECT_EQ(case_label(find_critical_points(curve), 1), "below");
  EXPECT_EQ(case_label(find_critical_points(curve), 9), "terminal");
}

TEST(CaseClassify, OrderingsCoverEveryRow) {
  using detail::order_case;
  EXPECT_EQ(order_case(5, 3, 6), CaseTag::k1a);
  EXPECT_EQ(order_case(3, 4, 6), CaseTag::k1b);
  EXPECT_EQ(order_case(3, 6, 6), CaseTag::k1c);
  EXPECT_EQ(order_case(8, 4, 6), CaseTag::k2a);
  EXPECT_EQ(order_case(7, 9, 6), CaseTag::k2b);
  EXPECT_EQ(order_case(10, 9, 6), CaseTag::k2c);
}

TEST(Table1, RowValues) {
  CaseAnalysis a;
  a.tag = CaseTag::k1a;
  a.residual = 2;
  a.bound = 3;
  const auto row = table1_probabilities<Rational>(a);
  EXPECT_EQ(row[0], Rational(0));
  EXPECT_EQ(row[1], Rational(1, 3));
  EXPECT_EQ(row[2], Rational(2, 3));

  a.tag = CaseTag::k2a;
  const auto two_a = table1_probabilities<Rational>(a);
  EXPECT_EQ(two_a[2], Rational(1));

  a.tag = CaseTag::k1b;
  a.prev_bound = 4;
  a.bound = 7;
  a.residual = 3;
  const auto one_b = table1_probabilities<Rational>(a);
  EXPECT_EQ(one_b[0] + one_b[1] + one_b[2], Rational(1));
  EXPECT_EQ(one_b[1], Rational(3, 4) - Rational(3, 7));

  a.tag = CaseTag::kTerminal;
  EXPECT_THROW(table1_probabilities<Rational>(a), Error);
}

TEST(Table1, DiscreteDpMovesOneAtom) {
  // The integer wait count puts 1/D_i on W_i = M', where the allocator is still at
  // b_i; the continuous row counts that mass as X > b_i.
  const auto curve = two_peak_curve();
  const auto cps = find_critical_points(curve);
  const auto a = case_classify(curve, cps, 3);
  const auto row = table1_probabilities<Rational>(a);
  const auto law = outcome_distribution<Rational>(curve, cps, 3);
  const Rational atom = boundary_atom<Rational>(a);
  EXPECT_EQ(atom, Rational(1, 3));
  EXPECT_EQ(law.probability(1), row[1] + atom);
  EXPECT_EQ(law.probability_above(1), row[2] - atom);
}

TEST(Sweep, MonotoneRatioOne) {
  const auto sweep = competitive_ratio_sweep(RevenueCurve::from_values({2, 4, 6, 8}), 10);
  ASSERT_EQ(sweep.rows.size(), 10u);
  for (const auto& row : sweep.rows) EXPECT_DOUBLE_EQ(row.ratio, 1.0);
  EXPECT_DOUBLE_EQ(sweep.min_ratio, 1.0);
}

TEST(Sweep, SpikeHalf) {
  const auto sweep = competitive_ratio_sweep(build_revenue_curve(gen_spike(0.01, 400)), 300);
  EXPECT_GE(sweep.min_ratio, 0.5 - 0.01);
}

TEST(Smoothness, Examples) {
  EXPECT_DOUBLE_EQ(smoothness_bound(find_critical_points(two_peak_curve())), 0.75);
  EXPECT_DOUBLE_EQ(smoothness_bound(find_critical_points(RevenueCurve::from_values({1, 2, 3}))), 0.0);
}
