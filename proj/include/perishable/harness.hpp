#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "perishable/errors.hpp"
#include "perishable/exact_analyzer.hpp"
#include "perishable/instance.hpp"
#include "perishable/instance_io.hpp"
#include "perishable/mechanism.hpp"
#include "perishable/offline_oracle.hpp"
#include "perishable/online_allocator.hpp"
#include "perishable/rng.hpp"
#include "perishable/trials.hpp"

#ifndef PERISHABLE_VERSION
#define PERISHABLE_VERSION "unknown"
#endif

namespace perishable {

using ojson = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

struct RunConfig {
  std::string command;
  std::optional<std::string> instance_path;
  std::optional<double> spike_eps;
  std::size_t spike_count = 0;  // 0: enough epsilon bids for the default sweep
  std::optional<std::size_t> supply;
  std::optional<std::size_t> max_supply;
  std::size_t trials = 100000;
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma;
  std::optional<double> epsilon;
  double delta = 0.05;
  std::size_t deviations = 1000;
  bool broken_pacing = false;
  double mix_weight = 1.0 / 3.0;
  std::size_t workers = 1;
  std::string format = "json";
  std::optional<std::string> out;
  bool assert_mode = false;
  // gen
  std::string gen_kind = "spike";
  std::size_t gen_peaks = 3;
  std::size_t gen_bidders = 20;
  std::size_t gen_max_bids = 4;
};

struct Check {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct Report {
  std::string command;
  ojson metadata = ojson::object();
  std::vector<std::string> columns;
  std::vector<ojson> records;
  ojson summary = ojson::object();
  std::vector<Check> checks;
  std::vector<std::string> warnings;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
};

// Formatting -------------------------------------------------------------------

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_cell(const ojson& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

inline std::string to_csv(const Report& report) {
  std::ostringstream os;
  for (std::size_t c = 0; c < report.columns.size(); ++c) os << (c ? "," : "") << report.columns[c];
  os << '\n';
  for (const auto& rec : report.records) {
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
      const auto it = rec.find(report.columns[c]);
      os << (c ? "," : "") << (it == rec.end() ? std::string() : csv_cell(*it));
    }
    os << '\n';
  }
  return os.str();
}

inline ojson to_json(const Report& report) {
  ojson doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["command"] = report.command;
  doc["metadata"] = report.metadata;
  doc["records"] = ojson::array();
  for (const auto& r : report.records) doc["records"].push_back(r);
  doc["summary"] = report.summary;
  doc["checks"] = ojson::array();
  for (const auto& c : report.checks) doc["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  doc["warnings"] = report.warnings;
  return doc;
}

inline std::string render(const Report& report, const std::string& format) {
  if (format == "csv") return to_csv(report);
  return to_json(report).dump(2) + "\n";
}

// Configuration ----------------------------------------------------------------

namespace detail {

inline bool command_needs_instance(const std::string& cmd) {
  return cmd == "analyze" || cmd == "simulate" || cmd == "mechanism" || cmd == "mixed" || cmd == "truthcheck";
}

inline bool command_is_stochastic(const std::string& cmd) {
  return cmd == "simulate" || cmd == "mechanism" || cmd == "truthcheck";
}

inline void config_error(const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); }

}  // namespace detail

inline void validate(const RunConfig& c) {
  using detail::config_error;
  static const char* kCommands[] = {"analyze", "simulate", "mechanism", "mixed", "gen", "truthcheck"};
  if (std::find(std::begin(kCommands), std::end(kCommands), c.command) == std::end(kCommands)) {
    config_error("unknown command '" + c.command + "'");
  }
  if (c.format != "csv" && c.format != "json") config_error("format must be csv or json");
  if (detail::command_is_stochastic(c.command) && !c.seed) {
    config_error(c.command + " needs an explicit --seed");
  }
  if (detail::command_needs_instance(c.command) && c.instance_path.has_value() == c.spike_eps.has_value()) {
    config_error("give exactly one of --instance or --spike-eps");
  }
  if (c.spike_eps && !(*c.spike_eps > 0.0 && *c.spike_eps < 1.0)) config_error("--spike-eps must lie in (0,1)");
  if (c.supply && *c.supply < 1) config_error("--m must be >= 1");
  if (c.max_supply && *c.max_supply < 1) config_error("--m-max must be >= 1");
  if (c.supply && c.max_supply) config_error("give at most one of --m and --m-max");
  if (c.trials < 1) config_error("--trials must be >= 1");
  if (c.workers < 1) config_error("--workers must be >= 1");
  if (c.gamma && c.epsilon) config_error("give at most one of --gamma and --epsilon");
  if (!(c.delta > 0.0 && c.delta < 1.0)) config_error("--delta must lie in (0,1)");
  if (!(c.mix_weight >= 0.0 && c.mix_weight <= 1.0)) config_error("--mix-weight must lie in [0,1]");
  if (c.command == "mechanism" || c.command == "truthcheck") {
    if (!c.supply) config_error(c.command + " needs --m");
    if (!c.gamma && !c.epsilon) config_error(c.command + " needs --gamma or --epsilon");
  }
  if (c.command == "gen") {
    if (c.gen_kind == "spike") {
      if (!c.spike_eps) config_error("gen spike needs --spike-eps");
    } else if (c.gen_kind == "multipeak" || c.gen_kind == "random") {
      if (!c.seed) config_error("gen " + c.gen_kind + " needs an explicit --seed");
      if (c.gen_kind == "multipeak" && c.gen_peaks < 1) config_error("--peaks must be >= 1");
      if (c.gen_kind == "random" && (c.gen_bidders < 1 || c.gen_max_bids < 1)) {
        config_error("--bidders and --max-bids must be >= 1");
      }
    } else {
      config_error("gen kind must be spike, multipeak or random");
    }
  }
}

/// gamma, from --gamma or --epsilon / 8.
inline double resolved_gamma(const RunConfig& c) {
  if (c.gamma) return *c.gamma;
  if (c.epsilon) return *c.epsilon / 8.0;
  return 0.0;
}

/// Epsilon bids for a spike instance: enough that the sweep stays below b_2.
inline std::size_t default_spike_count(double eps) {
  return std::max<std::size_t>(400, static_cast<std::size_t>(std::ceil(4.0 / eps)));
}

inline BidProfile resolve_instance(const RunConfig& c) {
  if (c.instance_path) return load_instance(*c.instance_path);
  if (c.spike_eps) return gen_spike(*c.spike_eps, c.spike_count ? c.spike_count : default_spike_count(*c.spike_eps));
  detail::config_error("no instance given");
  return {};
}

/// The supplies swept: {--m}, else 1..--m-max, else 1..2n.
inline std::vector<std::size_t> resolve_supplies(const RunConfig& c, std::size_t total_bids) {
  std::vector<std::size_t> out;
  if (c.supply) {
    out.push_back(*c.supply);
    return out;
  }
  const std::size_t top = c.max_supply ? *c.max_supply : 2 * total_bids;
  for (std::size_t m = 1; m <= top; ++m) out.push_back(m);
  return out;
}

inline ojson config_echo(const RunConfig& c) {
  ojson e;
  e["command"] = c.command;
  e["instance"] = c.instance_path ? ojson(*c.instance_path) : ojson(nullptr);
  e["spike_eps"] = c.spike_eps ? ojson(*c.spike_eps) : ojson(nullptr);
  e["spike_count"] = c.spike_count;
  e["m"] = c.supply ? ojson(*c.supply) : ojson(nullptr);
  e["m_max"] = c.max_supply ? ojson(*c.max_supply) : ojson(nullptr);
  e["trials"] = c.trials;
  e["gamma"] = c.gamma ? ojson(*c.gamma) : ojson(nullptr);
  e["epsilon"] = c.epsilon ? ojson(*c.epsilon) : ojson(nullptr);
  e["delta"] = c.delta;
  e["deviations"] = c.deviations;
  e["broken_pacing"] = c.broken_pacing;
  e["mix_weight"] = c.mix_weight;
  e["format"] = c.format;
  return e;
}

inline Report new_report(const RunConfig& c) {
  Report r;
  r.command = c.command;
  r.metadata["tool"] = "perishable";
  r.metadata["version"] = PERISHABLE_VERSION;
  r.metadata["seed"] = c.seed ? ojson(*c.seed) : ojson(nullptr);
  r.metadata["config"] = config_echo(c);
  return r;
}

namespace detail {

inline ojson peaks_json(const CriticalPointSequence& points) {
  ojson peaks = ojson::array();
  for (std::size_t i = 1; i <= points.phases(); ++i) peaks.push_back({points.peak_start(i), points.peak_end(i)});
  return peaks;
}

inline ojson instance_summary(const RevenueCurve& curve, const CriticalPointSequence& points) {
  ojson s;
  s["bids"] = curve.size();
  s["peaks"] = peaks_json(points);
  s["wait_bounds"] = ojson(std::vector<std::size_t>(points.wait_bounds().begin(), points.wait_bounds().end()));
  s["smoothness"] = smoothness_bound(points);
  return s;
}

/// Worst-case slack allowed on top of 1/2: the integer wait count can shift
/// one copy, worth at most 1/(2 b_1) of OPT.
inline double half_ratio_floor(const CriticalPointSequence& points) {
  return 0.5 - 1.0 / (2.0 * static_cast<double>(points.peak_end(1)));
}

}  // namespace detail

// Commands -----------------------------------------------------------------------

/// Exact DP sweep of ALG / OPT over the supplies.
inline Report cmd_analyze(const RunConfig& c, const BidProfile& profile) {
  const RevenueCurve curve = build_revenue_curve(profile);
  const auto points = find_critical_points(curve);
  const auto supplies = resolve_supplies(c, curve.size());
  Report r = new_report(c);
  r.columns = {"M", "ALG", "OPT", "ratio", "case"};
  double min_ratio = std::numeric_limits<double>::infinity();
  std::size_t argmin = 0;
  for (std::size_t m : supplies) {
    const double alg = expected_revenue(curve, points, m);
    const double opt = opt_revenue(curve, m).revenue;
    const double ratio = opt > 0.0 ? alg / opt : 1.0;
    if (ratio < min_ratio) {
      min_ratio = ratio;
      argmin = m;
    }
    r.records.push_back({{"M", m}, {"ALG", alg}, {"OPT", opt}, {"ratio", ratio}, {"case", case_label(points, m)}});
  }
  r.summary = detail::instance_summary(curve, points);
  r.summary["min_ratio"] = min_ratio;
  r.summary["argmin"] = argmin;
  const double floor = detail::half_ratio_floor(points);
  r.summary["ratio_floor"] = floor;
  r.checks.push_back({"half_ratio", min_ratio >= floor - 1e-12,
                      "min ratio " + format_double(min_ratio) + " vs floor " + format_double(floor)});
  return r;
}

inline Report cmd_analyze(const RunConfig& c) { return cmd_analyze(c, resolve_instance(c)); }

namespace detail {

struct SweepAccumulator {
  std::vector<Moments> revenue;
  void merge(const SweepAccumulator& o) {
    for (std::size_t k = 0; k < revenue.size(); ++k) revenue[k].merge(o.revenue[k]);
  }
};

}  // namespace detail

/// Per-supply sample means of f(X) over independent allocator runs. One run of
/// max(supplies) copies yields X for every prefix, since the allocator is online.
inline std::vector<Moments> simulate_sweep(const RevenueCurve& curve, const std::vector<std::size_t>& supplies,
                                           std::size_t trials, std::uint64_t seed, std::size_t workers) {
  const auto points = find_critical_points(curve);
  const std::size_t horizon = supplies.empty() ? 0 : *std::max_element(supplies.begin(), supplies.end());
  std::vector<std::vector<std::size_t>> slots_at(horizon + 1);
  for (std::size_t k = 0; k < supplies.size(); ++k) slots_at[supplies[k]].push_back(k);

  auto trial = [&](std::size_t t, detail::SweepAccumulator& acc) {
    OnlineAllocator allocator(points, derive_seed(seed, static_cast<std::uint64_t>(t)));
    for (std::size_t m = 1; m <= horizon; ++m) {
      allocator.step();
      for (std::size_t slot : slots_at[m]) acc.revenue[slot].add(curve.revenue(allocator.allocated()));
    }
  };
  auto make = [&] { return detail::SweepAccumulator{std::vector<Moments>(supplies.size())}; };
  return parallel_trials<detail::SweepAccumulator>(trials, workers, make, trial).revenue;
}

/// Monte Carlo counterpart of analyze, with the exact value alongside.
inline Report cmd_simulate(const RunConfig& c, const BidProfile& profile) {
  const RevenueCurve curve = build_revenue_curve(profile);
  const auto points = find_critical_points(curve);
  const auto supplies = resolve_supplies(c, curve.size());
  const auto stats = simulate_sweep(curve, supplies, c.trials, *c.seed, c.workers);

  Report r = new_report(c);
  r.columns = {"M", "ALG", "OPT", "ratio", "case", "stderr", "trials"};
  double worst_z = 0.0;
  std::size_t outside = 0;
  for (std::size_t k = 0; k < supplies.size(); ++k) {
    const std::size_t m = supplies[k];
    const double mean = stats[k].mean();
    const double se = stats[k].stderr_of_mean();
    const double exact = expected_revenue(curve, points, m);
    const double opt = opt_revenue(curve, m).revenue;
    const double gap = std::abs(mean - exact);
    if (se > 0.0) worst_z = std::max(worst_z, gap / se);
    if (gap > 4.0 * se + 1e-9 * std::max(1.0, exact)) ++outside;
    r.records.push_back({{"M", m},
                         {"ALG", mean},
                         {"OPT", opt},
                         {"ratio", opt > 0.0 ? mean / opt : 1.0},
                         {"case", case_label(points, m)},
                         {"stderr", se},
                         {"trials", stats[k].count},
                         {"exact", exact}});
  }
  r.summary = detail::instance_summary(curve, points);
  r.summary["trials"] = c.trials;
  r.summary["max_abs_z"] = worst_z;
  r.summary["outside_4sigma"] = outside;
  r.checks.push_back({"within_4_sigma", outside == 0,
                      std::to_string(outside) + " of " + std::to_string(supplies.size()) + " supplies outside 4 sigma"});
  return r;
}

inline Report cmd_simulate(const RunConfig& c) { return cmd_simulate(c, resolve_instance(c)); }

/// weight * f(1) + (1 - weight) * ALG(M), swept over M.
inline Report cmd_mixed(const RunConfig& c, const BidProfile& profile) {
  const RevenueCurve curve = build_revenue_curve(profile);
  const auto points = find_critical_points(curve);
  const auto supplies = resolve_supplies(c, curve.size());
  Report r = new_report(c);
  if (points.peak_start(1) != 1 || points.peak_end(1) != 1) {
    r.warnings.push_back("instance does not open with a single-bid spike; the 2/3 target need not apply");
  }
  r.columns = {"M", "ALG", "OPT", "ratio", "case"};
  double min_ratio = std::numeric_limits<double>::infinity();
  std::size_t argmin = 0;
  for (std::size_t m : supplies) {
    const double pure = expected_revenue(curve, points, m);
    const double alg = c.mix_weight * curve.revenue(1) + (1.0 - c.mix_weight) * pure;
    const double opt = opt_revenue(curve, m).revenue;
    const double ratio = opt > 0.0 ? alg / opt : 1.0;
    if (ratio < min_ratio) {
      min_ratio = ratio;
      argmin = m;
    }
    r.records.push_back(
        {{"M", m}, {"ALG", alg}, {"OPT", opt}, {"ratio", ratio}, {"case", case_label(points, m)}, {"ALG_pure", pure}});
  }
  r.summary = detail::instance_summary(curve, points);
  r.summary["mix_weight"] = c.mix_weight;
  r.summary["min_ratio"] = min_ratio;
  r.summary["argmin"] = argmin;
  const double floor = 2.0 / 3.0 - 0.02;
  r.checks.push_back({"two_thirds_ratio", min_ratio >= floor,
                      "min ratio " + format_double(min_ratio) + " vs floor " + format_double(floor)});
  return r;
}

inline Report cmd_mixed(const RunConfig& c) { return cmd_mixed(c, resolve_instance(c)); }

namespace detail {

inline void add_truth_report(Report& r, const TruthReport& truth) {
  ojson kinds = ojson::object();
  for (const auto& [k, n] : truth.by_kind) kinds[k] = n;
  r.summary["deviations"] = truth.deviations;
  r.summary["violations"] = truth.violations;
  r.summary["max_gain"] = truth.deviations ? ojson(truth.max_gain) : ojson(nullptr);
  r.summary["deviations_by_kind"] = kinds;
  ojson examples = ojson::array();
  for (std::size_t k = 0; k < std::min<std::size_t>(truth.violating.size(), 10); ++k) {
    const auto& d = truth.violating[k];
    examples.push_back({{"bidder", d.bidder},
                        {"kind", to_string(d.kind)},
                        {"reported", d.reported},
                        {"truthful_utility", d.truthful_utility},
                        {"deviating_utility", d.deviating_utility}});
  }
  r.summary["violating_examples"] = examples;
}

}  // namespace detail

/// Revenue experiment plus the deviation tester on one instance.
inline Report cmd_mechanism(const RunConfig& c, const BidProfile& profile) {
  const double gamma = resolved_gamma(c);
  const std::size_t m = *c.supply;
  const MechanismConfig mc{m, gamma, *c.seed, c.broken_pacing ? Pacing::kOwnGroup : Pacing::kCrossGroup};
  const MechanismOutcome single = run_mechanism(profile, mc);
  const RevenueStats stats =
      revenue_experiment(profile, {m, gamma, c.delta, c.trials, derive_seed(*c.seed, "experiment"), c.workers});
  const TruthReport truth = check_truthfulness(profile, mc, c.deviations, derive_seed(*c.seed, "deviations"));

  Report r = new_report(c);
  r.columns = {"M",         "gamma",       "epsilon",   "size_S",       "size_T",      "x_final_S",
               "x_final_T", "eta",         "revenue",   "OPT",          "ratio",       "mean_revenue",
               "stderr",    "trials",      "mean_alpha", "revenue_target", "fraction_meeting_bound",
               "fraction_split_concentrated", "fraction_counts_concentrated", "counts_concentration_bound",
               "hypothesis_lhs", "hypothesis_rhs", "hypothesis_satisfied", "violations"};
  const double target = (1.0 - stats.epsilon) * stats.mean_alpha * stats.opt;
  r.records.push_back({{"M", m},
                       {"gamma", gamma},
                       {"epsilon", stats.epsilon},
                       {"size_S", single.partition.group_s.size()},
                       {"size_T", single.partition.group_t.size()},
                       {"x_final_S", single.allocated_s},
                       {"x_final_T", single.allocated_t},
                       {"eta", single.eta},
                       {"revenue", single.revenue},
                       {"OPT", single.opt},
                       {"ratio", single.opt > 0.0 ? single.revenue / single.opt : 1.0},
                       {"mean_revenue", stats.mean_revenue},
                       {"stderr", stats.stderr_revenue},
                       {"trials", stats.trials},
                       {"mean_alpha", stats.mean_alpha},
                       {"revenue_target", target},
                       {"fraction_meeting_bound", stats.fraction_meeting_bound},
                       {"fraction_split_concentrated", stats.fraction_split_concentrated},
                       {"fraction_counts_concentrated", stats.fraction_counts_concentrated},
                       {"counts_concentration_bound", stats.counts_concentration_bound},
                       {"hypothesis_lhs", stats.hypothesis_lhs},
                       {"hypothesis_rhs", stats.hypothesis_rhs},
                       {"hypothesis_satisfied", stats.hypothesis_satisfied},
                       {"violations", truth.violations}});
  r.summary["bidders"] = profile.size();
  r.summary["distinct_prices"] = stats.distinct_prices;
  r.summary["min_alpha"] = stats.min_alpha;
  detail::add_truth_report(r, truth);
  if (!stats.hypothesis_satisfied) {
    r.warnings.push_back("dominance hypothesis not met (lhs " + format_double(stats.hypothesis_lhs) + " <= rhs " +
                         format_double(stats.hypothesis_rhs) + "); the revenue bound is reported, not implied");
  }
  r.checks.push_back({"truthful", truth.violations == 0, std::to_string(truth.violations) + " violations"});
  r.checks.push_back({"revenue_bound", stats.mean_revenue >= target,
                      "mean revenue " + format_double(stats.mean_revenue) + " vs " + format_double(target)});
  return r;
}

inline Report cmd_mechanism(const RunConfig& c) { return cmd_mechanism(c, resolve_instance(c)); }

/// The deviation tester alone, one record per misreport kind.
inline Report cmd_truthcheck(const RunConfig& c, const BidProfile& profile) {
  const MechanismConfig mc{*c.supply, resolved_gamma(c), *c.seed,
                           c.broken_pacing ? Pacing::kOwnGroup : Pacing::kCrossGroup};
  const TruthReport truth = check_truthfulness(profile, mc, c.deviations, derive_seed(*c.seed, "deviations"));
  Report r = new_report(c);
  r.columns = {"kind", "deviations", "violations"};
  std::map<std::string, std::size_t> bad;
  for (const auto& d : truth.violating) ++bad[to_string(d.kind)];
  for (std::size_t k = 0; k < kMisreportKinds; ++k) {
    const std::string kind = to_string(static_cast<Misreport>(k));
    const auto it = truth.by_kind.find(kind);
    r.records.push_back(
        {{"kind", kind}, {"deviations", it == truth.by_kind.end() ? 0 : it->second}, {"violations", bad[kind]}});
  }
  detail::add_truth_report(r, truth);
  r.checks.push_back({"truthful", truth.violations == 0, std::to_string(truth.violations) + " violations"});
  return r;
}

inline Report cmd_truthcheck(const RunConfig& c) { return cmd_truthcheck(c, resolve_instance(c)); }

inline BidProfile cmd_gen(const RunConfig& c) {
  if (c.gen_kind == "spike") return gen_spike(*c.spike_eps, c.spike_count ? c.spike_count : default_spike_count(*c.spike_eps));
  if (c.gen_kind == "multipeak") return gen_multipeak(c.gen_peaks, *c.seed);
  return gen_random_profile(c.gen_bidders, c.gen_max_bids, *c.seed);
}

/// Dispatch for every report-producing command.
inline Report run_command(const RunConfig& c) {
  validate(c);
  if (c.command == "analyze") return cmd_analyze(c);
  if (c.command == "simulate") return cmd_simulate(c);
  if (c.command == "mechanism") return cmd_mechanism(c);
  if (c.command == "mixed") return cmd_mixed(c);
  if (c.command == "truthcheck") return cmd_truthcheck(c);
  throw Error(ErrorCode::kInvalidConfig, "command '" + c.command + "' produces no report");
}

}  // namespace perishable
