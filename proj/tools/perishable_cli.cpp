#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "perishable/perishable.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAssert = 3;

void add_instance_flags(CLI::App* sub, perishable::RunConfig& c) {
  sub->add_option("--instance", c.instance_path, "instance JSON file");
  sub->add_option("--spike-eps", c.spike_eps, "use a spike instance with this epsilon");
  sub->add_option("--spike-count", c.spike_count, "number of epsilon bids (default: auto)");
}

void add_sweep_flags(CLI::App* sub, perishable::RunConfig& c) {
  sub->add_option("--m", c.supply, "single supply value");
  sub->add_option("--m-max", c.max_supply, "sweep supplies 1..m-max (default 2n)");
}

void add_output_flags(CLI::App* sub, perishable::RunConfig& c) {
  sub->add_option("--out", c.out, "write the report here instead of stdout");
  sub->add_option("--format", c.format, "report format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_flag("--assert", c.assert_mode, "exit 3 when a report check fails");
}

void add_mechanism_flags(CLI::App* sub, perishable::RunConfig& c) {
  sub->add_option("--gamma", c.gamma, "pacing slack gamma in [0, 1/6)");
  sub->add_option("--epsilon", c.epsilon, "target loss; gamma = epsilon / 8");
  sub->add_option("--deviations", c.deviations, "sampled misreports");
  sub->add_flag("--broken-pacing", c.broken_pacing, "pace each side by its own fictitious run (control)");
}

void write_text(const perishable::RunConfig& c, const std::string& text) {
  if (!c.out) {
    std::cout << text;
    return;
  }
  std::ofstream os(*c.out, std::ios::binary);
  if (!os) throw perishable::Error(perishable::ErrorCode::kInvalidConfig, "cannot write '" + *c.out + "'");
  os << text;
}

}  // namespace

int main(int argc, char** argv) {
  perishable::RunConfig c;
  CLI::App app{"Online allocation of perishable copies: exact analysis, simulation and the split mechanism"};
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze", "exact ALG/OPT sweep");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo sweep against the exact values");
  auto* mechanism = app.add_subcommand("mechanism", "revenue experiment and deviation tester");
  auto* mixed = app.add_subcommand("mixed", "1/3 single copy, 2/3 online allocator");
  auto* gen = app.add_subcommand("gen", "write a generated instance");
  auto* truthcheck = app.add_subcommand("truthcheck", "deviation tester only");

  for (auto* sub : {analyze, simulate, mechanism, mixed, truthcheck}) {
    add_instance_flags(sub, c);
    add_output_flags(sub, c);
    sub->add_option("--seed", c.seed, "master seed");
    sub->add_option("--workers", c.workers, "worker threads");
  }
  for (auto* sub : {analyze, simulate, mixed}) add_sweep_flags(sub, c);
  for (auto* sub : {simulate, mechanism}) sub->add_option("--trials", c.trials, "Monte Carlo trials");
  for (auto* sub : {mechanism, truthcheck}) {
    sub->add_option("--m", c.supply, "supply");
    add_mechanism_flags(sub, c);
  }
  mechanism->add_option("--delta", c.delta, "failure probability for the hypothesis check");
  mixed->add_option("--mix-weight", c.mix_weight, "probability of the single-copy branch");

  gen->add_option("kind", c.gen_kind, "spike, multipeak or random")->check(CLI::IsMember({"spike", "multipeak", "random"}));
  gen->add_option("--spike-eps", c.spike_eps, "epsilon for spike");
  gen->add_option("--spike-count", c.spike_count, "epsilon bids for spike");
  gen->add_option("--peaks", c.gen_peaks, "peaks for multipeak");
  gen->add_option("--bidders", c.gen_bidders, "bidders for random");
  gen->add_option("--max-bids", c.gen_max_bids, "max bids per bidder for random");
  gen->add_option("--seed", c.seed, "generator seed");
  gen->add_option("--out", c.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  c.command = app.get_subcommands().front()->get_name();

  try {
    perishable::validate(c);
    if (c.command == "gen") {
      write_text(c, perishable::serialize_instance(perishable::cmd_gen(c)));
      return kExitOk;
    }
    const perishable::Report report = perishable::run_command(c);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    write_text(c, perishable::render(report, c.format));
    if (c.assert_mode && !report.all_passed()) {
      for (const auto& check : report.checks) {
        if (!check.passed) std::cerr << "check failed: " << check.name << ": " << check.detail << '\n';
      }
      return kExitAssert;
    }
    return kExitOk;
  } catch (const perishable::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
