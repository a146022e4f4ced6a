// Command-line front end: solve, segment, simulate and verify persuasion
// platform instances. All numeric output goes through the canonical 12-digit
// formatter so runs are reproducible byte for byte.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pplat/core.hpp"
#include "pplat/io.hpp"
#include "pplat/oracle.hpp"
#include "pplat/reduction.hpp"
#include "pplat/repeated.hpp"
#include "pplat/segmentation.hpp"
#include "pplat/simulate.hpp"
#include "pplat/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitCheckFailed = 3;

using pplat::io::canon;
using pplat::io::canon_array;

std::string indexed(const std::vector<int>& types,
                    const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += "k=" + std::to_string(types[i] + 1) + ": " + canon(values[i]);
  }
  return out + "]";
}

void print_policy_table(const pplat::PlatformPolicy& policy,
                        const pplat::SenderPolicy& sender,
                        const pplat::UtilityReport& utilities) {
  std::cout << "  segments:\n";
  for (std::size_t i = 0; i < policy.segments.size(); ++i) {
    std::cout << "    " << i + 1 << ": weight " << canon(policy.segments[i].weight)
              << "  posterior " << canon_array(policy.segments[i].x.w)
              << "  lie " << canon(sender.lies[i]);
    if (policy.is_truthful_segment(i)) std::cout << "  (truthful)";
    std::cout << "\n";
  }
  std::cout << "  sender utility:   " << canon(utilities.sender) << "\n";
  std::cout << "  platform utility: " << canon(utilities.platform) << "\n";
  std::cout << "  per-type utility: " << canon_array(utilities.per_type) << "\n";
}

int cmd_solve_oneshot(const std::string& instance_path,
                      const std::string& out_path, bool json) {
  const pplat::PersuasionInstance inst = pplat::io::load_instance(instance_path);
  const pplat::OneShotSolution sol = pplat::solve_one_shot(inst);
  const std::string file_body =
      pplat::io::policy_to_json(sol.policy, sol.sender, sol.utilities);
  if (json) {
    std::cout << file_body;
  } else {
    std::cout << "One-shot platform policy\n";
    print_policy_table(sol.policy, sol.sender, sol.utilities);
  }
  if (!out_path.empty()) pplat::io::write_file(out_path, file_body);
  return kExitOk;
}

int cmd_segment(const std::string& market_path, double pareto_lambda,
                const std::string& out_path, bool json) {
  const pplat::Market market = pplat::io::load_market(market_path);
  const pplat::Segmentation seg = pplat::pareto_mix(market, pareto_lambda);
  const pplat::SurplusReport sur = pplat::surpluses(seg);
  const std::string file_body = pplat::io::segmentation_to_json(seg, sur);
  if (json) {
    std::cout << file_body;
  } else {
    std::cout << "Market segmentation\n  segments:\n";
    for (std::size_t i = 0; i < seg.segments.size(); ++i) {
      const pplat::MarketSegment& s = seg.segments[i];
      std::cout << "    " << i + 1 << ": weight " << canon(s.weight)
                << "  masses " << canon_array(s.masses) << "  price "
                << canon(seg.values[s.price_index]) << "\n";
    }
    std::cout << "  consumer surplus: " << canon(sur.consumer) << "\n";
    std::cout << "  producer surplus: " << canon(sur.producer) << "\n";
    std::cout << "  total surplus:    " << canon(sur.total) << "\n";
    std::cout << "  surplus point:    (" << canon(sur.consumer) << ", "
              << canon(sur.producer) << ")\n";
  }
  if (!out_path.empty()) pplat::io::write_file(out_path, file_body);
  return kExitOk;
}

int cmd_solve_repeated(const std::string& instance_path, int grid, int restarts,
                       const std::string& out_path, bool json) {
  const pplat::PersuasionInstance inst = pplat::io::load_instance(instance_path);
  pplat::SolverConfig cfg;
  cfg.grid_points_per_axis = grid;
  cfg.restarts = restarts;
  const pplat::SolveResult result = pplat::solve_repeated(inst, cfg);
  const pplat::UtilityReport utilities =
      pplat::policy_utilities(inst, result.policy.base, result.sender);

  if (json) {
    std::string out = "{\n  \"truthful_mass\": " + canon(result.policy.truthful_mass);
    if (result.policy.truthful)
      out += ",\n  \"truthful_posterior\": " + canon_array(result.policy.truthful->w);
    out += ",\n  \"sender_value\": " + canon(result.sender_value);
    out += ",\n  \"platform_value\": " + canon(result.platform_value);
    out += ",\n  \"fallback_used\": ";
    out += result.fallback_used ? "true" : "false";
    out += ",\n  \"ic_slack\": " + canon_array(result.ic_slack);
    out += ",\n  \"per_type\": " + canon_array(utilities.per_type);
    out += ",\n  \"segments\": [\n";
    for (std::size_t i = 0; i < result.policy.base.segments.size(); ++i) {
      const pplat::PolicySegment& seg = result.policy.base.segments[i];
      out += "    {\"weight\": " + canon(seg.weight) +
             ", \"posterior\": " + canon_array(seg.x.w) +
             ", \"lie_prob\": " + canon(result.sender.lies[i]) +
             ", \"truthful\": " +
             (result.policy.base.is_truthful_segment(i) ? "true" : "false") + "}";
      if (i + 1 < result.policy.base.segments.size()) out += ",";
      out += "\n";
    }
    out += "  ]\n}\n";
    std::cout << out;
  } else {
    std::cout << "Repeated platform policy\n";
    std::cout << "  truthful mass:    " << canon(result.policy.truthful_mass)
              << "\n";
    if (result.policy.truthful)
      std::cout << "  truthful posterior: " << canon_array(result.policy.truthful->w)
                << "\n";
    print_policy_table(result.policy.base, result.sender, utilities);
    std::cout << "  sender value V:   " << canon(result.sender_value) << "\n";
    std::cout << "  platform value:   " << canon(result.platform_value) << "\n";
    std::cout << "  fallback used:    " << (result.fallback_used ? "yes" : "no")
              << "\n";
    std::cout << "  ic slack:         "
              << indexed(result.ic_constraint_type, result.ic_slack) << "\n";
  }
  if (!out_path.empty())
    pplat::io::save_policy(out_path, result.policy.base, result.sender, utilities);
  return kExitOk;
}

int cmd_simulate(const std::string& instance_path, const std::string& policy_path,
                 long long periods, std::uint64_t seed, int deviate,
                 const std::string& out_path, bool json) {
  const pplat::PersuasionInstance inst = pplat::io::load_instance(instance_path);
  const pplat::io::PolicyData data = pplat::io::load_policy(policy_path, inst);
  const pplat::RepeatedPolicy pol = pplat::make_repeated_policy(inst, data.policy);

  pplat::SimConfig cfg;
  cfg.periods = periods;
  cfg.seed = seed;
  cfg.keep_log = !out_path.empty();
  if (deviate > 0) cfg.deviate_type = deviate - 1;
  const pplat::SimReport report = pplat::simulate(inst, pol, data.sender, cfg);

  const double v_theory = pplat::truthful_value(inst, pol);
  const pplat::UtilityReport theory =
      pplat::policy_utilities(inst, pol.base, data.sender);

  std::ostringstream hazard;
  if (cfg.deviate_type) {
    const double h = (1.0 - inst.mu) * pplat::tail_mass(*pol.truthful, *cfg.deviate_type) *
                     inst.threshold(*cfg.deviate_type) * pol.truthful_mass;
    hazard << canon(h);
  }

  if (json) {
    std::string out = "{\n  \"periods\": " + std::to_string(periods) +
                      ",\n  \"seed\": " + std::to_string(seed) +
                      ",\n  \"empirical_sender\": " + canon(report.avg_sender_utility) +
                      ",\n  \"discounted_sender\": " +
                      canon(report.discounted_sender_utility) +
                      ",\n  \"truncation_bound\": " + canon(report.truncation_bound) +
                      ",\n  \"theoretical_sender_value\": " + canon(v_theory) +
                      ",\n  \"empirical_user\": " + canon(report.avg_user_utility) +
                      ",\n  \"user_std_error\": " + canon(report.user_utility_se) +
                      ",\n  \"theoretical_platform_value\": " + canon(theory.platform) +
                      ",\n  \"high_periods\": " + std::to_string(report.high_periods);
    if (cfg.deviate_type) out += ",\n  \"theoretical_hazard\": " + hazard.str();
    out += ",\n  \"punishment_period\": ";
    out += report.punishment_period ? std::to_string(*report.punishment_period)
                                    : std::string("null");
    out += "\n}\n";
    std::cout << out;
  } else {
    std::cout << "Simulation report\n";
    std::cout << "  periods: " << periods << "  seed: " << seed << "\n";
    std::cout << "  empirical sender (per period):  "
              << canon(report.avg_sender_utility) << "\n";
    std::cout << "  discounted sender utility:      "
              << canon(report.discounted_sender_utility) << " (truncation bound "
              << canon(report.truncation_bound) << ")\n";
    std::cout << "  theoretical sender value V:     " << canon(v_theory) << "\n";
    std::cout << "  empirical user (per period):    "
              << canon(report.avg_user_utility) << " (std error "
              << canon(report.user_utility_se) << ")\n";
    std::cout << "  theoretical platform value:     " << canon(theory.platform)
              << "\n";
    std::cout << "  high-reputation periods:        " << report.high_periods
              << "\n";
    if (cfg.deviate_type)
      std::cout << "  theoretical punishment hazard:  " << hazard.str() << "\n";
    if (report.punishment_period)
      std::cout << "  punishment period:              "
                << *report.punishment_period << "\n";
  }

  if (!out_path.empty()) {
    std::string dump;
    for (const pplat::PeriodRecord& r : report.log) {
      dump += std::to_string(r.period) + " " + std::to_string(r.theta_index + 1) +
              " " + std::to_string(r.segment + 1) + " " + std::to_string(r.omega) +
              " " + std::to_string(r.recommendation) + " " +
              std::to_string(r.action) + " " + r.reputation + "\n";
    }
    pplat::io::write_file(out_path, dump);
  }
  return kExitOk;
}

int cmd_verify(const std::string& instance_path, const std::string& policy_path,
               std::uint64_t seed, bool json) {
  const pplat::PersuasionInstance inst = pplat::io::load_instance(instance_path);
  std::vector<pplat::CheckResult> checks = pplat::verify_instance(inst, seed);

  if (!policy_path.empty()) {
    pplat::CheckResult file_check{"policy file is consistent with the instance",
                                  true, 0.0, 1e-9};
    try {
      const pplat::io::PolicyData data = pplat::io::load_policy(policy_path, inst);
      const pplat::UtilityReport recomputed =
          pplat::policy_utilities(inst, data.policy, data.sender);
      double gap = std::abs(recomputed.sender - data.utilities.sender);
      gap = std::max(gap, std::abs(recomputed.platform - data.utilities.platform));
      file_check.observed = gap;
      file_check.pass = gap <= 1e-9;
    } catch (const pplat::Error& e) {
      file_check.pass = false;
      file_check.observed = 1.0;
      file_check.name += std::string(" [") + e.what() + "]";
    }
    checks.push_back(file_check);
  }

  const bool ok = pplat::all_pass(checks);
  if (json) {
    std::string out = "{\n  \"checks\": [\n";
    for (std::size_t i = 0; i < checks.size(); ++i) {
      out += "    {\"name\": \"" + checks[i].name + "\", \"pass\": " +
             (checks[i].pass ? "true" : "false") +
             ", \"observed\": " + canon(checks[i].observed) +
             ", \"tolerance\": " + canon(checks[i].tolerance) + "}";
      if (i + 1 < checks.size()) out += ",";
      out += "\n";
    }
    out += "  ],\n  \"all_pass\": ";
    out += ok ? "true" : "false";
    out += "\n}\n";
    std::cout << out;
  } else {
    for (const pplat::CheckResult& c : checks) {
      std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name << " (observed "
                << canon(c.observed) << ", tolerance " << canon(c.tolerance)
                << ")\n";
    }
    std::cout << (ok ? "all checks passed" : "some checks FAILED") << "\n";
  }
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solver and simulator for persuasion platform problems"};
  app.require_subcommand(1);

  std::string instance_path, market_path, policy_path, out_path;
  bool json = false;
  double pareto_lambda = 0.0;
  int grid = 33, restarts = 8, deviate = 0;
  long long periods = 100000;
  std::uint64_t seed = 1;

  CLI::App* oneshot = app.add_subcommand(
      "solve-oneshot", "User-optimal one-shot disclosure policy");
  oneshot->add_option("instance", instance_path, "instance JSON file")->required();
  oneshot->add_option("--out", out_path, "write the policy file here");
  oneshot->add_flag("--json", json, "machine-readable output");

  CLI::App* segment = app.add_subcommand(
      "segment", "Consumer-optimal segmentation of a market file");
  segment->add_option("market", market_path, "market JSON file")->required();
  segment->add_option("--pareto-mix", pareto_lambda,
                      "mix weight toward full revelation, in [0,1]");
  segment->add_option("--out", out_path, "write the segmentation here");
  segment->add_flag("--json", json, "machine-readable output");

  CLI::App* repeated = app.add_subcommand(
      "solve-repeated", "Optimal reputation-based platform policy");
  repeated->add_option("instance", instance_path, "instance JSON file")->required();
  repeated->add_option("--grid", grid, "grid points per axis (>= 8)");
  repeated->add_option("--restarts", restarts, "refinement restarts (>= 1)");
  repeated->add_option("--out", out_path, "write the policy file here");
  repeated->add_flag("--json", json, "machine-readable output");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Monte Carlo run of the repeated reputation game");
  simulate->add_option("instance", instance_path, "instance JSON file")->required();
  simulate->add_option("--policy", policy_path, "policy JSON file")->required();
  simulate->add_option("--periods", periods, "number of periods");
  simulate->add_option("--seed", seed, "random seed");
  simulate->add_option("--deviate", deviate,
                       "deviate to this type's threshold on the truthful "
                       "segment (1-based)");
  simulate->add_option("--out", out_path, "write the trajectory dump here");
  simulate->add_flag("--json", json, "machine-readable output");

  CLI::App* verify = app.add_subcommand(
      "verify", "Run the invariant suite on an instance");
  verify->add_option("instance", instance_path, "instance JSON file")->required();
  verify->add_option("--policy", policy_path, "also check this policy file");
  verify->add_option("--seed", seed, "random seed for the suite");
  verify->add_flag("--json", json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (oneshot->parsed()) return cmd_solve_oneshot(instance_path, out_path, json);
    if (segment->parsed())
      return cmd_segment(market_path, pareto_lambda, out_path, json);
    if (repeated->parsed())
      return cmd_solve_repeated(instance_path, grid, restarts, out_path, json);
    if (simulate->parsed())
      return cmd_simulate(instance_path, policy_path, periods, seed, deviate,
                          out_path, json);
    if (verify->parsed())
      return cmd_verify(instance_path, policy_path, seed, json);
  } catch (const pplat::io::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const pplat::Error& e) {
    std::cerr << "error [" << pplat::errc_name(e.code()) << "]: " << e.what()
              << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
