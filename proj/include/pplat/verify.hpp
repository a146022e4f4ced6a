#pragma once

// Invariant suite behind the `verify` command: runs every module's contract
// checks and the oracle comparisons on one given instance.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pplat/core.hpp"
#include "pplat/oracle.hpp"
#include "pplat/reduction.hpp"
#include "pplat/repeated.hpp"
#include "pplat/segmentation.hpp"
#include "pplat/simulate.hpp"

namespace pplat {

struct CheckResult {
  std::string name;
  bool pass = false;
  double observed = 0.0;   // worst deviation seen (check-specific meaning)
  double tolerance = 0.0;
};

inline bool all_pass(const std::vector<CheckResult>& checks) {
  for (const CheckResult& c : checks)
    if (!c.pass) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Random draws used by the suite (and reusable from tests).

inline Posterior random_posterior(int n, RngStream& rng) {
  std::vector<double> w(n);
  double sum = 0.0;
  for (double& v : w) {
    v = -std::log(1.0 - rng.uniform01());
    sum += v;
  }
  for (double& v : w) v /= sum;
  return Posterior{std::move(w)};
}

// A lying probability from the optimal-candidate set {tau_j} plus zero.
inline double random_candidate_lie(const PersuasionInstance& inst,
                                   RngStream& rng) {
  const int pick = static_cast<int>(rng.uniform01() * (inst.n() + 1));
  return pick >= inst.n() ? 0.0 : inst.threshold(std::min(pick, inst.n() - 1));
}

/// Bayes-plausible random policy: peels 1..3 random sub-markets off the prior
/// by per-coordinate fractions. Optionally designates the first segment as
/// truthful.
inline PlatformPolicy random_policy(const PersuasionInstance& inst,
                                    RngStream& rng, bool with_truthful) {
  const int n = inst.n();
  std::vector<double> remaining = inst.prior;
  std::vector<PolicySegment> segments;
  const int extra = 1 + static_cast<int>(rng.uniform01() * 3.0);
  for (int s = 0; s < extra; ++s) {
    std::vector<double> part(n);
    double mass = 0.0;
    for (int j = 0; j < n; ++j) {
      part[j] = remaining[j] * (0.2 + 0.6 * rng.uniform01());
      mass += part[j];
    }
    if (mass <= 1e-9) continue;
    for (int j = 0; j < n; ++j) {
      remaining[j] -= part[j];
      part[j] /= mass;
    }
    segments.push_back(PolicySegment{mass, Posterior{std::move(part)}});
  }
  double rest = 0.0;
  for (double v : remaining) rest += v;
  std::vector<double> last(n);
  for (int j = 0; j < n; ++j) last[j] = remaining[j] / rest;
  segments.push_back(PolicySegment{rest, Posterior{std::move(last)}});
  return make_platform_policy(inst, std::move(segments),
                              with_truthful ? std::optional<std::size_t>(0)
                                            : std::nullopt);
}

// ---------------------------------------------------------------------------

namespace detail {

inline double bayes_gap(const PersuasionInstance& inst,
                        const PlatformPolicy& policy) {
  double worst = 0.0;
  for (std::size_t j = 0; j < inst.prior.size(); ++j) {
    double mean = 0.0;
    for (const PolicySegment& seg : policy.segments)
      mean += seg.weight * seg.x.w[j];
    worst = std::max(worst, std::abs(mean - inst.prior[j]));
  }
  return worst;
}

}  // namespace detail

/// Runs all per-instance invariants. Deterministic given the seed.
inline std::vector<CheckResult> verify_instance(const PersuasionInstance& inst,
                                                std::uint64_t seed) {
  std::vector<CheckResult> checks;
  RngStream rng(seed);
  const int n = inst.n();

  {  // closed-form utilities against the branch-enumeration oracle
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const Posterior x = random_posterior(n, rng);
      const double lie = random_candidate_lie(inst, rng);
      const UtilityReport closed = platform_utility(inst, x, lie);
      const UtilityReport enumd = enumerate_one_shot_utilities(inst, x, lie);
      worst = std::max(worst, std::abs(closed.sender - enumd.sender));
      worst = std::max(worst, std::abs(closed.platform - enumd.platform));
      for (int j = 0; j < n; ++j)
        worst = std::max(worst, std::abs(closed.per_type[j] - enumd.per_type[j]));
    }
    checks.push_back({"closed-form utilities match enumeration", worst <= 1e-12,
                      worst, 1e-12});
  }

  {  // greedy response: maximal targeting value, lowest index on ties
    double worst = 0.0;
    bool ties_ok = true;
    for (int t = 0; t < 1000; ++t) {
      const Posterior x = random_posterior(n, rng);
      const GreedyResponse g = greedy_best_response(inst, x);
      std::vector<double> value(n);
      double best = 0.0;
      for (int k = 0; k < n; ++k) {
        value[k] = tail_mass(x, k) * (inst.mu + (1.0 - inst.mu) * inst.threshold(k));
        best = std::max(best, value[k]);
      }
      worst = std::max(worst, best - value[g.index]);
      int lowest = 0;
      while (value[lowest] < best - 1e-12) ++lowest;
      if (lowest != g.index) ties_ok = false;
    }
    checks.push_back({"greedy response maximizes the targeting value",
                      worst <= 1e-12 && ties_ok, worst, 1e-12});
  }

  const ReductionMap map = to_market(inst);
  {  // utility/surplus identities on the mapped market
    int failures = 0;
    for (int t = 0; t < 1000; ++t) {
      const Posterior x = random_posterior(n, rng);
      const double lie = random_candidate_lie(inst, rng);
      if (!surplus_identity_check(inst, x, lie, map)) ++failures;
    }
    checks.push_back({"sender/user utilities equal producer/consumer surplus",
                      failures == 0, static_cast<double>(failures), 0.0});
  }

  {  // greedy target == optimal uniform price, identical tie-breaks
    int mismatches = 0;
    for (int t = 0; t < 1000; ++t) {
      const Posterior x = random_posterior(n, rng);
      const Market mkt = make_market(map.market.values, x.w);
      if (greedy_best_response(inst, x).index != optimal_uniform_price(mkt))
        ++mismatches;
    }
    checks.push_back({"greedy target equals the optimal price index",
                      mismatches == 0, static_cast<double>(mismatches), 0.0});
  }

  const Segmentation seg = consumer_optimal_segmentation(map.market);
  const SurplusReport sur = surpluses(seg);
  {
    const double monopoly =
        revenue(map.market, optimal_uniform_price(map.market));
    const double gap = std::abs(sur.producer - monopoly);
    checks.push_back({"segmentation pins producer surplus at monopoly revenue",
                      gap <= 1e-9, gap, 1e-9});
  }
  {
    double total = 0.0;
    for (int j = 0; j < n; ++j)
      total += map.market.masses[j] * map.market.values[j];
    const double gap = std::abs(sur.total - total);
    checks.push_back({"segmentation is efficient", gap <= 1e-9, gap, 1e-9});
  }
  {
    double worst = 0.0;
    for (const MarketSegment& s : seg.segments) {
      const Market sub{seg.values, s.masses};
      const double chosen = revenue(sub, s.price_index);
      for (int k = 0; k < n; ++k)
        worst = std::max(worst, revenue(sub, k) - chosen);
    }
    checks.push_back({"segment prices are revenue-optimal in their segments",
                      worst <= 1e-12, worst, 1e-12});
  }
  checks.push_back({"segment count stays within the type count",
                    seg.segments.size() <= static_cast<std::size_t>(n),
                    static_cast<double>(seg.segments.size()),
                    static_cast<double>(n)});
  {
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
      double mean = 0.0;
      for (const MarketSegment& s : seg.segments) mean += s.weight * s.masses[j];
      worst = std::max(worst, std::abs(mean - map.market.masses[j]));
    }
    checks.push_back({"segmentation averages back to the aggregate market",
                      worst <= 1e-9, worst, 1e-9});
  }
  if (n <= 3) {
    const double found = grid_segmentation_search(map.market, GridSpec{50, 3});
    const double margin = found - sur.consumer;
    checks.push_back({"grid search cannot beat the segmentation",
                      margin <= 1e-3, margin, 1e-3});
  }

  {  // splitting improvement dominates and reaches lowest-type targeting
    double worst = 0.0;
    bool ok = true;
    for (int t = 0; t < 200; ++t) {
      const PlatformPolicy pol = random_policy(inst, rng, false);
      const SenderPolicy before_p = greedy_policy(inst, pol);
      const UtilityReport before = policy_utilities(inst, pol, before_p);
      const PlatformPolicy improved = improve_to_lowest_type_targeting(inst, pol);
      const UtilityReport after =
          policy_utilities(inst, improved, greedy_policy(inst, improved));
      if (!is_lowest_type_targeting(inst, improved)) ok = false;
      if (!is_lowest_type_targeting(inst, pol) &&
          after.sender <= before.sender + 1e-12)
        ok = false;
      worst = std::max(worst, before.platform - after.platform);
      worst = std::max(worst, detail::bayes_gap(inst, improved));
    }
    checks.push_back({"tail splitting reaches lowest-type targeting and dominates",
                      ok && worst <= 1e-9, worst, 1e-9});
  }

  const OneShotSolution one_shot = solve_one_shot(inst);
  {
    const double gap =
        std::abs(one_shot.utilities.sender - monopoly_sender_utility(inst));
    const bool ok = is_lowest_type_targeting(inst, one_shot.policy) &&
                    detail::bayes_gap(inst, one_shot.policy) <= 1e-9 &&
                    gap <= 1e-9;
    checks.push_back({"one-shot solution pins the sender at the no-info value",
                      ok, gap, 1e-9});
  }

  if (inst.repeated) {
    {  // IC verdict vs the sign of the worst deviation gain
      int mismatches = 0;
      for (int t = 0; t < 300; ++t) {
        const RepeatedPolicy pol =
            make_repeated_policy(inst, random_policy(inst, rng, true));
        const ICCertificate cert = is_incentive_compatible(inst, pol);
        double worst_gain = -1.0;
        for (int k = 0; k < n; ++k) {
          if (tail_mass(*pol.truthful, k) <= kSupportEps) continue;
          worst_gain = std::max(worst_gain, deviation_value(inst, pol, k));
        }
        if (std::abs(worst_gain) <= 1e-9) continue;  // boundary, sign undefined
        if (cert.incentive_compatible != (worst_gain <= 1e-12)) ++mismatches;
      }
      checks.push_back({"incentive verdict matches the deviation-gain sign",
                        mismatches == 0, static_cast<double>(mismatches), 0.0});
    }
    {  // the first constraint dominates all others
      double worst = 0.0;
      for (int t = 0; t < 300; ++t) {
        const Posterior x = random_posterior(n, rng);
        const double first = ic_rhs(inst, 0, x);
        for (int k = 1; k < n; ++k) {
          if (tail_mass(x, k) <= kSupportEps) continue;
          worst = std::max(worst, ic_rhs(inst, k, x) - first);
        }
      }
      checks.push_back({"lowest-type constraint dominates the others",
                        worst <= 1e-12, worst, 1e-12});
    }
    {  // closed forms and the surplus-sum identity
      double worst = 0.0;
      const double total =
          inst.mu * (1.0 + Posterior{inst.prior}.expected(inst.theta));
      for (int t = 0; t < 300; ++t) {
        const RepeatedPolicy pol = make_repeated_policy(
            inst, improve_to_lowest_type_targeting(
                      inst, random_policy(inst, rng, t % 2 == 0)));
        const ClosedFormReport cf = closed_form_report(inst, pol);
        const UtilityReport direct =
            policy_utilities(inst, pol.base, truthful_policy(inst, pol.base));
        worst = std::max(worst, std::abs(cf.truthful_value - direct.sender));
        worst = std::max(worst, std::abs(cf.platform_truthful - direct.platform));
        worst = std::max(worst,
                         std::abs(direct.sender + direct.platform - total));
        if (cf.sender_nontruthful) {
          double sf = 0.0, pf = 0.0;
          const double rest = 1.0 - pol.truthful_mass;
          for (std::size_t i = 0; i < pol.base.segments.size(); ++i) {
            if (pol.base.is_truthful_segment(i)) continue;
            const PolicySegment& s = pol.base.segments[i];
            const UtilityReport r = platform_utility(
                inst, s.x, greedy_best_response(inst, s.x).lie);
            sf += s.weight / rest * r.sender;
            pf += s.weight / rest * r.platform;
          }
          worst = std::max(worst, std::abs(*cf.sender_nontruthful - sf));
          worst = std::max(worst, std::abs(*cf.platform_nontruthful - pf));
        }
      }
      checks.push_back({"lowest-type-targeting closed forms match direct sums",
                        worst <= 1e-12, worst, 1e-12});
    }
    {  // solver against the exhaustive grid and the desk-derived value
      const int res = n <= 2 ? 400 : 60;
      const RepeatedGridResult grid = grid_repeated_search(inst, GridSpec{res, 3});
      const SolveResult solved = solve_repeated(inst);
      double step = 0.0;
      for (int j = 0; j < n; ++j)
        step = std::max(step, inst.prior[j] / static_cast<double>(res - 1));
      const double tol = std::max(1e-3, 3.0 * step);
      const double gap = std::abs(solved.platform_value - grid.platform_value);
      checks.push_back({"repeated solver agrees with the grid oracle",
                        gap <= tol, gap, tol});
      const double desk_gap =
          std::abs(solved.sender_value - analytic_v_star(inst));
      checks.push_back({"repeated solver agrees with the desk-derived value",
                        desk_gap <= 2.0 * step + 1e-9, desk_gap,
                        2.0 * step + 1e-9});
      bool ok = solved.fallback_used ||
                is_incentive_compatible(inst, solved.policy).min_slack() >= -1e-9;
      ok = ok && detail::bayes_gap(inst, solved.policy.base) <= 1e-9 &&
           is_lowest_type_targeting(inst, solved.policy.base) &&
           solved.platform_value >= one_shot.utilities.platform - 1e-9;
      checks.push_back({"repeated solver output satisfies its contract", ok,
                        ok ? 0.0 : 1.0, 0.0});
    }
    {  // simulation determinism and the absorbing low state
      const SolveResult solved = solve_repeated(inst);
      SimConfig cfg;
      cfg.periods = 4000;
      cfg.seed = seed ^ 0xabcdefull;
      cfg.keep_log = true;
      if (solved.policy.truthful_mass > kSupportEps) cfg.deviate_type = 0;
      const SimReport a = simulate(inst, solved.policy, solved.sender, cfg);
      const SimReport b = simulate(inst, solved.policy, solved.sender, cfg);
      bool ok = a.discounted_sender_utility == b.discounted_sender_utility &&
                a.avg_user_utility == b.avg_user_utility &&
                a.punishment_period == b.punishment_period;
      bool low_seen = false;
      for (const PeriodRecord& r : a.log) {
        if (r.reputation == 'L') low_seen = true;
        if (low_seen && r.reputation == 'H') ok = false;
      }
      if (a.punishment_period)
        ok = ok && low_seen;
      checks.push_back({"simulation is seed-deterministic with absorbing low state",
                        ok, ok ? 0.0 : 1.0, 0.0});
    }
  }

  return checks;
}

}  // namespace pplat
