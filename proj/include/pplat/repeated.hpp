#pragma once

// Reputation-based setting: truthful-play value, incentive-compatibility
// constraints and their deviation-value counterpart, the closed forms for
// lowest-type-targeting policies, and the two-step optimal-policy solver.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pplat/core.hpp"
#include "pplat/reduction.hpp"
#include "pplat/segmentation.hpp"

namespace pplat {

/// Platform policy with a designated truthful segment (possibly absent) and
/// the derived mean of the remaining segments.
struct RepeatedPolicy {
  PlatformPolicy base;
  double truthful_mass = 0.0;                 // weight of the truthful segment
  std::optional<Posterior> truthful;          // its posterior
  std::optional<Posterior> nontruthful_mean;  // renormalized complement mean
};

inline RepeatedPolicy make_repeated_policy(const PersuasionInstance& inst,
                                           PlatformPolicy base) {
  RepeatedPolicy pol;
  pol.truthful_mass = base.truthful_weight();
  if (base.truthful_index) pol.truthful = base.segments[*base.truthful_index].x;
  const double rest = 1.0 - pol.truthful_mass;
  if (rest > kSupportEps) {
    std::vector<double> mean(inst.theta.size(), 0.0);
    for (std::size_t i = 0; i < base.segments.size(); ++i) {
      if (base.is_truthful_segment(i)) continue;
      for (std::size_t j = 0; j < mean.size(); ++j)
        mean[j] += base.segments[i].weight / rest * base.segments[i].x.w[j];
    }
    pol.nontruthful_mean = Posterior{std::move(mean)};
  }
  pol.base = std::move(base);
  return pol;
}

/// Sender's one-shot (= long-run) utility under truthful play: mu on the
/// truthful segment, greedy everywhere else.
inline double truthful_value(const PersuasionInstance& inst,
                             const RepeatedPolicy& pol) {
  double v = pol.truthful_mass * inst.mu;
  for (std::size_t i = 0; i < pol.base.segments.size(); ++i) {
    if (pol.base.is_truthful_segment(i)) continue;
    const PolicySegment& seg = pol.base.segments[i];
    v += seg.weight *
         sender_utility(inst, seg.x, greedy_best_response(inst, seg.x).lie);
  }
  return v;
}

namespace detail {

inline const RepeatedParams& repeated_params(const PersuasionInstance& inst) {
  if (!inst.repeated)
    fail(Errc::RepeatedParamsMissing,
         "instance has no repeated-game parameters (delta, u_bar)");
  return *inst.repeated;
}

}  // namespace detail

/// Right-hand side of the k-th incentive constraint: the truthful value a
/// policy must reach so that a one-shot deviation to p_k at the truthful
/// posterior does not pay.
inline double ic_rhs(const PersuasionInstance& inst, int k,
                     const Posterior& x_truthful) {
  const RepeatedParams& rp = detail::repeated_params(inst);
  const double tail = tail_mass(x_truthful, k);
  if (tail <= kSupportEps)
    fail(Errc::ZeroTail, "ic constraint " + std::to_string(k + 1) +
                             ": truthful posterior has no mass at or above "
                             "this type");
  const double p_k = inst.threshold(k);
  const double ratio = inst.mu / (1.0 - inst.mu) * (tail - 1.0) / (tail * p_k);
  return (1.0 - rp.delta) / rp.delta * (ratio + 1.0) + rp.u_bar;
}

struct ICCertificate {
  bool incentive_compatible = true;
  std::vector<int> constraint_type;  // type index of each checked constraint
  std::vector<double> slack;         // V(sigma) - rhs_k, aligned with above

  double min_slack() const {
    double m = std::numeric_limits<double>::infinity();
    for (double s : slack) m = std::min(m, s);
    return m;
  }
};

/// Checks every constraint with positive tail mass on the truthful posterior.
/// A policy without a truthful segment is vacuously incentive-compatible.
inline ICCertificate is_incentive_compatible(const PersuasionInstance& inst,
                                             const RepeatedPolicy& pol) {
  ICCertificate cert;
  if (pol.truthful_mass <= kSupportEps || !pol.truthful) return cert;
  const double v = truthful_value(inst, pol);
  for (int k = 0; k < inst.n(); ++k) {
    if (tail_mass(*pol.truthful, k) <= kSupportEps) continue;
    const double s = v - ic_rhs(inst, k, *pol.truthful);
    cert.constraint_type.push_back(k);
    cert.slack.push_back(s);
    if (s < -kTieTol) cert.incentive_compatible = false;
  }
  return cert;
}

/// Net normalized gain of a one-shot deviation to p_k at the truthful
/// posterior (deviate this period, then play truthfully unless punished).
/// Positive iff the deviation is profitable.
inline double deviation_value(const PersuasionInstance& inst,
                              const RepeatedPolicy& pol, int k) {
  const RepeatedParams& rp = detail::repeated_params(inst);
  if (!pol.truthful)
    fail(Errc::InconsistentPolicy, "deviation value: no truthful segment");
  const double tail = tail_mass(*pol.truthful, k);
  if (tail <= kSupportEps)
    fail(Errc::ZeroTail, "deviation value: zero tail mass at this type");
  const double p_k = inst.threshold(k);
  const double v = truthful_value(inst, pol);
  const double one_period =
      (1.0 - rp.delta) * (tail * (inst.mu + (1.0 - inst.mu) * p_k) - inst.mu);
  const double continuation =
      rp.delta * (1.0 - inst.mu) * tail * p_k * (rp.u_bar - v);
  return one_period + continuation;
}

/// The four closed forms available for lowest-type-targeting policies. The
/// conditional (non-truthful-part) entries are absent when the whole mass is
/// truthful.
struct ClosedFormReport {
  std::optional<double> sender_nontruthful;    // greedy sender value on the non-truthful part
  double truthful_value = 0.0;                 // sender value under truthful play
  std::optional<double> platform_nontruthful;  // user value on the non-truthful part
  double platform_truthful = 0.0;              // user value under truthful play
};

inline ClosedFormReport closed_form_report(const PersuasionInstance& inst,
                                           const RepeatedPolicy& pol) {
  if (!is_lowest_type_targeting(inst, pol.base))
    fail(Errc::NotLowestTypeTargeting,
         "closed forms require a lowest-type-targeting policy");
  double weighted_lies = 0.0;   // sum_i alpha_i p*(x^i) over non-truthful
  double weighted_theta = 0.0;  // sum_i alpha_i <x^i, theta>
  for (std::size_t i = 0; i < pol.base.segments.size(); ++i) {
    if (pol.base.is_truthful_segment(i)) continue;
    const PolicySegment& seg = pol.base.segments[i];
    weighted_lies += seg.weight * inst.threshold(seg.x.min_support());
    weighted_theta += seg.weight * seg.x.expected(inst.theta);
  }
  const double mu = inst.mu;
  const double prior_theta = Posterior{inst.prior}.expected(inst.theta);
  ClosedFormReport report;
  report.truthful_value = mu + (1.0 - mu) * weighted_lies;
  report.platform_truthful = mu * prior_theta - (1.0 - mu) * weighted_lies;
  const double rest = 1.0 - pol.truthful_mass;
  if (rest > kSupportEps) {
    report.sender_nontruthful = mu + (1.0 - mu) / rest * weighted_lies;
    report.platform_nontruthful =
        mu / rest * weighted_theta - (1.0 - mu) / rest * weighted_lies;
  }
  return report;
}

struct SolverConfig {
  int grid_points_per_axis = 33;
  int restarts = 8;
  double refine_tolerance = 1e-6;
  int max_refine_iters = 400;
};

struct SolveResult {
  RepeatedPolicy policy;
  SenderPolicy sender;
  double sender_value = 0.0;    // V of the returned policy
  double platform_value = 0.0;  // average user utility
  std::vector<int> ic_constraint_type;
  std::vector<double> ic_slack;
  bool fallback_used = false;  // no truthful request, pure one-shot policy
  int grid_points_per_axis = 0;
};

namespace detail {

// Greedy sender value at an arbitrary posterior, without the struct overhead.
inline double greedy_value(const PersuasionInstance& inst,
                           const std::vector<double>& w) {
  double best = 0.0;
  double tail = 0.0;
  for (int j = inst.n() - 1; j >= 0; --j) {
    tail += w[j];
    best = std::max(best,
                    tail * (inst.mu + (1.0 - inst.mu) * inst.threshold(j)));
  }
  return best;
}

struct SplitEval {
  double v = 0.0;
  double alpha = 0.0;
  bool feasible = false;
  bool fallback = false;
};

// Objective and feasibility of routing mass m_j of each type to the truthful
// posterior. Near-empty and near-full splits snap to the exact corners.
class SplitProblem {
 public:
  explicit SplitProblem(const PersuasionInstance& inst)
      : inst_(inst),
        monopoly_(monopoly_sender_utility(inst)),
        ic_base_((1.0 - inst.repeated->delta) / inst.repeated->delta +
                 inst.repeated->u_bar) {
    const double delta = inst.repeated->delta;
    rhs_coeff_.resize(inst.n());
    for (int k = 0; k < inst_.n(); ++k)
      rhs_coeff_[k] = (1.0 - delta) / delta * inst_.mu /
                      ((1.0 - inst_.mu) * inst_.threshold(k));
  }

  SplitEval evaluate(const std::vector<double>& m) const {
    SplitEval eval;
    double alpha = 0.0;
    for (double v : m) alpha += v;
    eval.alpha = alpha;
    if (alpha < kAlphaEdge) {
      eval.v = monopoly_;
      eval.feasible = true;
      eval.fallback = true;
      return eval;
    }
    thread_local std::vector<double> x_t, x_f;
    x_t.assign(m.size(), 0.0);
    if (alpha > 1.0 - kAlphaEdge) {
      eval.alpha = 1.0;
      x_t = inst_.prior;
      eval.v = inst_.mu;
    } else {
      x_f.assign(m.size(), 0.0);
      for (std::size_t j = 0; j < m.size(); ++j) {
        x_t[j] = m[j] / alpha;
        x_f[j] = std::max(inst_.prior[j] - m[j], 0.0) / (1.0 - alpha);
      }
      eval.v = alpha * inst_.mu + (1.0 - alpha) * greedy_value(inst_, x_f);
    }
    eval.feasible = true;
    double tail = 0.0;
    for (int k = inst_.n() - 1; k >= 0; --k) {
      tail += x_t[k];
      if (tail <= kSupportEps) continue;
      const double rhs = ic_base_ + rhs_coeff_[k] * (tail - 1.0) / tail;
      if (eval.v < rhs - kTieTol) {
        eval.feasible = false;
        break;
      }
    }
    return eval;
  }

  double monopoly() const { return monopoly_; }

  static constexpr double kAlphaEdge = 1e-9;

 private:
  const PersuasionInstance& inst_;
  double monopoly_;
  double ic_base_;
  std::vector<double> rhs_coeff_;
};

// Deterministic preference: lower V first, then lexicographically smaller m.
inline bool split_better(double v_a, const std::vector<double>& m_a,
                         double v_b, const std::vector<double>& m_b) {
  if (v_a != v_b) return v_a < v_b;
  return std::lexicographical_compare(m_a.begin(), m_a.end(), m_b.begin(),
                                      m_b.end());
}

}  // namespace detail

/// Two-step solver for the repeated problem: minimize the truthful sender
/// value over incentive-compatible mass splits (grid scan plus pattern-search
/// refinement, with the full-truthful corner and the no-truthful fallback as
/// explicit candidates), then segment the non-truthful remainder to hand the
/// saved surplus to the users.
inline SolveResult solve_repeated(const PersuasionInstance& inst,
                                  const SolverConfig& cfg = {}) {
  detail::repeated_params(inst);
  if (cfg.grid_points_per_axis < 8)
    fail(Errc::InvalidArgument, "solver: grid_points_per_axis must be >= 8");
  if (cfg.restarts < 1) fail(Errc::InvalidArgument, "solver: restarts must be >= 1");
  if (!(cfg.refine_tolerance > 0.0))
    fail(Errc::InvalidArgument, "solver: refine_tolerance must be positive");

  const int n = inst.n();
  const detail::SplitProblem problem(inst);

  // Cap the total grid size; the refinement recovers resolution.
  int grid = cfg.grid_points_per_axis;
  while (grid > 2 && std::pow(static_cast<double>(grid), n) > 2e6) --grid;
  const bool box_scan = std::pow(2.0, n) <= 2e6;

  struct Candidate {
    double v;
    std::vector<double> m;
  };
  std::vector<Candidate> seeds;  // best feasible cells, for refinement
  const std::size_t max_seeds = static_cast<std::size_t>(cfg.restarts);
  auto offer_seed = [&](double v, const std::vector<double>& m) {
    auto pos = seeds.begin();
    while (pos != seeds.end() && !detail::split_better(v, m, pos->v, pos->m))
      ++pos;
    seeds.insert(pos, Candidate{v, m});
    if (seeds.size() > max_seeds) seeds.pop_back();
  };

  std::vector<double> m(n, 0.0);
  const double step_denom = static_cast<double>(grid - 1);
  if (box_scan) {
    std::vector<int> idx(n, 0);
    bool done = false;
    while (!done) {
      for (int j = 0; j < n; ++j)
        m[j] = inst.prior[j] * static_cast<double>(idx[j]) / step_denom;
      const detail::SplitEval eval = problem.evaluate(m);
      if (eval.feasible && !eval.fallback) offer_seed(eval.v, m);
      for (int j = 0;; ++j) {
        if (j == n) {
          done = true;
          break;
        }
        if (++idx[j] < grid) break;
        idx[j] = 0;
      }
    }
  } else {
    // Too many types for a box scan: seed from the proportional-split path
    // and let the pattern search explore from there.
    for (int i = 0; i < cfg.grid_points_per_axis; ++i) {
      const double t = static_cast<double>(i) /
                       static_cast<double>(cfg.grid_points_per_axis - 1);
      for (int j = 0; j < n; ++j) m[j] = t * inst.prior[j];
      const detail::SplitEval eval = problem.evaluate(m);
      if (eval.feasible && !eval.fallback) offer_seed(eval.v, m);
    }
  }
  // The full-truthful corner, in case the grid skipped it via the axis cap.
  {
    const detail::SplitEval corner = problem.evaluate(inst.prior);
    if (corner.feasible) offer_seed(corner.v, inst.prior);
  }

  // Pattern-search refinement from each seed.
  Candidate best{problem.monopoly(), std::vector<double>(n, 0.0)};
  bool have_interior = false;
  for (const Candidate& seed : seeds) {
    std::vector<double> cur = seed.m;
    double cur_v = seed.v;
    std::vector<double> h(n);
    for (int j = 0; j < n; ++j) h[j] = inst.prior[j] / step_denom;
    int iters = 0;
    while (iters++ < cfg.max_refine_iters &&
           *std::max_element(h.begin(), h.end()) > cfg.refine_tolerance) {
      bool improved = false;
      for (int j = 0; j < n; ++j) {
        if (h[j] <= 0.0) continue;
        for (double dir : {-1.0, 1.0}) {
          std::vector<double> cand = cur;
          cand[j] = std::clamp(cand[j] + dir * h[j], 0.0, inst.prior[j]);
          const detail::SplitEval eval = problem.evaluate(cand);
          if (eval.feasible && !eval.fallback && eval.v < cur_v - 1e-15) {
            cur = std::move(cand);
            cur_v = eval.v;
            improved = true;
          }
        }
      }
      if (!improved)
        for (double& step : h) step *= 0.5;
    }
    if (!have_interior || detail::split_better(cur_v, cur, best.v, best.m)) {
      best = Candidate{cur_v, cur};
      have_interior = true;
    }
  }

  SolveResult result;
  result.grid_points_per_axis = grid;

  const double total_surplus =
      inst.mu * (1.0 + Posterior{inst.prior}.expected(inst.theta));
  const detail::SplitEval best_eval = problem.evaluate(best.m);
  const bool fallback =
      !have_interior || best_eval.fallback ||
      best_eval.v >= problem.monopoly() - kTieTol;

  if (fallback) {
    OneShotSolution one_shot = solve_one_shot(inst);
    result.policy = make_repeated_policy(inst, std::move(one_shot.policy));
    result.sender = std::move(one_shot.sender);
    result.fallback_used = true;
  } else if (best_eval.alpha >= 1.0 - detail::SplitProblem::kAlphaEdge) {
    PlatformPolicy base = make_platform_policy(
        inst, {PolicySegment{1.0, Posterior{inst.prior}}}, 0);
    result.policy = make_repeated_policy(inst, std::move(base));
    result.sender = SenderPolicy{{0.0}};
  } else {
    const double alpha = best_eval.alpha;
    std::vector<double> x_t(n), x_f(n);
    double t_sum = 0.0, f_sum = 0.0;
    for (int j = 0; j < n; ++j) {
      x_t[j] = best.m[j] / alpha;
      x_f[j] = std::max(inst.prior[j] - best.m[j], 0.0) / (1.0 - alpha);
      t_sum += x_t[j];
      f_sum += x_f[j];
    }
    for (int j = 0; j < n; ++j) {
      x_t[j] /= t_sum;
      x_f[j] /= f_sum;
    }
    PersuasionInstance conditional = inst;  // same types, prior swapped to x^F
    conditional.prior = x_f;
    const ReductionMap map = to_market(conditional);
    PulledBackPolicy pulled = pull_back(consumer_optimal_segmentation(map.market), map);
    std::vector<PolicySegment> segments;
    SenderPolicy sender;
    segments.push_back(PolicySegment{alpha, Posterior{x_t}});
    sender.lies.push_back(0.0);
    for (std::size_t i = 0; i < pulled.policy.segments.size(); ++i) {
      segments.push_back(
          PolicySegment{(1.0 - alpha) * pulled.policy.segments[i].weight,
                        pulled.policy.segments[i].x});
      sender.lies.push_back(pulled.sender.lies[i]);
    }
    result.policy =
        make_repeated_policy(inst, make_platform_policy(inst, segments, 0));
    result.sender = std::move(sender);
  }

  const UtilityReport report =
      policy_utilities(inst, result.policy.base, result.sender);
  result.sender_value = report.sender;
  result.platform_value = report.platform;
  if (std::abs(result.platform_value - (total_surplus - result.sender_value)) >
      kCoordTol)
    fail(Errc::IdentityCheckFailed,
         "solver: platform value disagrees with the surplus-sum identity");
  ICCertificate cert = is_incentive_compatible(inst, result.policy);
  result.ic_constraint_type = std::move(cert.constraint_type);
  result.ic_slack = std::move(cert.slack);
  return result;
}

}  // namespace pplat
