#pragma once

// Brute-force baselines used by tests and the verify command. Everything here
// is plain enumeration over outcome branches or grid points, kept textually
// independent of the closed forms it is used to check. Slow on purpose.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pplat/core.hpp"
#include "pplat/segmentation.hpp"

namespace pplat {

struct GridSpec {
  int resolution = 50;    // grid points per axis
  int max_segments = 3;   // segmentation search depth
};

/// One-shot utilities by summing over every (type, quality, recommendation)
/// branch of the interaction, with no closed form.
inline UtilityReport enumerate_one_shot_utilities(const PersuasionInstance& inst,
                                                  const Posterior& x,
                                                  double lie) {
  UtilityReport report;
  report.per_type.assign(inst.n(), 0.0);
  for (int j = 0; j < inst.n(); ++j) {
    const double tolerates = inst.mu / (1.0 - inst.mu) * inst.theta[j];
    double sender_j = 0.0, user_j = 0.0;
    // high quality, recommendation always sent
    if (lie <= tolerates + 1e-12) {  // user follows the recommendation
      sender_j += inst.mu * 1.0;
      user_j += inst.mu * inst.theta[j];
    }
    // low quality, recommendation sent with probability `lie`
    if (lie <= tolerates + 1e-12) {
      sender_j += (1.0 - inst.mu) * lie * 1.0;
      user_j += (1.0 - inst.mu) * lie * (-1.0);
    }
    // no recommendation: the user stays out, both earn nothing
    report.per_type[j] = user_j;
    report.sender += x.w[j] * sender_j;
    report.platform += x.w[j] * user_j;
  }
  return report;
}

namespace detail {

// Consumer surplus of an (absolute-mass) segment under its enumerated
// revenue-optimal price, ties broken toward the lower price.
inline double segment_consumer_surplus(const std::vector<double>& values,
                                       const std::vector<double>& masses) {
  const int n = static_cast<int>(values.size());
  int best_k = 0;
  double best_revenue = -1.0;
  for (int k = 0; k < n; ++k) {
    double demand = 0.0;
    for (int j = k; j < n; ++j) demand += masses[j];
    const double rev = values[k] * demand;
    if (rev > best_revenue + 1e-12) {
      best_k = k;
      best_revenue = rev;
    }
  }
  double surplus = 0.0;
  for (int j = best_k; j < n; ++j)
    surplus += masses[j] * (values[j] - values[best_k]);
  return surplus;
}

}  // namespace detail

/// Best consumer surplus found by exhaustively splitting the aggregate into
/// two segments on a per-coordinate mass grid (and, for three-point markets,
/// into three segments on a coarser grid). A lower-bound prober for the
/// segmentation algorithm's optimality.
inline double grid_segmentation_search(const Market& aggregate,
                                       const GridSpec& spec) {
  if (spec.resolution < 8)
    fail(Errc::InvalidArgument, "grid search: resolution must be >= 8");
  const int n = aggregate.n();
  const std::vector<double>& pi = aggregate.masses;
  double best = detail::segment_consumer_surplus(aggregate.values, pi);

  const int res = spec.resolution;
  std::vector<int> idx(n, 0);
  std::vector<double> a(n), b(n);
  bool done = false;
  while (!done) {
    double wa = 0.0, wb = 0.0;
    for (int j = 0; j < n; ++j) {
      a[j] = pi[j] * static_cast<double>(idx[j]) / static_cast<double>(res - 1);
      b[j] = pi[j] - a[j];
      wa += a[j];
      wb += b[j];
    }
    if (wa > 1e-12 && wb > 1e-12) {
      const double cs = detail::segment_consumer_surplus(aggregate.values, a) +
                        detail::segment_consumer_surplus(aggregate.values, b);
      best = std::max(best, cs);
    }
    for (int j = 0;; ++j) {
      if (j == n) {
        done = true;
        break;
      }
      if (++idx[j] < res) break;
      idx[j] = 0;
    }
  }

  if (n >= 3 && spec.max_segments >= 3) {
    const int res3 = std::min(res, 11);
    std::vector<int> ia(n, 0);
    std::vector<double> c(n), rem(n);
    bool done_a = false;
    while (!done_a) {
      double wa = 0.0;
      for (int j = 0; j < n; ++j) {
        a[j] = pi[j] * static_cast<double>(ia[j]) / static_cast<double>(res3 - 1);
        rem[j] = pi[j] - a[j];
        wa += a[j];
      }
      if (wa > 1e-12) {
        const double cs_a =
            detail::segment_consumer_surplus(aggregate.values, a);
        std::vector<int> ib(n, 0);
        bool done_b = false;
        while (!done_b) {
          double wb = 0.0, wc = 0.0;
          for (int j = 0; j < n; ++j) {
            b[j] = rem[j] * static_cast<double>(ib[j]) /
                   static_cast<double>(res3 - 1);
            c[j] = rem[j] - b[j];
            wb += b[j];
            wc += c[j];
          }
          if (wb > 1e-12 && wc > 1e-12) {
            const double cs =
                cs_a + detail::segment_consumer_surplus(aggregate.values, b) +
                detail::segment_consumer_surplus(aggregate.values, c);
            best = std::max(best, cs);
          }
          for (int j = 0;; ++j) {
            if (j == n) {
              done_b = true;
              break;
            }
            if (++ib[j] < res3) break;
            ib[j] = 0;
          }
        }
      }
      for (int j = 0;; ++j) {
        if (j == n) {
          done_a = true;
          break;
        }
        if (++ia[j] < res3) break;
        ia[j] = 0;
      }
    }
  }
  return best;
}

namespace detail {

// Greedy sender value at a posterior, via the enumeration oracle: try every
// threshold as the lying probability and keep the best.
inline double enumerated_monopoly_value(const PersuasionInstance& inst,
                                        const Posterior& x) {
  double best = 0.0;
  for (int k = 0; k < inst.n(); ++k) {
    const double p = inst.mu / (1.0 - inst.mu) * inst.theta[k];
    best = std::max(best, enumerate_one_shot_utilities(inst, x, p).sender);
  }
  return best;
}

// Raw incentive inequality from the deviation comparison, before any
// rearrangement: one period of truthful play plus the truthful continuation
// must beat one deviation period plus the punished/unpunished mixture.
inline bool raw_ic_holds(const PersuasionInstance& inst, double v,
                         const std::vector<double>& x_truthful) {
  const double delta = inst.repeated->delta;
  const double u_bar = inst.repeated->u_bar;
  const double mu = inst.mu;
  for (int k = 0; k < inst.n(); ++k) {
    double tail = 0.0;
    for (int j = k; j < inst.n(); ++j) tail += x_truthful[j];
    if (tail <= 1e-12) continue;
    const double p_k = mu / (1.0 - mu) * inst.theta[k];
    const double lhs = (1.0 - delta) * mu + delta * v;
    const double caught = (1.0 - mu) * tail * p_k;
    const double rhs = (1.0 - delta) * tail * (mu + (1.0 - mu) * p_k) +
                       delta * (caught * u_bar + (1.0 - caught) * v);
    if (lhs < rhs - 1e-12) return false;
  }
  return true;
}

}  // namespace detail

struct RepeatedGridResult {
  double sender_value = 0.0;    // best feasible truthful value found
  double platform_value = 0.0;  // implied user value
  std::vector<double> truthful_mass_split;
  bool fallback = false;  // the no-truthful-request corner won
};

/// Exhaustive scan of the truthful-mass-split box: every grid point is
/// checked against the raw incentive inequality, with the no-truthful corner
/// always available as fallback.
inline RepeatedGridResult grid_repeated_search(const PersuasionInstance& inst,
                                               const GridSpec& spec) {
  if (!inst.repeated)
    fail(Errc::RepeatedParamsMissing, "grid search: repeated parameters missing");
  if (spec.resolution < 8)
    fail(Errc::InvalidArgument, "grid search: resolution must be >= 8");
  const int n = inst.n();
  const int res = spec.resolution;
  const std::vector<double>& prior = inst.prior;

  const double fallback_v =
      detail::enumerated_monopoly_value(inst, Posterior{prior});

  double best_v = fallback_v;
  std::vector<double> best_m(n, 0.0);
  bool best_is_fallback = true;

  std::vector<int> idx(n, 0);
  std::vector<double> m(n), x_t(n), x_f(n);
  bool done = false;
  while (!done) {
    double alpha = 0.0;
    for (int j = 0; j < n; ++j) {
      m[j] = prior[j] * static_cast<double>(idx[j]) / static_cast<double>(res - 1);
      alpha += m[j];
    }
    if (alpha > 1e-9) {
      double v;
      for (int j = 0; j < n; ++j) x_t[j] = m[j] / alpha;
      if (alpha > 1.0 - 1e-9) {
        v = enumerate_one_shot_utilities(inst, Posterior{x_t}, 0.0).sender;
      } else {
        double f_sum = 0.0;
        for (int j = 0; j < n; ++j) {
          x_f[j] = std::max(prior[j] - m[j], 0.0);
          f_sum += x_f[j];
        }
        for (int j = 0; j < n; ++j) x_f[j] /= f_sum;
        v = alpha * enumerate_one_shot_utilities(inst, Posterior{x_t}, 0.0).sender +
            (1.0 - alpha) * detail::enumerated_monopoly_value(inst, Posterior{x_f});
      }
      if (detail::raw_ic_holds(inst, v, x_t) &&
          (v < best_v ||
           (v == best_v && std::lexicographical_compare(
                               m.begin(), m.end(), best_m.begin(), best_m.end())))) {
        best_v = v;
        best_m = m;
        best_is_fallback = false;
      }
    }
    for (int j = 0;; ++j) {
      if (j == n) {
        done = true;
        break;
      }
      if (++idx[j] < res) break;
      idx[j] = 0;
    }
  }

  RepeatedGridResult result;
  result.sender_value = best_v;
  result.truthful_mass_split = best_m;
  result.fallback = best_is_fallback;
  double prior_theta = 0.0;
  for (int j = 0; j < n; ++j) prior_theta += prior[j] * inst.theta[j];
  result.platform_value = inst.mu * (1.0 + prior_theta) - best_v;
  return result;
}

/// Desk-derived candidate optimum of the repeated problem: the dominant
/// incentive constraint pins the truthful value at (1-delta)/delta + u_bar,
/// clamped between the fully-truthful value mu and the no-information value
/// (where the clamp means falling back to the one-shot policy). Used only as
/// a cross-check against the grid search.
inline double analytic_v_star(const PersuasionInstance& inst) {
  if (!inst.repeated)
    fail(Errc::RepeatedParamsMissing, "analytic value: repeated parameters missing");
  const double binding =
      (1.0 - inst.repeated->delta) / inst.repeated->delta + inst.repeated->u_bar;
  const double fallback =
      detail::enumerated_monopoly_value(inst, Posterior{inst.prior});
  return std::clamp(binding, inst.mu, fallback);
}

}  // namespace pplat
