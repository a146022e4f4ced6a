#pragma once

// Core domain model for persuasion-platform problems: instances, posteriors,
// platform/sender policies, one-shot utilities and the greedy sender response.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pplat {

// Numeric conventions used across the library.
inline constexpr double kSimplexTol = 1e-12;   // probability vectors sum to 1
inline constexpr double kCoordTol = 1e-9;      // Bayes-plausibility, per coordinate
inline constexpr double kTieTol = 1e-12;       // utility/revenue comparisons
inline constexpr double kSupportEps = 1e-12;   // mass below this counts as zero

enum class Errc {
  NonIncreasingTheta,
  PriorNotSimplex,
  MuOutOfRange,
  ThresholdExceedsOne,
  PunishmentTooHigh,
  DeltaOutOfRange,
  SizeMismatch,
  NotSimplex,
  SegmentCountMismatch,
  TooManyTruthful,
  NotBayesPlausible,
  ZeroTail,
  NotLowestTypeTargeting,
  PriceBelowMu,
  ResidualStall,
  InconsistentPolicy,
  RepeatedParamsMissing,
  IdentityCheckFailed,
  InvalidArgument,
  ParseError,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::NonIncreasingTheta: return "NonIncreasingTheta";
    case Errc::PriorNotSimplex: return "PriorNotSimplex";
    case Errc::MuOutOfRange: return "MuOutOfRange";
    case Errc::ThresholdExceedsOne: return "ThresholdExceedsOne";
    case Errc::PunishmentTooHigh: return "PunishmentTooHigh";
    case Errc::DeltaOutOfRange: return "DeltaOutOfRange";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::NotSimplex: return "NotSimplex";
    case Errc::SegmentCountMismatch: return "SegmentCountMismatch";
    case Errc::TooManyTruthful: return "TooManyTruthful";
    case Errc::NotBayesPlausible: return "NotBayesPlausible";
    case Errc::ZeroTail: return "ZeroTail";
    case Errc::NotLowestTypeTargeting: return "NotLowestTypeTargeting";
    case Errc::PriceBelowMu: return "PriceBelowMu";
    case Errc::ResidualStall: return "ResidualStall";
    case Errc::InconsistentPolicy: return "InconsistentPolicy";
    case Errc::RepeatedParamsMissing: return "RepeatedParamsMissing";
    case Errc::IdentityCheckFailed: return "IdentityCheckFailed";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
  }
  return "UnknownError";
}

// A recommendation with lying probability `lie` is followed by a user whose
// threshold is `threshold`. Ties at the threshold count as following, with a
// small band so that algebraically equal values compare equal.
inline bool follows_recommendation(double lie, double threshold) {
  return lie <= threshold + kTieTol;
}

struct RepeatedParams {
  double delta = 0.0;  // sender discount factor, in (0,1)
  double u_bar = 0.0;  // per-period utility at the low-reputation state
};

/// Problem instance: user types with prior, quality prior, and optionally the
/// reputation-game parameters.
struct PersuasionInstance {
  std::vector<double> theta;  // strictly increasing, positive
  std::vector<double> prior;  // probability vector over types
  double mu = 0.0;            // probability of the high-quality state
  std::optional<RepeatedParams> repeated;

  int n() const { return static_cast<int>(theta.size()); }

  // Maximal lying probability a type-j user tolerates.
  double threshold(int j) const { return mu / (1.0 - mu) * theta[j]; }

  std::vector<double> thresholds() const {
    std::vector<double> t(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j)
      t[j] = threshold(static_cast<int>(j));
    return t;
  }
};

inline double persuasion_threshold(double theta, double mu) {
  return mu / (1.0 - mu) * theta;
}

namespace detail {

// Checks a candidate probability vector; clamps negative dust to zero.
inline std::vector<double> checked_simplex(std::vector<double> w, Errc code,
                                           const std::string& what) {
  if (w.empty()) fail(code, what + ": empty probability vector");
  double sum = 0.0;
  for (double& v : w) {
    if (v < 0.0) {
      if (v < -kSimplexTol) fail(code, what + ": negative entry");
      v = 0.0;
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTol)
    fail(code, what + ": entries sum to " + std::to_string(sum));
  return w;
}

}  // namespace detail

/// Distribution over user types, used both as a belief and as a signal.
struct Posterior {
  std::vector<double> w;

  int n() const { return static_cast<int>(w.size()); }

  // Smallest index carrying mass.
  int min_support() const {
    for (std::size_t j = 0; j < w.size(); ++j)
      if (w[j] > kSupportEps) return static_cast<int>(j);
    return 0;
  }

  double expected(const std::vector<double>& values) const {
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * values[j];
    return s;
  }
};

inline Posterior make_posterior(std::vector<double> weights) {
  return Posterior{detail::checked_simplex(std::move(weights), Errc::NotSimplex,
                                           "posterior")};
}

// Mass of types with persuasion threshold weakly above the k-th one.
inline double tail_mass(const Posterior& x, int k) {
  double s = 0.0;
  for (std::size_t j = static_cast<std::size_t>(k); j < x.w.size(); ++j)
    s += x.w[j];
  return s;
}

struct PolicySegment {
  double weight = 0.0;
  Posterior x;
};

/// Finite-support, Bayes-plausible distribution over posteriors. At most one
/// segment may be designated truthful.
struct PlatformPolicy {
  std::vector<PolicySegment> segments;
  std::optional<std::size_t> truthful_index;

  bool is_truthful_segment(std::size_t i) const {
    return truthful_index && *truthful_index == i;
  }
  double truthful_weight() const {
    return truthful_index ? segments[*truthful_index].weight : 0.0;
  }
};

/// Validates weights, Bayes-plausibility against the prior, and the truthful
/// designation. Zero-weight segments are dropped.
inline PlatformPolicy make_platform_policy(
    const PersuasionInstance& inst, std::vector<PolicySegment> segments,
    std::optional<std::size_t> truthful_index = std::nullopt) {
  if (truthful_index && *truthful_index >= segments.size())
    fail(Errc::InvalidArgument, "platform policy: truthful index out of range");

  PlatformPolicy policy;
  const std::size_t n = inst.theta.size();
  double weight_sum = 0.0;
  std::vector<double> mean(n, 0.0);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const PolicySegment& seg = segments[i];
    if (seg.x.w.size() != n)
      fail(Errc::SizeMismatch, "platform policy: posterior length mismatch");
    if (seg.weight < -kSimplexTol)
      fail(Errc::NotSimplex, "platform policy: negative segment weight");
    weight_sum += std::max(seg.weight, 0.0);
    for (std::size_t j = 0; j < n; ++j) mean[j] += seg.weight * seg.x.w[j];
    if (seg.weight <= kSupportEps) continue;  // dropped
    if (truthful_index && *truthful_index == i)
      policy.truthful_index = policy.segments.size();
    policy.segments.push_back(seg);
  }
  if (std::abs(weight_sum - 1.0) > kSimplexTol)
    fail(Errc::NotSimplex, "platform policy: weights sum to " +
                               std::to_string(weight_sum));
  for (std::size_t j = 0; j < n; ++j)
    if (std::abs(mean[j] - inst.prior[j]) > kCoordTol)
      fail(Errc::NotBayesPlausible,
           "platform policy: mean posterior differs from prior at coordinate " +
               std::to_string(j + 1));
  return policy;
}

/// Lying probabilities, one per policy segment.
struct SenderPolicy {
  std::vector<double> lies;
};

struct UtilityReport {
  double sender = 0.0;
  double platform = 0.0;
  std::vector<double> per_type;  // expected utility of a type-j user
};

/// Sender's expected one-shot utility from lying probability `lie` at
/// posterior `x`.
inline double sender_utility(const PersuasionInstance& inst, const Posterior& x,
                             double lie) {
  double u = 0.0;
  for (int j = 0; j < inst.n(); ++j)
    if (follows_recommendation(lie, inst.threshold(j)))
      u += x.w[j] * (inst.mu + (1.0 - inst.mu) * lie);
  return u;
}

/// Per-type user utilities and their x-weighted mean for a single posterior.
inline UtilityReport platform_utility(const PersuasionInstance& inst,
                                      const Posterior& x, double lie) {
  UtilityReport report;
  report.per_type.assign(inst.n(), 0.0);
  for (int j = 0; j < inst.n(); ++j) {
    if (follows_recommendation(lie, inst.threshold(j)))
      report.per_type[j] = inst.mu * inst.theta[j] - (1.0 - inst.mu) * lie;
    report.platform += x.w[j] * report.per_type[j];
  }
  report.sender = sender_utility(inst, x, lie);
  return report;
}

struct GreedyResponse {
  int index = 0;   // targeted type
  double lie = 0.0;  // its persuasion threshold
};

/// Myopically optimal lying probability at posterior `x`: targets the type
/// maximizing tail-mass times per-sale margin, lowest type on ties.
inline GreedyResponse greedy_best_response(const PersuasionInstance& inst,
                                           const Posterior& x) {
  int best = 0;
  double best_value = -1.0;
  double tail = 0.0;
  std::vector<double> value(inst.n());
  for (int j = inst.n() - 1; j >= 0; --j) {
    tail += x.w[j];
    value[j] = tail * (inst.mu + (1.0 - inst.mu) * inst.threshold(j));
  }
  for (int j = 0; j < inst.n(); ++j) {
    if (value[j] > best_value + kTieTol) {
      best = j;
      best_value = value[j];
    }
  }
  return GreedyResponse{best, inst.threshold(best)};
}

/// Greedy lying probability on every segment.
inline SenderPolicy greedy_policy(const PersuasionInstance& inst,
                                  const PlatformPolicy& policy) {
  SenderPolicy p;
  p.lies.reserve(policy.segments.size());
  for (const PolicySegment& seg : policy.segments)
    p.lies.push_back(greedy_best_response(inst, seg.x).lie);
  return p;
}

/// Greedy everywhere except zero lying on the designated truthful segment.
inline SenderPolicy truthful_policy(const PersuasionInstance& inst,
                                    const PlatformPolicy& policy) {
  SenderPolicy p = greedy_policy(inst, policy);
  if (policy.truthful_index) p.lies[*policy.truthful_index] = 0.0;
  return p;
}

/// Weight-averaged utilities of a policy pair. A designated truthful segment
/// is evaluated at zero lying probability regardless of the sender entry.
inline UtilityReport policy_utilities(const PersuasionInstance& inst,
                                      const PlatformPolicy& policy,
                                      const SenderPolicy& sender) {
  if (sender.lies.size() != policy.segments.size())
    fail(Errc::SegmentCountMismatch,
         "policy utilities: sender policy has " +
             std::to_string(sender.lies.size()) + " entries for " +
             std::to_string(policy.segments.size()) + " segments");
  UtilityReport report;
  report.per_type.assign(inst.n(), 0.0);
  for (std::size_t i = 0; i < policy.segments.size(); ++i) {
    const PolicySegment& seg = policy.segments[i];
    const double lie = policy.is_truthful_segment(i) ? 0.0 : sender.lies[i];
    UtilityReport part = platform_utility(inst, seg.x, lie);
    report.sender += seg.weight * part.sender;
    report.platform += seg.weight * part.platform;
    for (int j = 0; j < inst.n(); ++j)
      report.per_type[j] += seg.weight * seg.x.w[j] * part.per_type[j];
  }
  // Per-type entries are conditional on the user's type.
  for (int j = 0; j < inst.n(); ++j) {
    if (inst.prior[j] > kSupportEps)
      report.per_type[j] /= inst.prior[j];
    else
      report.per_type[j] = 0.0;
  }
  return report;
}

/// True iff the greedy response targets the lowest supported type on every
/// non-truthful segment, so that every user follows the recommendation.
inline bool is_lowest_type_targeting(const PersuasionInstance& inst,
                                     const PlatformPolicy& policy) {
  for (std::size_t i = 0; i < policy.segments.size(); ++i) {
    if (policy.is_truthful_segment(i)) continue;
    const Posterior& x = policy.segments[i].x;
    if (greedy_best_response(inst, x).index != x.min_support()) return false;
  }
  return true;
}

namespace detail {

inline Posterior renormalized_slice(const Posterior& x, int lo, int hi,
                                    double mass) {
  Posterior out;
  out.w.assign(x.w.size(), 0.0);
  for (int j = lo; j < hi; ++j) out.w[j] = x.w[j] / mass;
  return out;
}

}  // namespace detail

/// Repeatedly splits every segment whose greedy target is not its lowest
/// supported type into the renormalized upper tail (from the target) and the
/// renormalized lower part. Weakly improves the platform, strictly improves
/// the sender unless already lowest-type-targeting.
inline PlatformPolicy improve_to_lowest_type_targeting(
    const PersuasionInstance& inst, const PlatformPolicy& policy) {
  PlatformPolicy out;
  const std::size_t max_splits =
      static_cast<std::size_t>(inst.n()) * policy.segments.size() + 1;
  std::size_t splits = 0;
  for (std::size_t i = 0; i < policy.segments.size(); ++i) {
    if (policy.is_truthful_segment(i)) {
      out.truthful_index = out.segments.size();
      out.segments.push_back(policy.segments[i]);
      continue;
    }
    std::vector<PolicySegment> stack{policy.segments[i]};
    while (!stack.empty()) {
      PolicySegment seg = std::move(stack.back());
      stack.pop_back();
      const int target = greedy_best_response(inst, seg.x).index;
      const double upper = tail_mass(seg.x, target);
      if (target == seg.x.min_support() || upper <= kSupportEps ||
          upper >= 1.0 - kSupportEps) {
        out.segments.push_back(std::move(seg));
        continue;
      }
      if (++splits > max_splits)
        fail(Errc::ResidualStall,
             "lowest-type-targeting improvement did not terminate");
      PolicySegment low{seg.weight * (1.0 - upper),
                        detail::renormalized_slice(seg.x, 0, target, 1.0 - upper)};
      PolicySegment high{seg.weight * upper,
                         detail::renormalized_slice(seg.x, target, inst.n(), upper)};
      stack.push_back(std::move(low));   // processed after `high`
      stack.push_back(std::move(high));
    }
  }
  return out;
}

/// Checks ordering, simplex, threshold-range and repeated-parameter
/// constraints; returns the instance unchanged on success.
inline PersuasionInstance validate_instance(PersuasionInstance raw) {
  if (raw.theta.empty()) fail(Errc::SizeMismatch, "instance: no types");
  if (raw.theta.size() != raw.prior.size())
    fail(Errc::SizeMismatch, "instance: theta and prior lengths differ");
  double prev = 0.0;  // also enforces theta_1 > 0
  for (double t : raw.theta) {
    if (!(t > prev))
      fail(Errc::NonIncreasingTheta,
           "instance: theta must be strictly increasing and positive");
    prev = t;
  }
  if (!(raw.mu > 0.0 && raw.mu < 1.0))
    fail(Errc::MuOutOfRange, "instance: mu must lie in (0,1)");
  raw.prior = detail::checked_simplex(std::move(raw.prior),
                                      Errc::PriorNotSimplex, "instance prior");
  if (raw.mu * (1.0 + raw.theta.back()) > 1.0 + kTieTol)
    fail(Errc::ThresholdExceedsOne,
         "instance: mu*(1+theta_n) exceeds 1, top type unconditionally "
         "persuadable");
  if (raw.repeated) {
    if (!(raw.repeated->delta > 0.0 && raw.repeated->delta < 1.0))
      fail(Errc::DeltaOutOfRange, "instance: delta must lie in (0,1)");
    Posterior prior_x{raw.prior};
    const double monopoly =
        sender_utility(raw, prior_x, greedy_best_response(raw, prior_x).lie);
    if (raw.repeated->u_bar >= monopoly)
      fail(Errc::PunishmentTooHigh,
           "instance: u_bar must be below the no-information sender utility " +
               std::to_string(monopoly));
  }
  return raw;
}

/// Sender utility of the greedy response at the prior (no information).
inline double monopoly_sender_utility(const PersuasionInstance& inst) {
  Posterior prior_x{inst.prior};
  return sender_utility(inst, prior_x,
                        greedy_best_response(inst, prior_x).lie);
}

}  // namespace pplat
