#pragma once

// Bridge between the persuasion problem and the equivalent market
// segmentation problem: thresholds map to valuations, lying probabilities to
// prices, segmentations to platform policies.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "pplat/core.hpp"
#include "pplat/segmentation.hpp"

namespace pplat {

/// Equivalent market of an instance: v_j = mu*(1+theta_j), masses = prior.
struct ReductionMap {
  PersuasionInstance instance;
  Market market;
};

inline ReductionMap to_market(const PersuasionInstance& inst) {
  std::vector<double> values(inst.theta.size());
  for (std::size_t j = 0; j < inst.theta.size(); ++j)
    values[j] = inst.mu * (1.0 + inst.theta[j]);
  return ReductionMap{inst, make_market(std::move(values), inst.prior)};
}

/// Inverse of the price map phi = mu + (1-mu) p.
inline double price_to_lie(double price, double mu) {
  if (price < mu - kTieTol)
    fail(Errc::PriceBelowMu, "price " + std::to_string(price) +
                                 " below the quality prior " +
                                 std::to_string(mu));
  return std::max(0.0, (price - mu) / (1.0 - mu));
}

inline double lie_to_price(double lie, double mu) {
  return mu + (1.0 - mu) * lie;
}

struct PulledBackPolicy {
  PlatformPolicy policy;
  SenderPolicy sender;
};

/// Reads a segmentation back as a platform policy: each market segment
/// becomes a posterior with the same weight, each price a lying probability.
/// Segment order and weights are preserved one-to-one.
inline PulledBackPolicy pull_back(const Segmentation& seg,
                                  const ReductionMap& map) {
  std::vector<PolicySegment> segments;
  SenderPolicy sender;
  segments.reserve(seg.segments.size());
  for (const MarketSegment& s : seg.segments) {
    segments.push_back(PolicySegment{s.weight, Posterior{s.masses}});
    sender.lies.push_back(
        price_to_lie(seg.values[s.price_index], map.instance.mu));
  }
  PlatformPolicy policy = make_platform_policy(map.instance, segments);
  if (policy.segments.size() != segments.size())
    fail(Errc::InvalidArgument, "pull back: zero-weight segment in input");
  return PulledBackPolicy{std::move(policy), std::move(sender)};
}

struct OneShotSolution {
  PlatformPolicy policy;
  SenderPolicy sender;
  UtilityReport utilities;
};

/// User-optimal one-shot platform policy via the segmentation reduction.
/// The sender keeps exactly the no-information utility; the platform gets the
/// rest of the efficient surplus.
inline OneShotSolution solve_one_shot(const PersuasionInstance& inst) {
  const ReductionMap map = to_market(inst);
  PulledBackPolicy pulled = pull_back(consumer_optimal_segmentation(map.market), map);
  UtilityReport utilities = policy_utilities(inst, pulled.policy, pulled.sender);
  return OneShotSolution{std::move(pulled.policy), std::move(pulled.sender),
                         std::move(utilities)};
}

/// Verifies the utility/surplus identities for one posterior-lie pair:
/// sender utility equals producer surplus at the mapped price, and each
/// type's utility equals the corresponding consumer's surplus.
inline bool surplus_identity_check(const PersuasionInstance& inst,
                                   const Posterior& x, double lie,
                                   const ReductionMap& map) {
  const double price = lie_to_price(lie, inst.mu);
  const std::vector<double>& values = map.market.values;

  double producer = 0.0;
  for (int j = 0; j < inst.n(); ++j)
    if (price <= values[j] + kTieTol) producer += x.w[j] * price;
  if (std::abs(sender_utility(inst, x, lie) - producer) > kTieTol) return false;

  const UtilityReport report = platform_utility(inst, x, lie);
  for (int j = 0; j < inst.n(); ++j) {
    const double w_j = price <= values[j] + kTieTol ? values[j] - price : 0.0;
    if (std::abs(report.per_type[j] - w_j) > kTieTol) return false;
  }
  return true;
}

}  // namespace pplat
