#pragma once

// Market segmentation: optimal uniform pricing, extremal markets, the greedy
// consumer-surplus-maximizing segmentation, surplus accounting and Pareto
// mixing between the consumer-optimal and full-revelation segmentations.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "pplat/core.hpp"

namespace pplat {

/// Distribution over a fixed grid of consumer valuations.
struct Market {
  std::vector<double> values;  // strictly increasing, positive
  std::vector<double> masses;  // probability vector

  int n() const { return static_cast<int>(values.size()); }
};

inline Market make_market(std::vector<double> values,
                          std::vector<double> masses) {
  if (values.empty()) fail(Errc::SizeMismatch, "market: no valuations");
  if (values.size() != masses.size())
    fail(Errc::SizeMismatch, "market: values and masses lengths differ");
  double prev = 0.0;
  for (double v : values) {
    if (!(v > prev))
      fail(Errc::InvalidArgument,
           "market: values must be strictly increasing and positive");
    prev = v;
  }
  masses = detail::checked_simplex(std::move(masses), Errc::NotSimplex,
                                   "market masses");
  return Market{std::move(values), std::move(masses)};
}

/// One segment of a segmentation: sub-market masses on the shared value grid
/// plus the charged price, stored as an index into the grid.
struct MarketSegment {
  double weight = 0.0;
  std::vector<double> masses;
  int price_index = 0;
};

struct Segmentation {
  std::vector<double> values;
  std::vector<MarketSegment> segments;
};

struct SurplusReport {
  double consumer = 0.0;
  double producer = 0.0;
  double total = 0.0;
};

/// Revenue from charging the k-th value: everyone with valuation >= v_k buys.
inline double revenue(const Market& market, int k) {
  double demand = 0.0;
  for (std::size_t j = static_cast<std::size_t>(k); j < market.masses.size();
       ++j)
    demand += market.masses[j];
  return market.values[k] * demand;
}

/// Smallest revenue-maximizing price index.
inline int optimal_uniform_price(const Market& market) {
  int best = 0;
  double best_revenue = -1.0;
  double demand = 0.0;
  std::vector<double> rev(market.n());
  for (int k = market.n() - 1; k >= 0; --k) {
    demand += market.masses[k];
    rev[k] = market.values[k] * demand;
  }
  for (int k = 0; k < market.n(); ++k) {
    if (rev[k] > best_revenue + kTieTol) {
      best = k;
      best_revenue = rev[k];
    }
  }
  return best;
}

/// The unique market supported on `support` in which every supported price
/// earns the same revenue (and unsupported prices earn weakly less). Tail
/// masses are v_min/v_i across the support.
inline std::vector<double> extremal_market(const std::vector<double>& values,
                                           const std::vector<int>& support) {
  if (support.empty())
    fail(Errc::InvalidArgument, "extremal market: empty support");
  std::vector<double> masses(values.size(), 0.0);
  const double v_min = values[support.front()];
  for (std::size_t t = 0; t < support.size(); ++t) {
    const double tail = v_min / values[support[t]];
    const double next_tail =
        t + 1 < support.size() ? v_min / values[support[t + 1]] : 0.0;
    masses[support[t]] = tail - next_tail;
  }
  return masses;
}

namespace detail {

inline std::vector<int> mass_support(const std::vector<double>& masses) {
  std::vector<int> support;
  for (std::size_t j = 0; j < masses.size(); ++j)
    if (masses[j] > kSupportEps) support.push_back(static_cast<int>(j));
  return support;
}

}  // namespace detail

/// Greedy extremal peeling: repeatedly extracts the largest feasible multiple
/// of the extremal market on the residual's support, priced at the lowest
/// supported value. The result is efficient (every consumer buys) and leaves
/// the producer exactly the uniform monopoly revenue.
inline Segmentation consumer_optimal_segmentation(const Market& aggregate) {
  Segmentation seg;
  seg.values = aggregate.values;
  std::vector<double> residual = aggregate.masses;
  double remaining = std::accumulate(residual.begin(), residual.end(), 0.0);
  int rounds = 0;
  while (remaining >= kSupportEps) {
    if (++rounds > aggregate.n() + 1)
      fail(Errc::ResidualStall, "segmentation: peeling did not terminate");
    const std::vector<int> support = detail::mass_support(residual);
    if (support.empty()) break;
    const std::vector<double> extremal =
        extremal_market(aggregate.values, support);
    double beta = remaining;
    for (int j : support) beta = std::min(beta, residual[j] / extremal[j]);
    if (beta <= 0.0)
      fail(Errc::ResidualStall, "segmentation: nonpositive peel weight");
    seg.segments.push_back(MarketSegment{beta, extremal, support.front()});
    remaining = 0.0;
    for (int j : support) {
      residual[j] -= beta * extremal[j];
      if (residual[j] < kSupportEps) residual[j] = 0.0;
      remaining += residual[j];
    }
  }
  return seg;
}

/// Consumer and producer surplus under the segmentation's pricing rule.
inline SurplusReport surpluses(const Segmentation& seg) {
  SurplusReport report;
  for (const MarketSegment& segment : seg.segments) {
    const double price = seg.values[segment.price_index];
    for (std::size_t j = static_cast<std::size_t>(segment.price_index);
         j < segment.masses.size(); ++j) {
      report.consumer +=
          segment.weight * segment.masses[j] * (seg.values[j] - price);
      report.producer += segment.weight * segment.masses[j] * price;
    }
  }
  report.total = report.consumer + report.producer;
  return report;
}

/// Full revelation: every valuation in its own segment, priced at itself.
inline Segmentation full_revelation_segmentation(const Market& aggregate) {
  Segmentation seg;
  seg.values = aggregate.values;
  for (int j = 0; j < aggregate.n(); ++j) {
    if (aggregate.masses[j] <= kSupportEps) continue;
    std::vector<double> point(aggregate.masses.size(), 0.0);
    point[j] = 1.0;
    seg.segments.push_back(MarketSegment{aggregate.masses[j], point, j});
  }
  return seg;
}

/// Mixture of the consumer-optimal segmentation (weight 1-lambda) and full
/// revelation (weight lambda); sweeps the Pareto frontier between them.
inline Segmentation pareto_mix(const Market& aggregate, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    fail(Errc::InvalidArgument, "pareto mix: lambda must lie in [0,1]");
  Segmentation seg;
  seg.values = aggregate.values;
  const Segmentation consumer_optimal = consumer_optimal_segmentation(aggregate);
  for (const MarketSegment& s : consumer_optimal.segments) {
    const double w = (1.0 - lambda) * s.weight;
    if (w <= kSupportEps) continue;
    seg.segments.push_back(MarketSegment{w, s.masses, s.price_index});
  }
  const Segmentation full = full_revelation_segmentation(aggregate);
  for (const MarketSegment& s : full.segments) {
    const double w = lambda * s.weight;
    if (w <= kSupportEps) continue;
    seg.segments.push_back(MarketSegment{w, s.masses, s.price_index});
  }
  return seg;
}

}  // namespace pplat
