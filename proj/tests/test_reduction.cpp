#include <catch2/catch_amalgamated.hpp>

#include "generators.hpp"
#include "pplat/reduction.hpp"

using namespace pplat;
using testgen::instance_a;
using testgen::instance_b;

namespace {

bool near(double a, double b, double tol = 1e-9) { return std::abs(a - b) <= tol; }

}  // namespace

TEST_CASE("to_market maps thresholds to valuations") {
  const ReductionMap map_a = to_market(instance_a());
  REQUIRE(near(map_a.market.values[0], 0.6, 1e-12));
  REQUIRE(near(map_a.market.values[1], 0.9, 1e-12));
  REQUIRE(near(map_a.market.masses[0], 0.2, 1e-15));

  const ReductionMap map_b = to_market(instance_b());
  REQUIRE(near(map_b.market.values[0], 0.6, 1e-12));
  REQUIRE(near(map_b.market.values[1], 0.8, 1e-12));

  // v_j - mu = (1-mu) tau_j holds identically
  RngStream rng(91);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 3.0);
    const PersuasionInstance inst = testgen::random_instance(n, rng, false);
    const ReductionMap map = to_market(inst);
    for (int j = 0; j < n; ++j)
      REQUIRE(near(map.market.values[j] - inst.mu,
                   (1.0 - inst.mu) * inst.threshold(j), 1e-12));
  }
}

TEST_CASE("price and lie maps are mutually inverse") {
  REQUIRE(near(price_to_lie(0.6, 0.5), 0.2, 1e-12));
  REQUIRE(near(lie_to_price(0.0, 0.37), 0.37, 1e-15));
  REQUIRE_THROWS_AS(price_to_lie(0.3, 0.5), Error);

  RngStream rng(101);
  for (int t = 0; t < 100; ++t) {
    const double mu = 0.05 + 0.9 * rng.uniform01();
    const double p = rng.uniform01();
    REQUIRE(near(price_to_lie(lie_to_price(p, mu), mu), p, 1e-12));
  }
}

TEST_CASE("pull_back realizes the utility-surplus identities") {
  const PersuasionInstance a = instance_a();
  const ReductionMap map = to_market(a);
  const Segmentation seg = consumer_optimal_segmentation(map.market);
  const PulledBackPolicy pulled = pull_back(seg, map);

  REQUIRE(pulled.policy.segments.size() == 2);
  REQUIRE(near(pulled.policy.segments[0].weight, 0.6, 1e-12));
  REQUIRE(near(pulled.sender.lies[0], 0.2, 1e-12));
  REQUIRE(near(pulled.sender.lies[1], 0.8, 1e-12));

  const UtilityReport utilities =
      policy_utilities(a, pulled.policy, pulled.sender);
  const SurplusReport s = surpluses(seg);
  REQUIRE(near(utilities.sender, s.producer, 1e-12));
  REQUIRE(near(utilities.platform, s.consumer, 1e-12));
}

TEST_CASE("pulling back a one-segment segmentation recovers the greedy pair") {
  const PersuasionInstance a = instance_a();
  const ReductionMap map = to_market(a);
  Segmentation trivial;
  trivial.values = map.market.values;
  trivial.segments.push_back(
      MarketSegment{1.0, map.market.masses, optimal_uniform_price(map.market)});
  const PulledBackPolicy pulled = pull_back(trivial, map);
  REQUIRE(pulled.policy.segments.size() == 1);
  REQUIRE(near(pulled.policy.segments[0].x.w[1], 0.8, 1e-15));
  REQUIRE(near(pulled.sender.lies[0], greedy_best_response(a, Posterior{a.prior}).lie,
               1e-12));
}

TEST_CASE("surplus identities hold on pinned pairs and random draws") {
  const PersuasionInstance a = instance_a();
  const ReductionMap map_a = to_market(a);
  REQUIRE(surplus_identity_check(a, Posterior{{0.2, 0.8}}, 0.8, map_a));
  REQUIRE(surplus_identity_check(a, Posterior{{0.2, 0.8}}, 0.0, map_a));

  const PersuasionInstance b = instance_b();
  REQUIRE(surplus_identity_check(b, Posterior{{0.5, 0.5}}, 0.2, to_market(b)));

  RngStream rng(111);
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 3.0);
    const PersuasionInstance inst = testgen::random_instance(n, rng, false);
    const ReductionMap map = to_market(inst);
    const Posterior x = random_posterior(n, rng);
    const double lie = random_candidate_lie(inst, rng);
    REQUIRE(surplus_identity_check(inst, x, lie, map));
  }
}

TEST_CASE("greedy targeting equals optimal pricing under the map") {
  RngStream rng(121);
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 3.0);
    const PersuasionInstance inst = testgen::random_instance(n, rng, false);
    const ReductionMap map = to_market(inst);
    const Posterior x = random_posterior(n, rng);
    const Market mkt{map.market.values, x.w};
    REQUIRE(greedy_best_response(inst, x).index == optimal_uniform_price(mkt));
  }
}

TEST_CASE("solve_one_shot on the pinned instances") {
  const OneShotSolution sol_a = solve_one_shot(instance_a());
  REQUIRE(near(sol_a.utilities.platform, 0.12, 1e-9));
  REQUIRE(near(sol_a.utilities.sender, 0.72, 1e-9));

  const OneShotSolution sol_b = solve_one_shot(instance_b());
  REQUIRE(near(sol_b.utilities.platform, 0.1, 1e-9));
  REQUIRE(near(sol_b.utilities.sender, 0.6, 1e-9));

  PersuasionInstance single;
  single.theta = {0.4};
  single.prior = {1.0};
  single.mu = 0.5;
  const OneShotSolution sol_s = solve_one_shot(validate_instance(single));
  REQUIRE(near(sol_s.utilities.platform, 0.0, 1e-12));
  REQUIRE(near(sol_s.utilities.sender, 0.5 * 1.4, 1e-12));
}

TEST_CASE("solve_one_shot output satisfies its contract") {
  RngStream rng(131);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 3.0);
    const PersuasionInstance inst = testgen::random_instance(n, rng, false);
    const OneShotSolution sol = solve_one_shot(inst);
    REQUIRE(is_lowest_type_targeting(inst, sol.policy));
    REQUIRE(near(sol.utilities.sender, monopoly_sender_utility(inst), 1e-9));
    for (int j = 0; j < n; ++j) {
      double mean = 0.0;
      for (const PolicySegment& s : sol.policy.segments)
        mean += s.weight * s.x.w[j];
      REQUIRE(near(mean, inst.prior[j], 1e-9));
    }
  }
}
