#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "generators.hpp"
#include "pplat/core.hpp"
#include "pplat/oracle.hpp"

using namespace pplat;
using testgen::instance_a;
using testgen::instance_b;

namespace {

bool near(double a, double b, double tol = 1e-9) { return std::abs(a - b) <= tol; }

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("validate_instance accepts a well-formed instance") {
  PersuasionInstance inst;
  inst.theta = {0.2, 0.8};
  inst.prior = {0.2, 0.8};
  inst.mu = 0.5;
  REQUIRE_NOTHROW(validate_instance(inst));
}

TEST_CASE("validate_instance rejects each malformed field") {
  PersuasionInstance ok = instance_a();

  PersuasionInstance bad = ok;
  bad.theta = {0.8, 0.2};
  REQUIRE(code_of([&] { validate_instance(bad); }) == Errc::NonIncreasingTheta);

  bad = ok;
  bad.theta = {-0.1, 0.2};
  REQUIRE(code_of([&] { validate_instance(bad); }) == Errc::NonIncreasingTheta);

  bad = ok;
  bad.prior = {0.3, 0.8};
  REQUIRE(code_of([&] { validate_instance(bad); }) == Errc::PriorNotSimplex);

  bad = ok;
  bad.mu = 1.2;
  REQUIRE(code_of([&] { validate_instance(bad); }) == Errc::MuOutOfRange);

  bad = ok;
  bad.theta = {0.2, 1.5};  // 0.5 * 2.5 = 1.25 > 1
  REQUIRE(code_of([&] { validate_instance(bad); }) == Errc::ThresholdExceedsOne);

  bad = ok;
  bad.repeated = RepeatedParams{1.5, 0.3};
  REQUIRE(code_of([&] { validate_instance(bad); }) == Errc::DeltaOutOfRange);

  bad = ok;
  bad.repeated = RepeatedParams{0.9, 0.75};  // no-info sender value is 0.72
  REQUIRE(code_of([&] { validate_instance(bad); }) == Errc::PunishmentTooHigh);

  bad = ok;
  bad.prior = {1.0};
  REQUIRE(code_of([&] { validate_instance(bad); }) == Errc::SizeMismatch);
}

TEST_CASE("persuasion_threshold evaluates and is monotone") {
  REQUIRE(near(persuasion_threshold(0.2, 0.5), 0.2, 1e-12));
  REQUIRE(near(persuasion_threshold(0.8, 0.5), 0.8, 1e-12));
  REQUIRE(near(persuasion_threshold(0.6, 0.25), 0.2, 1e-12));

  RngStream rng(11);
  for (int t = 0; t < 200; ++t) {
    const double mu = 0.05 + 0.9 * rng.uniform01();
    const double theta = 0.01 + rng.uniform01();
    const double d_theta = 1e-4 + rng.uniform01() * 0.1;
    const double d_mu = (1.0 - mu - 1e-6) * rng.uniform01() * 0.5 + 1e-6;
    REQUIRE(persuasion_threshold(theta + d_theta, mu) >
            persuasion_threshold(theta, mu));
    REQUIRE(persuasion_threshold(theta, mu + d_mu) >
            persuasion_threshold(theta, mu));
  }
}

TEST_CASE("sender_utility closed form on pinned cases") {
  const PersuasionInstance inst = instance_a();
  REQUIRE(near(sender_utility(inst, Posterior{{0.2, 0.8}}, 0.8), 0.72, 1e-12));
  REQUIRE(near(sender_utility(inst, Posterior{{0.7, 0.3}}, 0.0), 0.5, 1e-12));
  REQUIRE(near(sender_utility(inst, Posterior{{1.0, 0.0}}, 1.0), 0.0, 1e-12));
}

TEST_CASE("platform_utility closed form on pinned cases") {
  const PersuasionInstance a = instance_a();
  const UtilityReport r1 = platform_utility(a, Posterior{{0.2, 0.8}}, 0.8);
  REQUIRE(near(r1.platform, 0.0, 1e-12));
  REQUIRE(near(r1.per_type[0], 0.0, 1e-12));  // excluded type earns nothing
  REQUIRE(near(r1.per_type[1], 0.0, 1e-12));  // indifferent at its threshold

  const PersuasionInstance b = instance_b();
  const UtilityReport r2 = platform_utility(b, Posterior{{0.5, 0.5}}, 0.2);
  REQUIRE(near(r2.platform, 0.1, 1e-12));
  REQUIRE(near(r2.per_type[0], 0.0, 1e-12));
  REQUIRE(near(r2.per_type[1], 0.2, 1e-12));

  // a single type priced exactly at its threshold earns zero
  const UtilityReport r3 =
      platform_utility(a, Posterior{{1.0, 0.0}}, a.threshold(0));
  REQUIRE(near(r3.platform, 0.0, 1e-12));
}

TEST_CASE("greedy_best_response picks the maximizing type, lowest on ties") {
  const PersuasionInstance a = instance_a();
  const GreedyResponse g1 = greedy_best_response(a, Posterior{{0.2, 0.8}});
  REQUIRE(g1.index == 1);
  REQUIRE(near(g1.lie, 0.8, 1e-12));

  const PersuasionInstance b = instance_b();
  const GreedyResponse g2 = greedy_best_response(b, Posterior{{0.5, 0.5}});
  REQUIRE(g2.index == 0);
  REQUIRE(near(g2.lie, 0.2, 1e-12));

  REQUIRE(greedy_best_response(a, Posterior{{1.0, 0.0}}).index == 0);

  // exact indifference on instance A at (1/3, 2/3): both types give 0.6
  const GreedyResponse tie =
      greedy_best_response(a, Posterior{{1.0 / 3.0, 2.0 / 3.0}});
  REQUIRE(tie.index == 0);
}

TEST_CASE("greedy_best_response maximizes over full enumeration") {
  RngStream rng(21);
  for (int t = 0; t < 2000; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 3.0);
    const PersuasionInstance inst = testgen::random_instance(n, rng, false);
    const Posterior x = random_posterior(n, rng);
    const GreedyResponse g = greedy_best_response(inst, x);
    double best = 0.0;
    std::vector<double> value(n);
    for (int k = 0; k < n; ++k) {
      value[k] =
          tail_mass(x, k) * (inst.mu + (1.0 - inst.mu) * inst.threshold(k));
      best = std::max(best, value[k]);
    }
    REQUIRE(value[g.index] >= best - 1e-12);
    int lowest = 0;
    while (value[lowest] < best - 1e-12) ++lowest;
    REQUIRE(lowest == g.index);
  }
}

TEST_CASE("policy_utilities weights segments and forces truthful honesty") {
  const PersuasionInstance a = instance_a();

  PlatformPolicy single =
      make_platform_policy(a, {PolicySegment{1.0, Posterior{{0.2, 0.8}}}});
  const UtilityReport r1 = policy_utilities(a, single, greedy_policy(a, single));
  REQUIRE(near(r1.sender, 0.72, 1e-12));
  REQUIRE(near(r1.platform, 0.0, 1e-12));

  PlatformPolicy split = make_platform_policy(
      a, {PolicySegment{0.6, Posterior{{1.0 / 3.0, 2.0 / 3.0}}},
          PolicySegment{0.4, Posterior{{0.0, 1.0}}}});
  const UtilityReport r2 =
      policy_utilities(a, split, SenderPolicy{{0.2, 0.8}});
  REQUIRE(near(r2.sender, 0.72, 1e-12));
  REQUIRE(near(r2.platform, 0.12, 1e-12));

  PlatformPolicy reveal = make_platform_policy(
      a, {PolicySegment{0.2, Posterior{{1.0, 0.0}}},
          PolicySegment{0.8, Posterior{{0.0, 1.0}}}});
  const UtilityReport r3 =
      policy_utilities(a, reveal, SenderPolicy{{0.2, 0.8}});
  REQUIRE(near(r3.platform, 0.0, 1e-12));
  REQUIRE(near(r3.sender, 0.84, 1e-12));  // mu*(1 + sum x_j theta_j)

  // a designated truthful segment is always evaluated at zero lying
  PlatformPolicy truthful =
      make_platform_policy(a, {PolicySegment{1.0, Posterior{{0.2, 0.8}}}}, 0);
  const UtilityReport r4 =
      policy_utilities(a, truthful, SenderPolicy{{0.8}});
  REQUIRE(near(r4.sender, 0.5, 1e-12));

  REQUIRE_THROWS_AS(policy_utilities(a, split, SenderPolicy{{0.2}}), Error);
}

TEST_CASE("per-type utilities aggregate back to the platform value") {
  RngStream rng(31);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 3.0);
    const PersuasionInstance inst = testgen::random_instance(n, rng, false);
    const PlatformPolicy pol = random_policy(inst, rng, false);
    const UtilityReport r = policy_utilities(inst, pol, greedy_policy(inst, pol));
    double total = 0.0;
    for (int j = 0; j < n; ++j) total += inst.prior[j] * r.per_type[j];
    REQUIRE(near(total, r.platform, 1e-12));
  }
}

TEST_CASE("is_lowest_type_targeting classifies the pinned examples") {
  const PersuasionInstance a = instance_a();
  PlatformPolicy good = make_platform_policy(
      a, {PolicySegment{0.6, Posterior{{1.0 / 3.0, 2.0 / 3.0}}},
          PolicySegment{0.4, Posterior{{0.0, 1.0}}}});
  REQUIRE(is_lowest_type_targeting(a, good));

  PlatformPolicy bad =
      make_platform_policy(a, {PolicySegment{1.0, Posterior{{0.2, 0.8}}}});
  REQUIRE_FALSE(is_lowest_type_targeting(a, bad));

  PlatformPolicy reveal = make_platform_policy(
      a, {PolicySegment{0.2, Posterior{{1.0, 0.0}}},
          PolicySegment{0.8, Posterior{{0.0, 1.0}}}});
  REQUIRE(is_lowest_type_targeting(a, reveal));
}

TEST_CASE("improvement splits the pinned example exactly") {
  const PersuasionInstance a = instance_a();
  PlatformPolicy pol =
      make_platform_policy(a, {PolicySegment{1.0, Posterior{{0.2, 0.8}}}});
  const PlatformPolicy improved = improve_to_lowest_type_targeting(a, pol);
  REQUIRE(improved.segments.size() == 2);
  REQUIRE(near(improved.segments[0].weight, 0.8, 1e-12));
  REQUIRE(near(improved.segments[0].x.w[0], 0.0, 1e-12));
  REQUIRE(near(improved.segments[0].x.w[1], 1.0, 1e-12));
  REQUIRE(near(improved.segments[1].weight, 0.2, 1e-12));
  REQUIRE(near(improved.segments[1].x.w[0], 1.0, 1e-12));

  const UtilityReport before = policy_utilities(a, pol, greedy_policy(a, pol));
  const UtilityReport after =
      policy_utilities(a, improved, greedy_policy(a, improved));
  REQUIRE(near(before.sender, 0.72, 1e-12));
  REQUIRE(near(after.sender, 0.84, 1e-12));
  REQUIRE(near(before.platform, 0.0, 1e-12));
  REQUIRE(near(after.platform, 0.0, 1e-12));

  // already lowest-type-targeting: unchanged
  const PlatformPolicy again = improve_to_lowest_type_targeting(a, improved);
  REQUIRE(again.segments.size() == improved.segments.size());
  for (std::size_t i = 0; i < again.segments.size(); ++i)
    REQUIRE(near(again.segments[i].weight, improved.segments[i].weight, 1e-15));
}

TEST_CASE("improvement dominates and terminates on random policies") {
  RngStream rng(41);
  int nontrivial = 0;
  for (int t = 0; t < 400; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 3.0);
    const PersuasionInstance inst = testgen::random_instance(n, rng, false);
    const PlatformPolicy pol = random_policy(inst, rng, t % 3 == 0);
    const bool was_ltt = is_lowest_type_targeting(inst, pol);
    const UtilityReport before = policy_utilities(inst, pol, greedy_policy(inst, pol));
    const PlatformPolicy improved = improve_to_lowest_type_targeting(inst, pol);
    const UtilityReport after =
        policy_utilities(inst, improved, greedy_policy(inst, improved));

    REQUIRE(is_lowest_type_targeting(inst, improved));
    REQUIRE(improved.segments.size() <=
            pol.segments.size() * static_cast<std::size_t>(n));
    if (!was_ltt) {
      REQUIRE(after.sender > before.sender + 1e-12);
      ++nontrivial;
    }
    REQUIRE(after.platform >= before.platform - 1e-12);
    // mean posterior is preserved
    for (int j = 0; j < n; ++j) {
      double mean = 0.0;
      for (const PolicySegment& s : improved.segments)
        mean += s.weight * s.x.w[j];
      REQUIRE(near(mean, inst.prior[j], 1e-9));
    }
    // the truthful segment is carried over untouched
    REQUIRE(pol.truthful_index.has_value() == improved.truthful_index.has_value());
    if (pol.truthful_index) {
      REQUIRE(near(improved.segments[*improved.truthful_index].weight,
                   pol.segments[*pol.truthful_index].weight, 1e-15));
    }
  }
  REQUIRE(nontrivial > 50);  // the draw actually exercises the splitting path
}

TEST_CASE("closed-form utilities equal branch enumeration") {
  RngStream rng(51);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 3.0);
    const PersuasionInstance inst = testgen::random_instance(n, rng, false);
    const Posterior x = random_posterior(n, rng);
    const double lie = random_candidate_lie(inst, rng);
    const UtilityReport closed = platform_utility(inst, x, lie);
    const UtilityReport enumd = enumerate_one_shot_utilities(inst, x, lie);
    worst = std::max(worst, std::abs(closed.sender - enumd.sender));
    worst = std::max(worst, std::abs(closed.platform - enumd.platform));
    for (int j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(closed.per_type[j] - enumd.per_type[j]));
  }
  REQUIRE(worst <= 1e-12);
}

TEST_CASE("platform policy construction enforces its invariants") {
  const PersuasionInstance a = instance_a();
  REQUIRE_THROWS_AS(
      make_platform_policy(a, {PolicySegment{0.9, Posterior{{0.2, 0.8}}}}),
      Error);
  REQUIRE_THROWS_AS(
      make_platform_policy(a, {PolicySegment{1.0, Posterior{{0.5, 0.5}}}}),
      Error);

  // zero-weight segments are dropped and the truthful index is remapped
  PlatformPolicy pol = make_platform_policy(
      a, {PolicySegment{0.0, Posterior{{1.0, 0.0}}},
          PolicySegment{1.0, Posterior{{0.2, 0.8}}}},
      1);
  REQUIRE(pol.segments.size() == 1);
  REQUIRE(pol.truthful_index.has_value());
  REQUIRE(*pol.truthful_index == 0);
}
