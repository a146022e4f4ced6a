#pragma once

// Monte Carlo simulation of the repeated reputation game: full trajectories,
// punishment-hazard estimation, and the one-shot-deviation value estimator.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pplat/core.hpp"
#include "pplat/repeated.hpp"

namespace pplat {

enum class Reputation { High, Low };

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Deterministic random stream (splitmix64): a fixed algorithm so identical
/// seeds give identical trajectories on every platform. Substreams are
/// derived by mixing the seed with the substream index.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed)
      : seed_(seed), state_(detail::splitmix64(seed)) {}

  RngStream split(std::uint64_t index) const {
    return RngStream(detail::splitmix64(seed_ ^ (index + 1)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Index drawn proportionally to the (nonnegative) weights.
  int categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform01() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t state_ = 0;
};

struct SimConfig {
  long long periods = 100000;
  std::uint64_t seed = 1;
  std::optional<int> deviate_type;  // stationary deviation to this threshold
                                    // on the truthful segment
  bool keep_log = false;
};

struct PeriodRecord {
  long long period = 0;
  int theta_index = -1;  // -1 once the sender sits in the low state
  int segment = -1;
  int omega = 0;
  int recommendation = 0;
  int action = 0;
  char reputation = 'H';
};

struct SimReport {
  double discounted_sender_utility = 0.0;  // (1-delta)-normalized
  double truncation_bound = 0.0;           // bound on the discarded tail
  double avg_sender_utility = 0.0;
  double avg_user_utility = 0.0;
  double user_utility_se = 0.0;  // standard error of the per-period mean
  std::optional<long long> punishment_period;
  long long high_periods = 0;
  std::vector<PeriodRecord> log;
};

namespace detail {

struct ConditionalSegmentLaw {
  // weights[j][i] = alpha_i * x^i_j, the segment law given a type-j user
  std::vector<std::vector<double>> weights;
};

inline ConditionalSegmentLaw conditional_segment_law(
    const PersuasionInstance& inst, const PlatformPolicy& policy) {
  ConditionalSegmentLaw law;
  law.weights.assign(inst.theta.size(),
                     std::vector<double>(policy.segments.size(), 0.0));
  for (std::size_t j = 0; j < inst.theta.size(); ++j)
    for (std::size_t i = 0; i < policy.segments.size(); ++i)
      law.weights[j][i] =
          policy.segments[i].weight * policy.segments[i].x.w[j];
  return law;
}

}  // namespace detail

/// Simulates the reputation game period by period. The sender plays the given
/// lying probabilities (zero on the truthful segment unless a deviation type
/// is configured); users best-respond to the lying probability in force on
/// their segment; a lie bought on the truthful segment moves the sender to
/// the absorbing low state.
inline SimReport simulate(const PersuasionInstance& inst,
                          const RepeatedPolicy& pol, const SenderPolicy& sender,
                          const SimConfig& cfg) {
  const RepeatedParams& rp = detail::repeated_params(inst);
  if (cfg.periods < 1) fail(Errc::InvalidArgument, "simulate: periods must be >= 1");
  if (sender.lies.size() != pol.base.segments.size())
    fail(Errc::InconsistentPolicy,
         "simulate: sender policy does not match the platform policy");
  for (const PolicySegment& seg : pol.base.segments)
    if (seg.x.w.size() != inst.theta.size())
      fail(Errc::InconsistentPolicy, "simulate: posterior length mismatch");
  if (cfg.deviate_type) {
    if (*cfg.deviate_type < 0 || *cfg.deviate_type >= inst.n())
      fail(Errc::InvalidArgument, "simulate: deviation type out of range");
    if (!pol.base.truthful_index)
      fail(Errc::InconsistentPolicy,
           "simulate: deviation requires a truthful segment");
  }

  std::vector<double> lies = sender.lies;
  if (pol.base.truthful_index) {
    lies[*pol.base.truthful_index] =
        cfg.deviate_type ? inst.threshold(*cfg.deviate_type) : 0.0;
  }

  const detail::ConditionalSegmentLaw law =
      detail::conditional_segment_law(inst, pol.base);
  RngStream rng(cfg.seed);

  SimReport report;
  Reputation rep = Reputation::High;
  double discounted = 0.0;
  double discount = 1.0;  // delta^(t-1)
  double user_sum = 0.0, user_sq = 0.0, sender_sum = 0.0;

  for (long long t = 1; t <= cfg.periods; ++t) {
    PeriodRecord rec;
    rec.period = t;
    double sender_u = 0.0, user_u = 0.0;
    if (rep == Reputation::Low) {
      sender_u = rp.u_bar;
      rec.reputation = 'L';
    } else {
      const int j = rng.categorical(inst.prior);
      const int i = rng.categorical(law.weights[j]);
      const bool high_quality = rng.bernoulli(inst.mu);
      const bool recommended = high_quality || rng.bernoulli(lies[i]);
      const bool follows = follows_recommendation(lies[i], inst.threshold(j));
      const bool buys = recommended && follows;
      sender_u = buys ? 1.0 : 0.0;
      user_u = buys ? (high_quality ? inst.theta[j] : -1.0) : 0.0;
      rec.theta_index = j;
      rec.segment = i;
      rec.omega = high_quality ? 1 : 0;
      rec.recommendation = recommended ? 1 : 0;
      rec.action = buys ? 1 : 0;
      ++report.high_periods;
      if (pol.base.is_truthful_segment(static_cast<std::size_t>(i)) &&
          !high_quality && buys) {
        rep = Reputation::Low;
        report.punishment_period = t;
      }
    }
    discounted += discount * sender_u;
    discount *= rp.delta;
    sender_sum += sender_u;
    user_sum += user_u;
    user_sq += user_u * user_u;
    if (cfg.keep_log) report.log.push_back(rec);
  }

  const double n = static_cast<double>(cfg.periods);
  report.discounted_sender_utility = (1.0 - rp.delta) * discounted;
  report.truncation_bound =
      std::pow(rp.delta, static_cast<double>(cfg.periods)) *
      std::max(1.0, std::abs(rp.u_bar));
  report.avg_sender_utility = sender_sum / n;
  report.avg_user_utility = user_sum / n;
  const double var = std::max(0.0, user_sq / n - report.avg_user_utility *
                                                     report.avg_user_utility);
  report.user_utility_se = std::sqrt(var / n);
  return report;
}

struct HazardEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long long punishments = 0;
  long long exposure = 0;  // high-reputation periods observed
};

/// Punishment probability per high-reputation period under a stationary
/// deviation, pooled over independent replications. Each high period is an
/// independent Bernoulli trial, so the usual binomial standard error applies.
inline HazardEstimate estimate_punishment_hazard(
    const PersuasionInstance& inst, const RepeatedPolicy& pol,
    const SenderPolicy& sender, int deviate_type, int replications,
    long long max_periods, std::uint64_t seed) {
  HazardEstimate est;
  for (int r = 0; r < replications; ++r) {
    SimConfig cfg;
    cfg.periods = max_periods;
    cfg.seed = detail::splitmix64(seed ^ (static_cast<std::uint64_t>(r) + 17));
    cfg.deviate_type = deviate_type;
    const SimReport rep = simulate(inst, pol, sender, cfg);
    est.exposure += rep.high_periods;
    if (rep.punishment_period) ++est.punishments;
  }
  if (est.exposure > 0) {
    est.mean = static_cast<double>(est.punishments) /
               static_cast<double>(est.exposure);
    est.std_error = std::sqrt(est.mean * (1.0 - est.mean) /
                              static_cast<double>(est.exposure));
  }
  return est;
}

struct DeviationGainEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Paired Monte Carlo estimate of the one-shot-deviation gain at the truthful
/// posterior: the current period is played both truthfully and with the
/// deviation on common random draws; the truthful continuation is simulated
/// only when the deviation branch gets punished.
inline DeviationGainEstimate estimate_deviation_gain(
    const PersuasionInstance& inst, const RepeatedPolicy& pol,
    const SenderPolicy& sender, int deviate_type, int runs,
    std::uint64_t seed) {
  const RepeatedParams& rp = detail::repeated_params(inst);
  if (!pol.truthful)
    fail(Errc::InconsistentPolicy,
         "deviation gain: policy has no truthful segment");
  if (tail_mass(*pol.truthful, deviate_type) <= kSupportEps)
    fail(Errc::ZeroTail, "deviation gain: zero tail mass at this type");
  if (runs < 2) fail(Errc::InvalidArgument, "deviation gain: runs must be >= 2");

  const double delta = rp.delta;
  const double p_dev = inst.threshold(deviate_type);
  // Horizon long enough that the discarded tail is far below the noise.
  long long horizon = 64;
  while (std::pow(delta, static_cast<double>(horizon)) > 1e-9 &&
         horizon < 200000)
    horizon *= 2;

  std::vector<double> lies = sender.lies;
  lies[*pol.base.truthful_index] = 0.0;  // truthful continuation play
  const detail::ConditionalSegmentLaw law =
      detail::conditional_segment_law(inst, pol.base);

  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < runs; ++r) {
    RngStream rng(detail::splitmix64(seed ^ (static_cast<std::uint64_t>(r) + 101)));
    // Common draws for the current period at the truthful posterior.
    const int j = rng.categorical(pol.truthful->w);
    const bool high_quality = rng.bernoulli(inst.mu);
    const double lie_roll = rng.uniform01();

    const double truthful_now = high_quality ? 1.0 : 0.0;
    const bool dev_recommends = high_quality || lie_roll < p_dev;
    const bool dev_follows = follows_recommendation(p_dev, inst.threshold(j));
    const bool dev_buys = dev_recommends && dev_follows;
    const double deviate_now = dev_buys ? 1.0 : 0.0;
    const bool punished = dev_buys && !high_quality;

    double gain = (1.0 - delta) * (deviate_now - truthful_now);
    if (punished) {
      // Truthful continuation value from the next period, simulated.
      double cont = 0.0;
      double discount = 1.0;
      for (long long t = 0; t < horizon; ++t) {
        const int jt = rng.categorical(inst.prior);
        const int it = rng.categorical(law.weights[jt]);
        const bool hq = rng.bernoulli(inst.mu);
        const bool recd = hq || rng.bernoulli(lies[it]);
        const bool buy =
            recd && follows_recommendation(lies[it], inst.threshold(jt));
        cont += discount * (buy ? 1.0 : 0.0);
        discount *= delta;
      }
      cont *= 1.0 - delta;
      gain += delta * (rp.u_bar - cont);
    }
    sum += gain;
    sum_sq += gain * gain;
  }
  DeviationGainEstimate est;
  const double n = static_cast<double>(runs);
  est.mean = sum / n;
  const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
  est.std_error = std::sqrt(var / n);
  return est;
}

}  // namespace pplat
