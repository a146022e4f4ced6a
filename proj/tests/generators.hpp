#pragma once

// Shared fixtures and random generators for the test binaries.

#include <cmath>
#include <vector>

#include "pplat/core.hpp"
#include "pplat/segmentation.hpp"
#include "pplat/simulate.hpp"
#include "pplat/verify.hpp"

namespace testgen {

// theta = [0.2, 0.8], prior = [0.2, 0.8], mu = 0.5. Derived quantities used
// all over the suite: thresholds [0.2, 0.8], no-info sender value 0.72,
// user-optimal one-shot platform value 0.12, full surplus 0.84.
inline pplat::PersuasionInstance instance_a() {
  pplat::PersuasionInstance inst;
  inst.theta = {0.2, 0.8};
  inst.prior = {0.2, 0.8};
  inst.mu = 0.5;
  return pplat::validate_instance(std::move(inst));
}

inline pplat::PersuasionInstance instance_a_repeated(double delta,
                                                     double u_bar) {
  pplat::PersuasionInstance inst = instance_a();
  inst.repeated = pplat::RepeatedParams{delta, u_bar};
  return pplat::validate_instance(std::move(inst));
}

// theta = [0.2, 0.6], prior = [0.5, 0.5], mu = 0.5; the aggregate is already
// lowest-type-targeting here.
inline pplat::PersuasionInstance instance_b() {
  pplat::PersuasionInstance inst;
  inst.theta = {0.2, 0.6};
  inst.prior = {0.5, 0.5};
  inst.mu = 0.5;
  return pplat::validate_instance(std::move(inst));
}

inline std::vector<double> random_simplex(int n, pplat::RngStream& rng,
                                          double floor_mass) {
  std::vector<double> w(n);
  double sum = 0.0;
  for (double& v : w) {
    v = floor_mass - std::log(1.0 - rng.uniform01());
    sum += v;
  }
  for (double& v : w) v /= sum;
  return w;
}

// Strictly increasing draws in (lo, hi), one per bin so ordering never ties.
inline std::vector<double> increasing_values(int n, double lo, double hi,
                                             pplat::RngStream& rng) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    const double bin = (static_cast<double>(i) + 0.05 + 0.9 * rng.uniform01()) /
                       static_cast<double>(n);
    v[i] = lo + (hi - lo) * bin;
  }
  return v;
}

inline pplat::PersuasionInstance random_instance(int n, pplat::RngStream& rng,
                                                 bool with_repeated) {
  pplat::PersuasionInstance inst;
  inst.mu = 0.1 + 0.4 * rng.uniform01();
  const double cap = 1.0 / inst.mu - 1.0;  // keeps every threshold within 1
  inst.theta = increasing_values(n, 0.02 * cap, 0.98 * cap, rng);
  inst.prior = random_simplex(n, rng, 0.1);
  if (with_repeated) {
    pplat::RepeatedParams rp;
    rp.delta = 0.35 + 0.6 * rng.uniform01();
    rp.u_bar = 0.0;
    inst.repeated = rp;
    const double monopoly = pplat::monopoly_sender_utility(inst);
    inst.repeated->u_bar = monopoly * (0.15 + 0.75 * rng.uniform01());
  }
  return pplat::validate_instance(std::move(inst));
}

inline pplat::Market random_market(int n, pplat::RngStream& rng) {
  return pplat::make_market(increasing_values(n, 0.05, 1.0, rng),
                            random_simplex(n, rng, 0.05));
}

}  // namespace testgen
