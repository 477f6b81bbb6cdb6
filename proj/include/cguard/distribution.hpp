// cguard/distribution.hpp
//
// Copyright 2026  cguard authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cguard/mulaw.hpp"
#include "cguard/rng.hpp"

namespace cguard {

// Categorical distributions over the 256 mu-law codes and the Gaussian
// probability mask that biases a generator toward its short-term linear
// prediction. Fusion runs in the log domain with max subtraction, so
// extreme exponents cannot overflow.

inline constexpr double kMaskFloor = 1e-12;

struct CategoricalDistribution {
  std::array<double, kMuLawLevels> probs{};
};

inline void validate_distribution(const CategoricalDistribution& p,
                                  double tol = 1e-9) {
  double sum = 0.0;
  for (double v : p.probs) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument("distribution: negative probability");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol) {
    throw std::invalid_argument("distribution: probabilities sum to " +
                                std::to_string(sum) + ", expected 1");
  }
}

inline CategoricalDistribution uniform_distribution() {
  CategoricalDistribution p;
  p.probs.fill(1.0 / kMuLawLevels);
  return p;
}

struct GaussianMask {
  std::array<double, kMuLawLevels> probs{};  // floored, normalized
  double mu = 0.0;
  double sigma = 0.0;
};

// Gaussian density evaluated at the mu-law decode levels, floored at
// `floor` and normalized. The floor keeps every code reachable: raising
// the mask to a large power suppresses off-prediction codes by a bounded
// factor instead of annihilating them.
inline GaussianMask gaussian_mask(double mu, double sigma,
                                  double floor = kMaskFloor) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gaussian_mask: sigma must be positive, got " +
                                std::to_string(sigma));
  }
  if (!(floor > 0.0) || floor >= 1.0 / kMuLawLevels) {
    throw std::invalid_argument("gaussian_mask: floor out of range");
  }
  const auto& levels = mulaw_decode_levels();
  std::array<double, kMuLawLevels> logp;
  double max_log = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < kMuLawLevels; ++b) {
    const double z = (levels[static_cast<std::size_t>(b)] - mu) / sigma;
    logp[static_cast<std::size_t>(b)] = -0.5 * z * z;
    max_log = std::max(max_log, logp[static_cast<std::size_t>(b)]);
  }
  GaussianMask m;
  m.mu = mu;
  m.sigma = sigma;
  double sum = 0.0;
  for (int b = 0; b < kMuLawLevels; ++b) {
    const auto i = static_cast<std::size_t>(b);
    m.probs[i] = std::max(std::exp(logp[i] - max_log), floor);
    sum += m.probs[i];
  }
  for (double& v : m.probs) v = std::max(v / sum, floor);
  return m;
}

// out[b] proportional to p[b] * m[b]^rho, renormalized. rho = 0 is the
// identity, rho -> infinity concentrates on the mask's mode (restricted to
// p's support). Exponents compose additively: applying rho_a then rho_b
// equals applying rho_a + rho_b.
inline CategoricalDistribution apply_constraint(
    const CategoricalDistribution& p, const GaussianMask& m, double rho) {
  if (!(rho >= 0.0)) {
    throw std::invalid_argument("apply_constraint: rho must be >= 0, got " +
                                std::to_string(rho));
  }
  std::array<double, kMuLawLevels> logw;
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < kMuLawLevels; ++b) {
    if (p.probs[b] > 0.0) {
      logw[b] = std::log(p.probs[b]) + rho * std::log(m.probs[b]);
      max_log = std::max(max_log, logw[b]);
    } else {
      logw[b] = -std::numeric_limits<double>::infinity();
    }
  }
  if (!std::isfinite(max_log)) {
    throw std::runtime_error("apply_constraint: distribution has no support");
  }
  CategoricalDistribution out;
  double sum = 0.0;
  for (std::size_t b = 0; b < kMuLawLevels; ++b) {
    out.probs[b] =
        std::isfinite(logw[b]) ? std::exp(logw[b] - max_log) : 0.0;
    sum += out.probs[b];
  }
  if (!(sum > 0.0)) {
    throw std::runtime_error("apply_constraint: constrained mass vanished");
  }
  for (double& v : out.probs) v /= sum;
  return out;
}

// Inverse-CDF draw: returns the lowest code whose cumulative probability
// exceeds the uniform variate.
inline MuLawCode sample_from(const CategoricalDistribution& p, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (int b = 0; b < kMuLawLevels; ++b) {
    cum += p.probs[static_cast<std::size_t>(b)];
    if (u < cum) return static_cast<MuLawCode>(b);
  }
  return static_cast<MuLawCode>(kMuLawLevels - 1);
}

// Argmax; ties resolve to the lowest code.
inline MuLawCode greedy_pick(const CategoricalDistribution& p) {
  std::size_t best = 0;
  for (std::size_t b = 1; b < kMuLawLevels; ++b) {
    if (p.probs[b] > p.probs[best]) best = b;
  }
  return static_cast<MuLawCode>(best);
}

// Escalation exponents for constrained regeneration: strictly increasing,
// all positive.
struct RhoSchedule {
  std::vector<double> values{0.01, 0.1, 1.0};

  void validate() const {
    if (values.empty()) {
      throw std::invalid_argument("rho schedule: must be nonempty");
    }
    double prev = 0.0;
    for (double v : values) {
      if (!(v > prev)) {
        throw std::invalid_argument(
            "rho schedule: values must be positive and strictly increasing");
      }
      prev = v;
    }
  }
};

}  // namespace cguard
