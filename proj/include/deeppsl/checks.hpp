// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

// Randomized property suites: gradient fidelity, MAP against a grid oracle,
// convexity of the penalized energy, and the surrogate's first-order
// behaviour. Used by `deeppsl check` and the acceptance binary.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "deeppsl/hlmrf.hpp"

namespace deeppsl {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;  // worst value observed
  double limit = 0.0;
  std::string detail;
};

struct CheckReport {
  std::string mode;
  std::vector<CheckResult> results;

  bool passed() const;
  const CheckResult* find(std::string_view name) const;
  std::string to_text() const;
};

struct CheckOptions {
  std::uint64_t seed = 1;
  /// Test hook: perturbs every analytic gradient by a relative 1e-3.
  bool corrupt_gradients = false;
};

struct RandomInstanceSpec {
  std::size_t n_free = 3;
  std::size_t n_obs = 2;
  std::size_t potentials = 6;
  int exponent = 2;
};

/// Potentials shaped like ground rules: 1-3 body and 1-2 head literals over
/// random x/y atoms with random negation, weights in [0.1, 2].
HlmrfInstance random_rule_instance(std::mt19937_64& rng, const RandomInstanceSpec& spec);

CheckReport check_gradients(const CheckOptions& options);
CheckReport check_oracle(const CheckOptions& options);
CheckReport check_convexity(const CheckOptions& options);
CheckReport check_surrogate(const CheckOptions& options);

std::vector<std::string> check_modes();

/// Dispatches on one of check_modes(); throws InputError otherwise.
CheckReport run_check(std::string_view mode, const CheckOptions& options);

}  // namespace deeppsl
