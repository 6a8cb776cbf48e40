// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deeppsl/hlmrf.hpp"
#include "deeppsl/trainer.hpp"
#include "deeppsl/zsl.hpp"

namespace deeppsl {

/// Flat `key = value` run configuration with the default training
/// hyper-parameters.
struct RunConfig {
  std::size_t batch_size = 32;
  int epochs = 10;
  double inference_lr = 5e-3;
  double inference_threshold = 1e-6;
  int inference_max_iters = 5000;
  double alpha = 1e-4;
  double adam_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  int inner_steps = 1;
  double margin = 0.3;
  double gamma = 100.0;
  double nu = 1e-3;
  std::uint64_t seed = 0;
  std::size_t hidden_units = 512;
  double delta_epsilon = 1e-6;
  WeightMode rule_weights = WeightMode::Continuous;

  /// Throws InputError on unknown keys or malformed values.
  void set(std::string_view key, std::string_view value);

  /// Applies `key = value` lines; `#` starts a comment.
  void apply(std::string_view text);

  std::string to_text() const;
  static std::vector<std::string> keys();

  TrainConfig train_config() const;
  /// Inference settings for evaluation: no proximal term.
  SolverConfig eval_solver() const;
};

}  // namespace deeppsl
