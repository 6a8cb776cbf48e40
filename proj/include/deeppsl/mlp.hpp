// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

// Dense feed-forward attribute network with hand-written reverse mode and
// an Adam optimizer. Everything is double precision.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace deeppsl {

enum class Activation : std::uint8_t { Identity = 0, Elu = 1, Sigmoid = 2 };

struct DenseLayer {
  std::size_t rows = 0;  // outputs
  std::size_t cols = 0;  // inputs
  std::vector<double> weights;  // rows x cols, row-major
  std::vector<double> bias;     // rows
  Activation activation = Activation::Identity;

  double& w(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
  double w(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().cols; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().rows; }
  std::size_t parameter_count() const;

  /// Same shapes and activations, all entries zero.
  MlpParams zeros_like() const;

  /// Visits every weight and bias entry in a fixed order.
  template <typename Fn>
  void for_each(Fn&& fn) {
    for (auto& l : layers) {
      for (auto& v : l.weights) fn(v);
      for (auto& v : l.bias) fn(v);
    }
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& l : layers) {
      for (double v : l.weights) fn(v);
      for (double v : l.bias) fn(v);
    }
  }

  /// Throws InputError if adjacent layers do not chain or entries are non-finite.
  void validate() const;
};

double elu(double z);
double sigmoid(double z);

/// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
MlpParams init_mlp(std::span<const std::size_t> dims, std::span<const Activation> activations, std::uint64_t seed);

/// input -> ELU hidden -> sigmoid output.
MlpParams init_attribute_network(std::size_t input_dim, std::size_t hidden, std::size_t output_dim,
                                 std::uint64_t seed);

struct ForwardCache {
  std::vector<std::vector<double>> inputs;  // input to each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each layer
  std::vector<double> output;
};

std::vector<double> forward(const MlpParams& params, std::span<const double> u, ForwardCache* cache = nullptr);

/// Reverse-mode gradients of <grad_output, forward(u)> with respect to every
/// parameter.
MlpParams backward(const MlpParams& params, const ForwardCache& cache, std::span<const double> grad_output);

/// a += scale * b, shapes must match.
void accumulate(MlpParams& a, const MlpParams& b, double scale = 1.0);

/// Euclidean distance over all flattened parameters.
double parameter_distance(const MlpParams& a, const MlpParams& b);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  AdamConfig config;
  MlpParams m;
  MlpParams v;
  std::uint64_t t = 0;

  AdamState() = default;
  AdamState(const MlpParams& like, AdamConfig cfg) : config(cfg), m(like.zeros_like()), v(like.zeros_like()) {}
};

/// Bias-corrected Adam; weight decay is added to the gradient (L2 style).
void adam_step(MlpParams& params, AdamState& state, const MlpParams& gradients);

/// `DPW1` checkpoint: magic, u32 layer count, then per layer u32 rows,
/// u32 cols, f64 row-major weights, f64 biases, u8 activation tag.
void save_checkpoint(const MlpParams& params, const std::filesystem::path& path);
MlpParams load_checkpoint(const std::filesystem::path& path);

}  // namespace deeppsl
