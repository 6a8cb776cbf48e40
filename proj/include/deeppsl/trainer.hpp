// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

// Joint training of the attribute network through MAP inference.
//
// Each outer iteration infers y_t for every sample of a batch, takes the
// hinge rank loss gradient g at y_t, and then descends the surrogate
//
//   L2(w) = f~(x(w), y_t - alpha g) - f~(x(w), y_t)
//
// with y_t held constant. Only the observed arguments x = p(u; w) of the
// energy carry gradient, so no differentiation through the argmin is needed.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "deeppsl/hlmrf.hpp"
#include "deeppsl/mlp.hpp"

namespace deeppsl {

/// A grounded program shared by every sample: network output i feeds
/// x[attribute_x[i]], and class k reads its score from y[class_y[k]].
struct InferenceTemplate {
  HlmrfInstance instance;
  std::vector<std::size_t> attribute_x;
  std::vector<std::size_t> class_y;

  std::size_t attribute_count() const { return attribute_x.size(); }
  std::size_t class_count() const { return class_y.size(); }

  std::vector<double> observe(std::span<const double> attributes) const;
  std::vector<double> class_scores(std::span<const double> y) const;
  std::vector<double> scatter_class_gradient(std::span<const double> class_grad) const;
  std::vector<double> gather_attribute_gradient(std::span<const double> x_grad) const;
};

struct TrainConfig {
  double alpha = 1e-4;
  int inner_steps = 1;
  double margin = 0.3;
  std::size_t batch_size = 32;
  int epochs = 10;
  double delta_epsilon = 1e-6;
  AdamConfig adam;
  SolverConfig solver;   // inference settings during training
  double train_nu = 1e-3;  // proximal weight, anchored at each sample's previous solution
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabeledSample {
  std::vector<double> features;
  std::size_t label = 0;  // index into the template's classes
};

double hinge_rank_loss(std::span<const double> y, std::size_t label, double margin);
std::vector<double> hinge_rank_grad(std::span<const double> y, std::size_t label, double margin);

/// Surrogate L2 for one sample, evaluated term by term.
double surrogate_loss(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y_t,
                      std::span<const double> grad_loss, double alpha, const SolverConfig& config);

/// d L2 / d x.
std::vector<double> surrogate_grad_x(const HlmrfInstance& instance, std::span<const double> x,
                                     std::span<const double> y_t, std::span<const double> grad_loss, double alpha);

/// MAP solution and loss gradient of one sample, frozen for the inner steps.
struct SampleTarget {
  std::vector<double> y;          // full free-variable vector y_t
  std::vector<double> grad_loss;  // dL1/dy over the full free-variable vector
  double l1 = 0.0;
  int iterations = 0;
};

SampleTarget infer_target(const MlpParams& params, const InferenceTemplate& tmpl, const LabeledSample& sample,
                          double margin, const SolverConfig& solver);

struct BatchGradient {
  MlpParams gradient;   // d(sum of L2)/dw
  double surrogate = 0.0;  // sum of L2
};

/// Sum over the batch of the surrogate and its weight gradient.
BatchGradient batch_surrogate_gradient(const MlpParams& params, const InferenceTemplate& tmpl,
                                       std::span<const LabeledSample> samples, std::span<const SampleTarget> targets,
                                       double alpha, const SolverConfig& solver);

struct BatchRecord {
  int epoch = 0;
  std::size_t batch = 0;
  double mean_l1 = 0.0;
  double mean_iterations = 0.0;
  std::optional<double> delta;  // set on the last batch of an epoch
};

struct TrainHistory {
  std::vector<BatchRecord> batches;
  std::vector<double> epoch_mean_l1;
  std::vector<double> epoch_delta;
  bool stopped_early = false;
};

struct TrainResult {
  MlpParams params;
  TrainHistory history;
};

using BatchCallback = std::function<void(const BatchRecord&)>;

TrainResult train(MlpParams params, const InferenceTemplate& tmpl, std::span<const LabeledSample> samples,
                  const TrainConfig& config, const BatchCallback& on_batch = {});

/// Deterministic per-epoch sample order.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

/// Index of the largest entry, ties to the lowest index.
std::size_t argmax_lowest(std::span<const double> values);

struct Prediction {
  std::size_t label = 0;
  std::vector<double> scores;  // per class, clamped MAP values
};

Prediction predict(const MlpParams& params, const InferenceTemplate& tmpl, std::span<const double> features,
                   const SolverConfig& solver);

}  // namespace deeppsl
