// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include "deeppsl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "deeppsl/error.hpp"
#include "deeppsl/parallel.hpp"

namespace deeppsl {

std::vector<double> InferenceTemplate::observe(std::span<const double> attributes) const {
  if (attributes.size() != attribute_x.size()) {
    throw InputError("template expects " + std::to_string(attribute_x.size()) + " attributes, got " +
                     std::to_string(attributes.size()));
  }
  std::vector<double> x(instance.n_obs(), 0.0);
  for (std::size_t i = 0; i < attributes.size(); ++i) x[attribute_x[i]] = attributes[i];
  return x;
}

std::vector<double> InferenceTemplate::class_scores(std::span<const double> y) const {
  std::vector<double> out(class_y.size());
  for (std::size_t k = 0; k < class_y.size(); ++k) out[k] = y[class_y[k]];
  return out;
}

std::vector<double> InferenceTemplate::scatter_class_gradient(std::span<const double> class_grad) const {
  std::vector<double> g(instance.n_free(), 0.0);
  for (std::size_t k = 0; k < class_y.size(); ++k) g[class_y[k]] = class_grad[k];
  return g;
}

std::vector<double> InferenceTemplate::gather_attribute_gradient(std::span<const double> x_grad) const {
  std::vector<double> g(attribute_x.size());
  for (std::size_t i = 0; i < attribute_x.size(); ++i) g[i] = x_grad[attribute_x[i]];
  return g;
}

void TrainConfig::validate() const {
  if (!(alpha > 0.0)) throw InputError("alpha must be positive");
  if (inner_steps < 1) throw InputError("inner_steps must be at least 1");
  if (!(margin > 0.0)) throw InputError("margin must be positive");
  if (batch_size == 0) throw InputError("batch_size must be positive");
  if (epochs < 0) throw InputError("epochs must be non-negative");
  if (!(delta_epsilon > 0.0)) throw InputError("delta_epsilon must be positive");
  if (!(adam.lr > 0.0) || !(adam.eps > 0.0)) throw InputError("adam lr and eps must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw InputError("adam betas must lie in [0, 1)");
  }
  if (!(train_nu >= 0.0)) throw InputError("nu must be non-negative");
  solver.validate();
}

double hinge_rank_loss(std::span<const double> y, std::size_t label, double margin) {
  if (label >= y.size()) throw InputError("label out of range");
  double loss = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (j == label) continue;
    loss += std::max(margin - y[label] + y[j], 0.0);
  }
  return loss;
}

std::vector<double> hinge_rank_grad(std::span<const double> y, std::size_t label, double margin) {
  if (label >= y.size()) throw InputError("label out of range");
  std::vector<double> g(y.size(), 0.0);
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (j == label) continue;
    if (margin - y[label] + y[j] > 0.0) {
      g[j] += 1.0;
      g[label] -= 1.0;
    }
  }
  return g;
}

namespace {

std::vector<double> scaled_shift(std::span<const double> grad_loss, double alpha) {
  std::vector<double> shift(grad_loss.size());
  for (std::size_t i = 0; i < shift.size(); ++i) shift[i] = -alpha * grad_loss[i];
  return shift;
}

}  // namespace

double surrogate_loss(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y_t,
                      std::span<const double> grad_loss, double alpha, const SolverConfig& config) {
  auto shift = scaled_shift(grad_loss, alpha);
  return soft_energy_shift(instance, x, y_t, shift, config);
}

std::vector<double> surrogate_grad_x(const HlmrfInstance& instance, std::span<const double> x,
                                     std::span<const double> y_t, std::span<const double> grad_loss, double alpha) {
  auto shift = scaled_shift(grad_loss, alpha);
  return soft_energy_shift_grad_x(instance, x, y_t, shift);
}

SampleTarget infer_target(const MlpParams& params, const InferenceTemplate& tmpl, const LabeledSample& sample,
                          double margin, const SolverConfig& solver) {
  auto attributes = forward(params, sample.features);
  auto x = tmpl.observe(attributes);
  auto result = map_infer(tmpl.instance, x, solver);
  auto scores = tmpl.class_scores(result.y);
  SampleTarget target;
  target.l1 = hinge_rank_loss(scores, sample.label, margin);
  target.grad_loss = tmpl.scatter_class_gradient(hinge_rank_grad(scores, sample.label, margin));
  target.y = std::move(result.y);
  target.iterations = result.iterations;
  return target;
}

BatchGradient batch_surrogate_gradient(const MlpParams& params, const InferenceTemplate& tmpl,
                                       std::span<const LabeledSample> samples, std::span<const SampleTarget> targets,
                                       double alpha, const SolverConfig& solver) {
  if (samples.size() != targets.size()) throw InputError("one target per sample is required");
  std::vector<MlpParams> grads(samples.size());
  std::vector<double> losses(samples.size(), 0.0);
  parallel_for(samples.size(), [&](std::size_t s) {
    ForwardCache cache;
    auto attributes = forward(params, samples[s].features, &cache);
    auto x = tmpl.observe(attributes);
    const auto& t = targets[s];
    losses[s] = surrogate_loss(tmpl.instance, x, t.y, t.grad_loss, alpha, solver);
    auto gx = surrogate_grad_x(tmpl.instance, x, t.y, t.grad_loss, alpha);
    grads[s] = backward(params, cache, tmpl.gather_attribute_gradient(gx));
  });

  BatchGradient out;
  out.gradient = params.zeros_like();
  for (std::size_t s = 0; s < samples.size(); ++s) {
    accumulate(out.gradient, grads[s]);
    out.surrogate += losses[s];
  }
  if (!std::isfinite(out.surrogate)) throw NumericError("surrogate loss became non-finite");
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

TrainResult train(MlpParams params, const InferenceTemplate& tmpl, std::span<const LabeledSample> samples,
                  const TrainConfig& config, const BatchCallback& on_batch) {
  config.validate();
  params.validate();
  if (params.output_dim() != tmpl.attribute_count()) {
    throw InputError("network produces " + std::to_string(params.output_dim()) + " attributes, program uses " +
                     std::to_string(tmpl.attribute_count()));
  }
  for (const auto& s : samples) {
    if (s.label >= tmpl.class_count()) throw InputError("sample label outside the training classes");
  }

  TrainResult result;
  AdamState adam(params, config.adam);
  std::vector<std::optional<std::vector<double>>> anchors(samples.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const MlpParams epoch_start = params;
    const auto order = epoch_order(samples.size(), config.seed, epoch);
    double epoch_l1 = 0.0;

    for (std::size_t begin = 0, batch = 0; begin < order.size(); begin += config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<LabeledSample> batch_samples;
      for (std::size_t k = begin; k < end; ++k) batch_samples.push_back(samples[order[k]]);

      std::vector<SampleTarget> targets(batch_samples.size());
      parallel_for(batch_samples.size(), [&](std::size_t s) {
        SolverConfig solver = config.solver;
        const auto& anchor = anchors[order[begin + s]];
        if (anchor && config.train_nu > 0.0) {
          solver.proximal_nu = config.train_nu;
          solver.anchor = *anchor;
        } else {
          solver.proximal_nu = 0.0;
        }
        targets[s] = infer_target(params, tmpl, batch_samples[s], config.margin, solver);
      });

      BatchRecord record;
      record.epoch = epoch;
      record.batch = batch;
      for (std::size_t s = 0; s < targets.size(); ++s) {
        anchors[order[begin + s]] = targets[s].y;
        record.mean_l1 += targets[s].l1;
        record.mean_iterations += targets[s].iterations;
      }
      epoch_l1 += record.mean_l1;
      record.mean_l1 /= static_cast<double>(targets.size());
      record.mean_iterations /= static_cast<double>(targets.size());
      if (!std::isfinite(record.mean_l1)) throw NumericError("rank loss became non-finite");

      // The anchor term of f~ does not depend on w, so the surrogate is
      // evaluated without it.
      SolverConfig surrogate_solver = config.solver;
      surrogate_solver.proximal_nu = 0.0;
      for (int step = 0; step < config.inner_steps; ++step) {
        auto grad = batch_surrogate_gradient(params, tmpl, batch_samples, targets, config.alpha, surrogate_solver);
        adam_step(params, adam, grad.gradient);
      }

      if (end == order.size()) record.delta = parameter_distance(params, epoch_start);
      result.history.batches.push_back(record);
      if (on_batch) on_batch(record);
    }

    const double delta = parameter_distance(params, epoch_start);
    if (!std::isfinite(delta)) throw NumericError("network weights diverged");
    result.history.epoch_mean_l1.push_back(samples.empty() ? 0.0 : epoch_l1 / static_cast<double>(samples.size()));
    result.history.epoch_delta.push_back(delta);
    if (delta <= config.delta_epsilon) {
      result.history.stopped_early = true;
      break;
    }
  }
  result.params = std::move(params);
  return result;
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Prediction predict(const MlpParams& params, const InferenceTemplate& tmpl, std::span<const double> features,
                   const SolverConfig& solver) {
  auto attributes = forward(params, features);
  auto result = map_infer(tmpl.instance, tmpl.observe(attributes), solver);
  Prediction p;
  p.scores = tmpl.class_scores(result.y);
  p.label = argmax_lowest(p.scores);
  return p;
}

}  // namespace deeppsl
