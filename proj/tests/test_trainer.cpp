// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "deeppsl/error.hpp"
#include "deeppsl/parallel.hpp"
#include "deeppsl/trainer.hpp"
#include "deeppsl/zsl.hpp"
#include "doctest.h"

using namespace deeppsl;

namespace {

AttributeMatrix two_class_matrix() {
  AttributeMatrix m;
  m.classes = {"c0", "c1"};
  m.attributes = {"a0", "a1", "a2", "a3"};
  m.values = {1, 0, 1, 0,  //
              0, 1, 0, 1};
  return m;
}

MlpParams identity_network(std::size_t n) {
  DenseLayer l;
  l.rows = l.cols = n;
  l.weights.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) l.w(i, i) = 1.0;
  l.bias.assign(n, 0.0);
  return MlpParams{{l}};
}

// Noisy copies of each class signature as features.
std::vector<LabeledSample> signature_samples(const AttributeMatrix& m, std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<LabeledSample> out;
  for (std::size_t c = 0; c < m.rows(); ++c) {
    for (std::size_t k = 0; k < per_class; ++k) {
      LabeledSample s;
      s.label = c;
      for (std::size_t i = 0; i < m.cols(); ++i) s.features.push_back(m.at(c, i) + noise(rng));
      out.push_back(std::move(s));
    }
  }
  return out;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 3;
  cfg.seed = 5;
  cfg.adam.lr = 1e-2;
  return cfg;
}

}  // namespace

TEST_CASE("hinge rank loss: worked examples") {
  const double m = 0.3;
  std::vector<double> clear{0.9, 0.2, 0.1};
  CHECK(hinge_rank_loss(clear, 0, m) == 0.0);
  CHECK(hinge_rank_grad(clear, 0, m) == std::vector<double>{0.0, 0.0, 0.0});

  std::vector<double> close{0.6, 0.45, 0.2};
  CHECK(hinge_rank_loss(close, 0, m) == doctest::Approx(0.15));
  CHECK(hinge_rank_grad(close, 0, m) == std::vector<double>{-1.0, 1.0, 0.0});

  std::vector<double> flat{0.5, 0.5, 0.5};
  CHECK(hinge_rank_loss(flat, 0, m) == doctest::Approx(0.6));
  CHECK(hinge_rank_grad(flat, 0, m) == std::vector<double>{-2.0, 1.0, 1.0});

  std::vector<double> wrong{0.2, 0.9, 0.4};
  CHECK(hinge_rank_loss(wrong, 0, m) == doctest::Approx(1.0 + 0.5));
  CHECK_THROWS_AS(hinge_rank_loss(wrong, 3, m), InputError);
}

TEST_CASE("hinge rank gradient matches central differences away from kinks") {
  std::vector<double> y{0.31, 0.52, 0.17, 0.44};
  for (std::size_t label = 0; label < y.size(); ++label) {
    auto g = hinge_rank_grad(y, label, 0.3);
    for (std::size_t i = 0; i < y.size(); ++i) {
      auto up = y;
      auto down = y;
      up[i] += 1e-7;
      down[i] -= 1e-7;
      double fd = (hinge_rank_loss(up, label, 0.3) - hinge_rank_loss(down, label, 0.3)) / 2e-7;
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("argmax ties resolve to the lowest index") {
  CHECK(argmax_lowest(std::vector<double>{0.2, 0.9, 0.9}) == 1);
  CHECK(argmax_lowest(std::vector<double>{0.5, 0.5}) == 0);
  CHECK(argmax_lowest(std::vector<double>{0.1, 0.2, 0.3}) == 2);
}

TEST_CASE("epoch order is a seeded permutation") {
  auto a = epoch_order(20, 3, 0);
  auto b = epoch_order(20, 3, 0);
  auto c = epoch_order(20, 3, 1);
  CHECK(a == b);
  CHECK(a != c);
  std::sort(a.begin(), a.end());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == i);
}

TEST_CASE("surrogate: zero loss gradient gives zero") {
  auto tmpl = make_template(two_class_matrix(), std::vector<std::string>{"c0", "c1"}, WeightMode::Continuous);
  std::vector<double> x{0.3, 0.7, 0.1, 0.9};
  std::vector<double> y{0.4, 0.6};
  std::vector<double> zero(2, 0.0);
  CHECK(surrogate_loss(tmpl.instance, x, y, zero, 1e-4, {}) == 0.0);
  for (double v : surrogate_grad_x(tmpl.instance, x, y, zero, 1e-4)) CHECK(v == 0.0);
}

TEST_CASE("surrogate: a small step against its gradient lowers it") {
  const auto matrix = two_class_matrix();
  const std::vector<std::string> classes{"c0", "c1"};
  auto tmpl = make_template(matrix, classes, WeightMode::Continuous);
  auto params = init_attribute_network(4, 6, 4, 3);
  auto samples = signature_samples(matrix, 3, 1);
  SolverConfig solver;
  std::vector<SampleTarget> targets;
  for (const auto& s : samples) targets.push_back(infer_target(params, tmpl, s, 0.3, solver));
  const double alpha = 1e-2;
  auto base = batch_surrogate_gradient(params, tmpl, samples, targets, alpha, solver);
  double norm2 = 0.0;
  base.gradient.for_each([&](double v) { norm2 += v * v; });
  REQUIRE(norm2 > 0.0);

  bool decreased = false;
  for (double eta = 1.0; eta > 1e-8 && !decreased; eta /= 4) {
    auto moved = params;
    accumulate(moved, base.gradient, -eta);
    decreased = batch_surrogate_gradient(moved, tmpl, samples, targets, alpha, solver).surrogate < base.surrogate;
  }
  CHECK(decreased);
}

TEST_CASE("batch gradient is additive over samples") {
  const auto matrix = two_class_matrix();
  auto tmpl = make_template(matrix, std::vector<std::string>{"c0", "c1"}, WeightMode::Continuous);
  auto params = init_attribute_network(4, 5, 4, 7);
  auto samples = signature_samples(matrix, 4, 2);
  SolverConfig solver;
  std::vector<SampleTarget> targets;
  for (const auto& s : samples) targets.push_back(infer_target(params, tmpl, s, 0.3, solver));

  std::span<const LabeledSample> all(samples);
  std::span<const SampleTarget> tall(targets);
  auto full = batch_surrogate_gradient(params, tmpl, all, tall, 1e-4, solver);
  auto left = batch_surrogate_gradient(params, tmpl, all.first(3), tall.first(3), 1e-4, solver);
  auto right = batch_surrogate_gradient(params, tmpl, all.subspan(3), tall.subspan(3), 1e-4, solver);
  accumulate(left.gradient, right.gradient);
  CHECK(parameter_distance(full.gradient, left.gradient) < 1e-15);
  CHECK(full.surrogate == doctest::Approx(left.surrogate + right.surrogate).epsilon(1e-12));
}

TEST_CASE("train: zero epochs return the initial parameters") {
  const auto matrix = two_class_matrix();
  auto tmpl = make_template(matrix, std::vector<std::string>{"c0", "c1"}, WeightMode::Continuous);
  auto params = init_attribute_network(4, 5, 4, 7);
  auto cfg = small_config();
  cfg.epochs = 0;
  auto result = train(params, tmpl, signature_samples(matrix, 4, 2), cfg);
  CHECK(parameter_distance(result.params, params) == 0.0);
  CHECK(result.history.batches.empty());
}

TEST_CASE("train: lowers the rank loss and records every batch") {
  const auto matrix = two_class_matrix();
  auto tmpl = make_template(matrix, std::vector<std::string>{"c0", "c1"}, WeightMode::Continuous);
  auto samples = signature_samples(matrix, 8, 4);
  auto cfg = small_config();
  cfg.epochs = 5;
  std::size_t seen = 0;
  auto result = train(init_attribute_network(4, 8, 4, 1), tmpl, samples, cfg, [&](const BatchRecord&) { ++seen; });
  CHECK(seen == result.history.batches.size());
  CHECK(result.history.batches.size() == result.history.epoch_mean_l1.size() * 4);
  CHECK(result.history.batches.back().delta.has_value());
  CHECK(result.history.epoch_mean_l1.back() < result.history.epoch_mean_l1.front());
}

TEST_CASE("train: result does not depend on the thread count") {
  const auto matrix = two_class_matrix();
  auto tmpl = make_template(matrix, std::vector<std::string>{"c0", "c1"}, WeightMode::Continuous);
  auto samples = signature_samples(matrix, 6, 9);
  auto init = init_attribute_network(4, 6, 4, 2);
  const unsigned saved = thread_count();
  set_thread_count(1);
  auto one = train(init, tmpl, samples, small_config());
  set_thread_count(4);
  auto four = train(init, tmpl, samples, small_config());
  set_thread_count(saved);
  CHECK(parameter_distance(one.params, four.params) == 0.0);
  CHECK(one.history.epoch_mean_l1 == four.history.epoch_mean_l1);
}

TEST_CASE("train: early stop when the update is below delta_epsilon") {
  const auto matrix = two_class_matrix();
  auto tmpl = make_template(matrix, std::vector<std::string>{"c0", "c1"}, WeightMode::Continuous);
  auto cfg = small_config();
  cfg.delta_epsilon = 1e6;
  auto result = train(init_attribute_network(4, 4, 4, 1), tmpl, signature_samples(matrix, 2, 1), cfg);
  CHECK(result.history.stopped_early);
  CHECK(result.history.epoch_delta.size() == 1);
}

TEST_CASE("train: rejects mismatched shapes and bad settings") {
  const auto matrix = two_class_matrix();
  auto tmpl = make_template(matrix, std::vector<std::string>{"c0", "c1"}, WeightMode::Continuous);
  auto samples = signature_samples(matrix, 2, 1);
  CHECK_THROWS_AS(train(init_attribute_network(4, 4, 3, 1), tmpl, samples, small_config()), InputError);
  samples[0].label = 5;
  CHECK_THROWS_AS(train(init_attribute_network(4, 4, 4, 1), tmpl, samples, small_config()), InputError);
  auto cfg = small_config();
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("predict: identity network picks the matching signature") {
  const auto matrix = two_class_matrix();
  auto tmpl = make_template(matrix, std::vector<std::string>{"c0", "c1"}, WeightMode::Continuous);
  auto net = identity_network(4);
  auto p0 = predict(net, tmpl, std::vector<double>{1, 0, 1, 0}, {});
  auto p1 = predict(net, tmpl, std::vector<double>{0, 1, 0, 1}, {});
  CHECK(p0.label == 0);
  CHECK(p1.label == 1);
  CHECK(p1.scores[1] > p1.scores[0]);
}

TEST_CASE("predict: a one-class program always answers that class") {
  auto matrix = two_class_matrix();
  auto tmpl = make_template(matrix, std::vector<std::string>{"c1"}, WeightMode::Continuous);
  CHECK(tmpl.class_count() == 1);
  auto net = identity_network(4);
  CHECK(predict(net, tmpl, std::vector<double>{1, 0, 1, 0}, {}).label == 0);
  CHECK(predict(net, tmpl, std::vector<double>{0, 1, 0, 1}, {}).label == 0);
}
