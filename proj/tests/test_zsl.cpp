// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "deeppsl/config.hpp"
#include "deeppsl/error.hpp"
#include "deeppsl/zsl.hpp"
#include "doctest.h"

using namespace deeppsl;

namespace {

std::vector<double> signature(const AttributeMatrix& m, std::size_t c) {
  return {m.values.begin() + static_cast<std::ptrdiff_t>(c * m.cols()),
          m.values.begin() + static_cast<std::ptrdiff_t>((c + 1) * m.cols())};
}

// Least squares E s = u through the normal equations.
std::vector<double> solve_embedding(const std::vector<double>& e, std::size_t d, std::size_t a,
                                    const std::vector<double>& u) {
  std::vector<double> m(a * (a + 1), 0.0);
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < a; ++j) {
      for (std::size_t r = 0; r < d; ++r) m[i * (a + 1) + j] += e[r * a + i] * e[r * a + j];
    }
    for (std::size_t r = 0; r < d; ++r) m[i * (a + 1) + a] += e[r * a + i] * u[r];
  }
  for (std::size_t col = 0; col < a; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < a; ++r) {
      if (std::abs(m[r * (a + 1) + col]) > std::abs(m[pivot * (a + 1) + col])) pivot = r;
    }
    for (std::size_t k = 0; k <= a; ++k) std::swap(m[col * (a + 1) + k], m[pivot * (a + 1) + k]);
    for (std::size_t r = 0; r < a; ++r) {
      if (r == col) continue;
      double f = m[r * (a + 1) + col] / m[col * (a + 1) + col];
      for (std::size_t k = col; k <= a; ++k) m[r * (a + 1) + k] -= f * m[col * (a + 1) + k];
    }
  }
  std::vector<double> s(a);
  for (std::size_t i = 0; i < a; ++i) s[i] = m[i * (a + 1) + a] / m[i * (a + 1) + i];
  return s;
}

}  // namespace

TEST_CASE("build_rules: binarized 2x2 keeps only above-mean entries") {
  AttributeMatrix m{{"zebra", "whale"}, {"stripes", "swims"}, {0.9, 0.1, 0.2, 0.8}};
  auto z = build_rules(m, m.classes, WeightMode::Binarized);
  CHECK(z.program.rules.size() == 4);
  for (const auto& r : z.program.rules) CHECK(r.weight == 1.0);
  CHECK(z.warnings.empty());
  auto tmpl = make_template(z, m.cols());
  CHECK(tmpl.instance.potentials().size() == 4);
  CHECK(tmpl.class_count() == 2);
}

TEST_CASE("build_rules: continuous weights give 2 a z rules") {
  AttributeMatrix m{{"zebra", "whale"}, {"a0", "a1", "a2"}, {0.9, 0.0, 0.4, 0.1, 0.7, 0.6}};
  auto z = build_rules(m, m.classes, WeightMode::Continuous);
  CHECK(z.program.rules.size() == 12);
  CHECK(z.program.rules[0].weight == doctest::Approx(0.9));
  auto tmpl = make_template(z, m.cols());
  CHECK(tmpl.instance.potentials().size() == 10);  // the zero-weight pair is dropped
  CHECK(ground(z.program, z.domain).rules.size() == 12);
}

TEST_CASE("build_rules: warnings and errors") {
  AttributeMatrix zero{{"a", "b"}, {"x", "y"}, {0, 0, 0, 0}};
  auto z = build_rules(zero, zero.classes, WeightMode::Continuous);
  CHECK(z.warnings.size() == 2);
  auto empty = build_rules(zero, zero.classes, WeightMode::Binarized);
  CHECK(std::find(empty.warnings.begin(), empty.warnings.end(), "rule program is empty") != empty.warnings.end());
  std::vector<std::string> unknown{"nope"};
  CHECK_THROWS_AS(build_rules(zero, unknown, WeightMode::Continuous), InputError);
  std::vector<std::string> dup{"a", "a"};
  CHECK_THROWS_AS(build_rules(zero, dup, WeightMode::Continuous), InputError);
}

TEST_CASE("evaluate: class average differs from overall accuracy") {
  std::vector<std::string> names{"c0", "c1"};
  std::vector<std::size_t> labels{0, 0, 0, 1};
  std::vector<std::size_t> predicted{0, 0, 0, 0};
  auto r = evaluate(predicted, labels, names);
  CHECK(r.overall == doctest::Approx(0.75));
  CHECK(r.class_average == doctest::Approx(0.5));
  CHECK(r.confusion[1][0] == 1);
  CHECK(r.to_json().find("\"class_averaged_top1\"") != std::string::npos);
}

TEST_CASE("evaluate: duplicating every sample changes nothing") {
  std::vector<std::string> names{"a", "b", "c"};
  std::vector<std::size_t> labels{0, 1, 1, 2, 2, 2};
  std::vector<std::size_t> predicted{0, 1, 0, 2, 1, 2};
  auto once = evaluate(predicted, labels, names);
  auto l2 = labels;
  auto p2 = predicted;
  l2.insert(l2.end(), labels.begin(), labels.end());
  p2.insert(p2.end(), predicted.begin(), predicted.end());
  auto twice = evaluate(p2, l2, names);
  CHECK(twice.class_average == doctest::Approx(once.class_average));
  CHECK(once.class_average == doctest::Approx((1.0 + 0.5 + 2.0 / 3.0) / 3.0));
}

TEST_CASE("evaluate: classes without samples are excluded") {
  std::vector<std::string> names{"a", "b", "c"};
  std::vector<std::size_t> labels{0, 2};
  std::vector<std::size_t> predicted{0, 1};
  auto r = evaluate(predicted, labels, names);
  CHECK(r.excluded == std::vector<std::string>{"b"});
  CHECK(std::isnan(r.per_class_accuracy[1]));
  CHECK(r.class_average == doctest::Approx(0.5));
  CHECK_THROWS_AS(evaluate(std::vector<std::size_t>{}, std::vector<std::size_t>{}, names), InputError);
}

TEST_CASE("synthesize: deterministic per seed") {
  SynthConfig cfg;
  auto a = synthesize(cfg);
  auto b = synthesize(cfg);
  CHECK(a.data.features == b.data.features);
  CHECK(a.data.matrix.values == b.data.matrix.values);
  cfg.seed = 8;
  CHECK(synthesize(cfg).data.features != a.data.features);
}

TEST_CASE("synthesize: signature structure and split") {
  SynthConfig cfg;
  auto s = synthesize(cfg);
  const auto& m = s.data.matrix;
  CHECK(m.rows() == cfg.train_classes + cfg.test_classes);
  CHECK(m.cols() == cfg.attributes);
  CHECK(s.data.features.size() == m.rows() * cfg.samples_per_class);
  CHECK(s.data.feature_dim() == cfg.feature_dim);
  s.data.validate();

  std::set<std::string> train(s.data.split.train.begin(), s.data.split.train.end());
  for (const auto& c : s.data.split.test) CHECK(train.count(c) == 0);

  for (std::size_t c = 0; c < m.rows(); ++c) {
    auto sc = signature(m, c);
    CHECK(std::count(sc.begin(), sc.end(), 1.0) == static_cast<long>(cfg.attributes / 2));
    for (std::size_t k = c + 1; k < m.rows(); ++k) {
      auto sk = signature(m, k);
      std::size_t d = 0;
      for (std::size_t i = 0; i < sc.size(); ++i) d += sc[i] != sk[i];
      CHECK(d >= cfg.min_hamming);
    }
  }

  // Every unseen signature is s_i + s_j - s_k over seen ones.
  const std::size_t seen = cfg.train_classes;
  for (std::size_t t = seen; t < m.rows(); ++t) {
    auto target = signature(m, t);
    bool found = false;
    for (std::size_t i = 0; i < seen && !found; ++i) {
      for (std::size_t j = i + 1; j < seen && !found; ++j) {
        for (std::size_t k = 0; k < seen && !found; ++k) {
          bool match = true;
          for (std::size_t x = 0; x < m.cols() && match; ++x) {
            match = m.at(i, x) + m.at(j, x) - m.at(k, x) == target[x];
          }
          found = match;
        }
      }
    }
    CHECK(found);
  }
}

TEST_CASE("synthesize: noiseless features decode back to their signatures") {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  auto s = synthesize(cfg);
  const auto& m = s.data.matrix;
  std::size_t correct = 0;
  double worst = 0.0;
  for (std::size_t row = 0; row < s.data.features.size(); ++row) {
    auto decoded = solve_embedding(s.embedding, cfg.feature_dim, cfg.attributes, s.data.features[row]);
    std::size_t best = 0;
    double best_dist = INFINITY;
    for (std::size_t c = 0; c < m.rows(); ++c) {
      double dist = 0.0;
      for (std::size_t i = 0; i < m.cols(); ++i) dist += (decoded[i] - m.at(c, i)) * (decoded[i] - m.at(c, i));
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    worst = std::max(worst, best_dist);
    correct += m.classes[best] == s.data.labels[row];
  }
  CHECK(worst < 1e-18);
  CHECK(correct == s.data.features.size());
}

TEST_CASE("synthesize: rejects impossible requests") {
  SynthConfig cfg;
  cfg.attributes = 4;
  cfg.min_hamming = 4;
  cfg.train_classes = 5;
  CHECK_THROWS_AS(synthesize(cfg), InputError);
  SynthConfig none;
  none.test_classes = 0;
  CHECK_THROWS_AS(synthesize(none), InputError);
}

TEST_CASE("dataset: select and validate") {
  auto s = synthesize({});
  auto train = s.data.select(s.data.split.train);
  CHECK(train.size() == s.config.train_classes * s.config.samples_per_class);
  for (const auto& sample : train) CHECK(sample.label < s.config.train_classes);
  auto broken = s.data;
  broken.labels.pop_back();
  CHECK_THROWS_AS(broken.validate(), InputError);
  broken = s.data;
  broken.labels[0] = "nobody";
  CHECK_THROWS_AS(broken.validate(), InputError);
  SplitSpec overlap{{"a"}, {"a"}};
  CHECK_THROWS_AS(overlap.validate(), InputError);
}

TEST_CASE("untrained networks score near chance on unseen classes") {
  auto s = synthesize({});
  const auto& test = s.data.split.test;
  auto tmpl = make_template(s.data.matrix, test, WeightMode::Continuous);
  auto samples = s.data.select(test);
  RunConfig run;
  double sum = 0.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    auto net = init_attribute_network(s.data.feature_dim(), 64, s.data.matrix.cols(), static_cast<std::uint64_t>(seed));
    sum += evaluate_model(net, tmpl, test, samples, run.eval_solver()).class_average;
  }
  const double chance = 1.0 / static_cast<double>(test.size());
  CHECK(std::abs(sum / seeds - chance) <= 0.1);
}

TEST_CASE("two-stage baseline transfers on noiseless data") {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  auto s = synthesize(cfg);
  RunConfig run;
  run.hidden_units = 64;
  auto net = init_attribute_network(s.data.feature_dim(), run.hidden_units, s.data.matrix.cols(), run.seed);
  auto trained = train_attribute_classifier(net, s.data.matrix, s.data.split.train,
                                            s.data.select(s.data.split.train), run.train_config());
  CHECK(trained.history.epoch_mean_l1.back() < trained.history.epoch_mean_l1.front());
  const auto& test = s.data.split.test;
  auto tmpl = make_template(s.data.matrix, test, WeightMode::Continuous);
  auto report = evaluate_model(trained.params, tmpl, test, s.data.select(test), run.eval_solver());
  CHECK(report.class_average >= 0.9);
}
