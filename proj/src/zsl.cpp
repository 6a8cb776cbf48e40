// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include "deeppsl/zsl.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "deeppsl/error.hpp"
#include "deeppsl/parallel.hpp"
#include "json.hpp"

namespace deeppsl {

namespace {

constexpr const char* kImageSort = "image";
constexpr const char* kClassSort = "class";
constexpr const char* kImageConstant = "img";
constexpr const char* kLabelPredicate = "Label";

std::string attribute_predicate(std::size_t i) { return "A" + std::to_string(i + 1); }

void require_unique(const std::vector<std::string>& names, const std::string& what) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw InputError(what + " names must be non-empty");
    if (!seen.insert(n).second) throw InputError("duplicate " + what + " name `" + n + "`");
  }
}

}  // namespace

double AttributeMatrix::global_mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::optional<std::size_t> AttributeMatrix::class_index(const std::string& name) const {
  auto it = std::find(classes.begin(), classes.end(), name);
  if (it == classes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes.begin());
}

void AttributeMatrix::validate() const {
  if (values.size() != rows() * cols()) throw InputError("attribute matrix shape does not match its names");
  require_unique(classes, "class");
  require_unique(attributes, "attribute");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("attribute matrix entries must lie in [0, 1]");
  }
}

void SplitSpec::validate() const {
  if (train.empty() || test.empty()) throw InputError("split needs at least one train and one test class");
  require_unique(train, "train class");
  require_unique(test, "test class");
  for (const auto& c : train) {
    if (std::find(test.begin(), test.end(), c) != test.end()) {
      throw InputError("class `" + c + "` is in both the train and test split");
    }
  }
}

ZslProgram build_rules(const AttributeMatrix& matrix, std::span<const std::string> classes, WeightMode mode) {
  ZslProgram z;
  z.classes.assign(classes.begin(), classes.end());
  require_unique(z.classes, "class");
  std::vector<std::size_t> rows;
  for (const auto& c : classes) {
    auto r = matrix.class_index(c);
    if (!r) throw InputError("unknown class `" + c + "`");
    rows.push_back(*r);
  }

  auto& program = z.program;
  std::vector<std::size_t> attr_pred;
  for (std::size_t i = 0; i < matrix.cols(); ++i) {
    attr_pred.push_back(program.add_predicate(attribute_predicate(i), 1, PredicateKind::Observed));
    z.domain.signatures[attribute_predicate(i)] = {kImageSort};
  }
  const std::size_t label_pred = program.add_predicate(kLabelPredicate, 2, PredicateKind::Free);
  z.domain.signatures[kLabelPredicate] = {kImageSort, kClassSort};
  z.domain.sorts[kImageSort] = {kImageConstant};
  z.domain.sorts[kClassSort] = z.classes;

  const double threshold = matrix.global_mean();
  const Argument image{true, "I"};
  for (std::size_t k = 0; k < classes.size(); ++k) {
    std::size_t rules_for_class = 0;
    for (std::size_t i = 0; i < matrix.cols(); ++i) {
      double a = matrix.at(rows[k], i);
      double w = mode == WeightMode::Continuous ? a : (a > threshold ? 1.0 : 0.0);
      if (mode == WeightMode::Binarized && w == 0.0) continue;
      for (bool negated : {false, true}) {
        Rule r;
        r.weight = w;
        r.exponent = 2;
        r.body.push_back({attr_pred[i], {image}, negated});
        r.head.push_back({label_pred, {image, Argument{false, classes[k]}}, negated});
        program.rules.push_back(std::move(r));
      }
      if (w > 0.0) ++rules_for_class;
    }
    if (rules_for_class == 0) z.warnings.push_back("class `" + classes[k] + "` has no rule with positive weight");
  }
  if (program.rules.empty()) z.warnings.push_back("rule program is empty");
  return z;
}

InferenceTemplate make_template(const ZslProgram& zsl, std::size_t attribute_count) {
  auto grounding = ground(zsl.program, zsl.domain);
  InferenceTemplate tmpl{build_instance(zsl.program, grounding), {}, {}};
  for (std::size_t i = 0; i < attribute_count; ++i) {
    auto pred = zsl.program.find_predicate(attribute_predicate(i));
    if (!pred) throw InputError("program has no predicate for attribute " + std::to_string(i));
    auto x = grounding.observed.find({*pred, {kImageConstant}});
    if (!x) throw InputError("attribute atom missing from grounding");
    tmpl.attribute_x.push_back(*x);
  }
  auto label = *zsl.program.find_predicate(kLabelPredicate);
  for (const auto& c : zsl.classes) {
    auto y = grounding.free.find({label, {kImageConstant, c}});
    if (!y) throw InputError("label atom for `" + c + "` missing from grounding");
    tmpl.class_y.push_back(*y);
  }
  return tmpl;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["class_averaged_top1"] = class_average;
  j["overall_accuracy"] = overall;
  j["samples"] = samples;
  auto& per_class = j["per_class"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < classes.size(); ++k) {
    nlohmann::ordered_json row;
    row["class"] = classes[k];
    row["count"] = counts[k];
    row["correct"] = correct[k];
    if (std::isnan(per_class_accuracy[k])) {
      row["accuracy"] = nullptr;
    } else {
      row["accuracy"] = per_class_accuracy[k];
    }
    per_class.push_back(row);
  }
  j["excluded_classes"] = excluded;
  j["confusion"] = confusion;
  return j.dump(2);
}

EvalReport evaluate(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                    std::span<const std::string> class_names) {
  if (predictions.empty()) throw InputError("nothing to evaluate");
  if (predictions.size() != labels.size()) throw InputError("predictions and labels differ in length");
  const std::size_t z = class_names.size();
  EvalReport r;
  r.classes.assign(class_names.begin(), class_names.end());
  r.counts.assign(z, 0);
  r.correct.assign(z, 0);
  r.confusion.assign(z, std::vector<std::size_t>(z, 0));
  r.samples = labels.size();
  std::size_t total_correct = 0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    if (labels[s] >= z || predictions[s] >= z) throw InputError("label outside the class set");
    ++r.counts[labels[s]];
    ++r.confusion[labels[s]][predictions[s]];
    if (labels[s] == predictions[s]) {
      ++r.correct[labels[s]];
      ++total_correct;
    }
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < z; ++k) {
    if (r.counts[k] == 0) {
      r.per_class_accuracy.push_back(std::numeric_limits<double>::quiet_NaN());
      r.excluded.push_back(r.classes[k]);
      continue;
    }
    double acc = static_cast<double>(r.correct[k]) / static_cast<double>(r.counts[k]);
    r.per_class_accuracy.push_back(acc);
    sum += acc;
    ++present;
  }
  r.class_average = sum / static_cast<double>(present);
  r.overall = static_cast<double>(total_correct) / static_cast<double>(labels.size());
  return r;
}

std::vector<LabeledSample> ZslDataset::select(std::span<const std::string> classes) const {
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < classes.size(); ++k) index[classes[k]] = k;
  std::vector<LabeledSample> out;
  for (std::size_t r = 0; r < features.size(); ++r) {
    auto it = index.find(labels[r]);
    if (it != index.end()) out.push_back({features[r], it->second});
  }
  return out;
}

void ZslDataset::validate() const {
  if (features.size() != labels.size()) {
    throw InputError("feature matrix has " + std::to_string(features.size()) + " rows but there are " +
                     std::to_string(labels.size()) + " labels");
  }
  matrix.validate();
  split.validate();
  for (const auto& row : features) {
    if (row.size() != feature_dim()) throw InputError("feature rows differ in width");
    for (double v : row) {
      if (!std::isfinite(v)) throw InputError("feature matrix contains non-finite values");
    }
  }
  std::set<std::string> known(matrix.classes.begin(), matrix.classes.end());
  for (const auto& l : labels) {
    if (!known.count(l)) throw InputError("label `" + l + "` is not a class of the attribute matrix");
  }
  for (const auto* side : {&split.train, &split.test}) {
    for (const auto& c : *side) {
      if (!known.count(c)) throw InputError("split class `" + c + "` is not in the attribute matrix");
    }
  }
}

SyntheticDataset synthesize(const SynthConfig& config) {
  const std::size_t z = config.train_classes + config.test_classes;
  const std::size_t a = config.attributes;
  if (config.train_classes == 0 || config.test_classes == 0) throw InputError("need train and test classes");
  if (a < 2 || config.feature_dim == 0 || config.samples_per_class == 0) {
    throw InputError("synthetic dataset dimensions must be positive (attributes >= 2)");
  }
  if (!(config.noise_sigma >= 0.0)) throw InputError("noise sigma must be non-negative");

  std::mt19937_64 rng(config.seed);
  const std::size_t ones = a / 2;
  const std::size_t min_distance = std::max<std::size_t>(2, config.min_hamming);

  auto hamming = [](const std::vector<int>& p, const std::vector<int>& q) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < p.size(); ++i) d += p[i] != q[i];
    return d;
  };

  auto draw = [&] {
    std::vector<int> s(a, 0);
    std::fill(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(ones), 1);
    std::shuffle(s.begin(), s.end(), rng);
    return s;
  };
  auto separated = [&](const std::vector<int>& s, const std::vector<std::vector<int>>& set) {
    return std::all_of(set.begin(), set.end(), [&](const std::vector<int>& t) { return hamming(s, t) >= min_distance; });
  };

  std::vector<std::vector<int>> signatures;
  for (int restart = 0; restart < 256 && signatures.size() < z; ++restart) {
    signatures.clear();
    for (int attempt = 0; attempt < 20000 && signatures.size() < config.train_classes; ++attempt) {
      auto s = draw();
      if (separated(s, signatures)) signatures.push_back(std::move(s));
    }
    if (signatures.size() < config.train_classes) continue;

    if (!config.test_in_train_span) {
      for (int attempt = 0; attempt < 20000 && signatures.size() < z; ++attempt) {
        auto s = draw();
        if (separated(s, signatures)) signatures.push_back(std::move(s));
      }
      continue;
    }
    // Unseen signatures are analogies s_i + s_j - s_k of seen ones that stay binary.
    const std::size_t seen = signatures.size();
    std::vector<std::array<std::size_t, 3>> triples;
    for (std::size_t i = 0; i < seen; ++i) {
      for (std::size_t j = i + 1; j < seen; ++j) {
        for (std::size_t k = 0; k < seen; ++k) {
          if (k != i && k != j) triples.push_back({i, j, k});
        }
      }
    }
    std::shuffle(triples.begin(), triples.end(), rng);
    for (const auto& [i, j, k] : triples) {
      if (signatures.size() == z) break;
      std::vector<int> s(a);
      bool binary = true;
      for (std::size_t t = 0; t < a; ++t) {
        s[t] = signatures[i][t] + signatures[j][t] - signatures[k][t];
        binary = binary && (s[t] == 0 || s[t] == 1);
      }
      if (binary && separated(s, signatures)) signatures.push_back(std::move(s));
    }
  }
  if (signatures.size() < z) {
    throw InputError("cannot draw " + std::to_string(z) + " class signatures over " + std::to_string(a) +
                     " attributes with Hamming distance >= " + std::to_string(min_distance) +
                     (config.test_in_train_span ? " and unseen signatures inside the seen span" : ""));
  }

  SyntheticDataset out;
  out.config = config;
  auto& data = out.data;
  auto pad = [](std::size_t i) { return (i < 10 ? "0" : "") + std::to_string(i); };
  for (std::size_t c = 0; c < z; ++c) {
    data.matrix.classes.push_back("class_" + pad(c));
    (c < config.train_classes ? data.split.train : data.split.test).push_back(data.matrix.classes.back());
  }
  for (std::size_t i = 0; i < a; ++i) data.matrix.attributes.push_back("attr_" + pad(i));
  for (const auto& s : signatures) {
    for (int v : s) data.matrix.values.push_back(static_cast<double>(v));
  }

  const std::size_t d = config.feature_dim;
  std::normal_distribution<double> embed(0.0, 1.0 / std::sqrt(static_cast<double>(a)));
  out.embedding.resize(d * a);
  for (auto& e : out.embedding) e = embed(rng);

  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t c = 0; c < z; ++c) {
    for (std::size_t m = 0; m < config.samples_per_class; ++m) {
      std::vector<double> u(d, 0.0);
      for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t i = 0; i < a; ++i) u[r] += out.embedding[r * a + i] * signatures[c][i];
        u[r] += config.noise_sigma * noise(rng);
      }
      data.features.push_back(std::move(u));
      data.labels.push_back(data.matrix.classes[c]);
    }
  }
  return out;
}

std::vector<std::vector<double>> binarized_targets(const AttributeMatrix& matrix,
                                                   std::span<const std::string> classes) {
  const double threshold = matrix.global_mean();
  std::vector<std::vector<double>> out;
  for (const auto& c : classes) {
    auto r = matrix.class_index(c);
    if (!r) throw InputError("unknown class `" + c + "`");
    std::vector<double> t(matrix.cols());
    for (std::size_t i = 0; i < matrix.cols(); ++i) t[i] = matrix.at(*r, i) > threshold ? 1.0 : 0.0;
    out.push_back(std::move(t));
  }
  return out;
}

TrainResult train_attribute_classifier(MlpParams params, const AttributeMatrix& matrix,
                                       std::span<const std::string> classes, std::span<const LabeledSample> samples,
                                       const TrainConfig& config) {
  config.validate();
  params.validate();
  if (params.output_dim() != matrix.cols()) throw InputError("network output does not match the attribute count");
  const auto targets = binarized_targets(matrix, classes);
  for (const auto& s : samples) {
    if (s.label >= targets.size()) throw InputError("sample label outside the training classes");
  }

  TrainResult result;
  AdamState adam(params, config.adam);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const MlpParams epoch_start = params;
    const auto order = epoch_order(samples.size(), config.seed, epoch);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0, batch = 0; begin < order.size(); begin += config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::size_t n = end - begin;
      std::vector<MlpParams> grads(n);
      std::vector<double> losses(n, 0.0);
      parallel_for(n, [&](std::size_t s) {
        const auto& sample = samples[order[begin + s]];
        const auto& t = targets[sample.label];
        ForwardCache cache;
        auto x = forward(params, sample.features, &cache);
        std::vector<double> g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double p = std::clamp(x[i], 1e-12, 1.0 - 1e-12);
          losses[s] -= t[i] * std::log(p) + (1.0 - t[i]) * std::log(1.0 - p);
          // dBCE/dx; the sigmoid slope x(1 - x) cancels the denominator.
          g[i] = (x[i] - t[i]) / std::max(x[i] * (1.0 - x[i]), 1e-300) / static_cast<double>(n);
        }
        grads[s] = backward(params, cache, g);
      });
      MlpParams total = params.zeros_like();
      BatchRecord record;
      record.epoch = epoch;
      record.batch = batch;
      for (std::size_t s = 0; s < n; ++s) {
        accumulate(total, grads[s]);
        record.mean_l1 += losses[s];
      }
      epoch_loss += record.mean_l1;
      record.mean_l1 /= static_cast<double>(n);
      if (!std::isfinite(record.mean_l1)) throw NumericError("cross-entropy became non-finite");
      adam_step(params, adam, total);
      if (end == order.size()) record.delta = parameter_distance(params, epoch_start);
      result.history.batches.push_back(record);
    }
    const double delta = parameter_distance(params, epoch_start);
    result.history.epoch_mean_l1.push_back(samples.empty() ? 0.0 : epoch_loss / static_cast<double>(samples.size()));
    result.history.epoch_delta.push_back(delta);
    if (delta <= config.delta_epsilon) {
      result.history.stopped_early = true;
      break;
    }
  }
  result.params = std::move(params);
  return result;
}

EvalReport evaluate_model(const MlpParams& params, const InferenceTemplate& tmpl,
                          std::span<const std::string> classes, std::span<const LabeledSample> samples,
                          const SolverConfig& solver) {
  if (classes.size() != tmpl.class_count()) throw InputError("class list does not match the program");
  std::vector<std::size_t> predicted(samples.size()), truth(samples.size());
  parallel_for(samples.size(), [&](std::size_t s) {
    predicted[s] = predict(params, tmpl, samples[s].features, solver).label;
    truth[s] = samples[s].label;
  });
  return evaluate(predicted, truth, classes);
}

}  // namespace deeppsl
