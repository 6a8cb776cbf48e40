// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

// Attribute-based zero-shot learning on top of the rule engine: rule
// programs from a class-attribute matrix, synthetic datasets, the two-stage
// baseline, and class-averaged evaluation.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deeppsl/mlp.hpp"
#include "deeppsl/rules.hpp"
#include "deeppsl/trainer.hpp"

namespace deeppsl {

struct AttributeMatrix {
  std::vector<std::string> classes;     // rows
  std::vector<std::string> attributes;  // columns
  std::vector<double> values;           // row-major, entries in [0, 1]

  std::size_t rows() const { return classes.size(); }
  std::size_t cols() const { return attributes.size(); }
  double at(std::size_t c, std::size_t i) const { return values[c * cols() + i]; }
  double global_mean() const;
  std::optional<std::size_t> class_index(const std::string& name) const;

  /// Entries in [0, 1], shape consistent, names unique.
  void validate() const;
};

struct SplitSpec {
  std::vector<std::string> train;
  std::vector<std::string> test;

  /// Non-empty, duplicate-free and disjoint.
  void validate() const;
};

enum class WeightMode { Continuous, Binarized };

struct ZslProgram {
  Program program;
  Domain domain;
  std::vector<std::string> classes;  // in template class order
  std::vector<std::string> warnings;
};

/// Two rules per (attribute i, class c):
///   w : A_i(I) -> Label(I, "c")      and      w : !A_i(I) -> !Label(I, "c")
/// with w = A[c, i] (continuous) or [A[c, i] > global mean] (binarized; zero
/// weights omitted). Throws InputError on an unknown class.
ZslProgram build_rules(const AttributeMatrix& matrix, std::span<const std::string> classes, WeightMode mode);

/// Grounds a ZSL program for a single image and wires attributes and classes.
InferenceTemplate make_template(const ZslProgram& zsl, std::size_t attribute_count);

inline InferenceTemplate make_template(const AttributeMatrix& matrix, std::span<const std::string> classes,
                                       WeightMode mode) {
  return make_template(build_rules(matrix, classes, mode), matrix.cols());
}

struct EvalReport {
  std::vector<std::string> classes;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> correct;
  std::vector<double> per_class_accuracy;  // NaN for excluded classes
  std::vector<std::string> excluded;       // classes without samples
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  double class_average = 0.0;
  double overall = 0.0;
  std::size_t samples = 0;

  std::string to_json() const;
};

/// Predictions and labels index into class_names.
EvalReport evaluate(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                    std::span<const std::string> class_names);

/// Features plus per-row class names; the split decides which rows train.
struct ZslDataset {
  std::vector<std::vector<double>> features;
  std::vector<std::string> labels;
  AttributeMatrix matrix;
  SplitSpec split;

  std::size_t feature_dim() const { return features.empty() ? 0 : features.front().size(); }

  /// Rows whose label is in `classes`, labelled by position in `classes`.
  std::vector<LabeledSample> select(std::span<const std::string> classes) const;

  /// Checks row counts, feature widths, label names and the split.
  void validate() const;
};

struct SynthConfig {
  std::uint64_t seed = 7;
  std::size_t train_classes = 8;
  std::size_t test_classes = 4;
  std::size_t attributes = 12;
  std::size_t feature_dim = 32;
  std::size_t samples_per_class = 50;
  double noise_sigma = 0.05;
  std::size_t min_hamming = 4;
  bool test_in_train_span = true;
};

struct SyntheticDataset {
  ZslDataset data;
  std::vector<double> embedding;  // feature_dim x attributes, row-major
  SynthConfig config;
};

/// Class signatures are binary with exactly half the attributes set and
/// pairwise Hamming distance >= min_hamming, so no signature contains
/// another. With test_in_train_span, every unseen signature is a binary
/// analogy s_i + s_j - s_k of seen signatures, so it lies in their span and
/// a readout fitted on seen classes transfers. Features are
/// u = E s_c + N(0, sigma^2).
SyntheticDataset synthesize(const SynthConfig& config);

/// Binary attribute signature per class from the global-mean threshold.
std::vector<std::vector<double>> binarized_targets(const AttributeMatrix& matrix, std::span<const std::string> classes);

/// Trains the attribute network alone with per-attribute binary
/// cross-entropy against binarized class signatures.
TrainResult train_attribute_classifier(MlpParams params, const AttributeMatrix& matrix,
                                       std::span<const std::string> classes, std::span<const LabeledSample> samples,
                                       const TrainConfig& config);

/// Predicts every sample (in parallel) and scores against `classes`.
EvalReport evaluate_model(const MlpParams& params, const InferenceTemplate& tmpl,
                          std::span<const std::string> classes, std::span<const LabeledSample> samples,
                          const SolverConfig& solver);

}  // namespace deeppsl
