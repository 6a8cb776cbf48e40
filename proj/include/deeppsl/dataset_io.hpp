// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

// On-disk formats for datasets:
//   DPM1 matrix    "DPM1", u32 rows, u32 cols (LE), f32 row-major payload
//   labels.txt     one class name per feature row
//   classes.txt    one class name per attribute-matrix row
//   split file     `train:` and `test:` sections, one class per line
//   attribute CSV  header of attribute names, first column class names

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "deeppsl/zsl.hpp"

namespace deeppsl::io {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
};

void write_dpm1(const Matrix& m, const std::filesystem::path& path);
Matrix read_dpm1(const std::filesystem::path& path);

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path);

SplitSpec read_split(const std::filesystem::path& path);
void write_split(const SplitSpec& split, const std::filesystem::path& path);

void write_attribute_csv(const AttributeMatrix& matrix, const std::filesystem::path& path);

/// `.csv` files carry their own names; DPM1 matrices take class names from
/// `classes` (defaulting to classes.txt beside the matrix) and name
/// attributes attr_0, attr_1, ...
AttributeMatrix read_attribute_matrix(const std::filesystem::path& path,
                                      const std::filesystem::path& classes = {});

struct DatasetPaths {
  std::filesystem::path features;
  std::filesystem::path labels;
  std::filesystem::path attributes;
  std::filesystem::path classes;  // optional
  std::filesystem::path split;
};

ZslDataset load_dataset(const DatasetPaths& paths);

/// Writes features.dpm1, labels.txt, attributes.dpm1, attributes.csv,
/// classes.txt and split.txt into `dir`.
void save_dataset(const ZslDataset& data, const std::filesystem::path& dir);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace deeppsl::io
