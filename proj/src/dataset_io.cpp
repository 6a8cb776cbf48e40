// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include "deeppsl/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "deeppsl/binary_io.hpp"
#include "deeppsl/error.hpp"

namespace deeppsl::io {

namespace {

constexpr char kMatrixMagic[4] = {'D', 'P', 'M', '1'};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

}  // namespace

void write_dpm1(const Matrix& m, const std::filesystem::path& path) {
  if (m.values.size() != m.rows * m.cols) throw InputError("matrix storage does not match its shape");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write `" + path.string() + "`");
  out.write(kMatrixMagic, 4);
  write_u32(out, static_cast<std::uint32_t>(m.rows));
  write_u32(out, static_cast<std::uint32_t>(m.cols));
  for (double v : m.values) write_f32(out, static_cast<float>(v));
  if (!out) throw InputError("failed writing `" + path.string() + "`");
}

Matrix read_dpm1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open `" + path.string() + "`");
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kMatrixMagic, 4)) {
    throw InputError("`" + path.string() + "` is not a DPM1 matrix");
  }
  Matrix m;
  m.rows = read_u32(in);
  m.cols = read_u32(in);
  const auto expected = static_cast<std::uintmax_t>(12 + 4 * m.rows * m.cols);
  if (std::filesystem::file_size(path) != expected) {
    throw InputError("`" + path.string() + "` payload does not match " + std::to_string(m.rows) + "x" +
                     std::to_string(m.cols));
  }
  m.values.resize(m.rows * m.cols);
  for (auto& v : m.values) {
    v = read_f32(in);
    if (!std::isfinite(v)) throw InputError("`" + path.string() + "` contains non-finite values");
  }
  return m;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open `" + path.string() + "`");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write `" + path.string() + "`");
  out << text;
  if (!out) throw InputError("failed writing `" + path.string() + "`");
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  write_text(text, path);
}

SplitSpec read_split(const std::filesystem::path& path) {
  SplitSpec split;
  std::vector<std::string>* section = nullptr;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line == "train:") {
      section = &split.train;
    } else if (line == "test:") {
      section = &split.test;
    } else if (!section) {
      throw ParseError(line_no, 1, "class listed before a `train:` or `test:` section");
    } else {
      section->push_back(line);
    }
  }
  split.validate();
  return split;
}

void write_split(const SplitSpec& split, const std::filesystem::path& path) {
  std::vector<std::string> lines{"train:"};
  lines.insert(lines.end(), split.train.begin(), split.train.end());
  lines.push_back("test:");
  lines.insert(lines.end(), split.test.begin(), split.test.end());
  write_lines(lines, path);
}

void write_attribute_csv(const AttributeMatrix& matrix, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "class";
  for (const auto& a : matrix.attributes) out << ',' << a;
  out << '\n';
  for (std::size_t c = 0; c < matrix.rows(); ++c) {
    out << matrix.classes[c];
    for (std::size_t i = 0; i < matrix.cols(); ++i) out << ',' << matrix.at(c, i);
    out << '\n';
  }
  write_text(out.str(), path);
}

AttributeMatrix read_attribute_matrix(const std::filesystem::path& path, const std::filesystem::path& classes) {
  AttributeMatrix matrix;
  if (path.extension() == ".csv") {
    std::istringstream in(read_text(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      auto cells = split_csv_row(line);
      if (matrix.attributes.empty()) {
        if (cells.size() < 2) throw ParseError(line_no, 1, "header needs at least one attribute column");
        matrix.attributes.assign(cells.begin() + 1, cells.end());
        continue;
      }
      if (cells.size() != matrix.attributes.size() + 1) {
        throw ParseError(line_no, 1, "expected " + std::to_string(matrix.attributes.size() + 1) + " cells");
      }
      matrix.classes.push_back(cells[0]);
      for (std::size_t i = 1; i < cells.size(); ++i) {
        try {
          std::size_t used = 0;
          matrix.values.push_back(std::stod(cells[i], &used));
          if (used != cells[i].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw ParseError(line_no, i + 1, "`" + cells[i] + "` is not a number");
        }
      }
    }
  } else {
    auto m = read_dpm1(path);
    auto names_path = classes.empty() ? path.parent_path() / "classes.txt" : classes;
    matrix.classes = read_lines(names_path);
    if (matrix.classes.size() != m.rows) {
      throw InputError("`" + names_path.string() + "` lists " + std::to_string(matrix.classes.size()) +
                       " classes but the attribute matrix has " + std::to_string(m.rows) + " rows");
    }
    for (std::size_t i = 0; i < m.cols; ++i) matrix.attributes.push_back("attr_" + std::to_string(i));
    matrix.values = std::move(m.values);
  }
  matrix.validate();
  return matrix;
}

ZslDataset load_dataset(const DatasetPaths& paths) {
  ZslDataset data;
  auto features = read_dpm1(paths.features);
  for (std::size_t r = 0; r < features.rows; ++r) {
    auto begin = features.values.begin() + static_cast<std::ptrdiff_t>(r * features.cols);
    data.features.emplace_back(begin, begin + static_cast<std::ptrdiff_t>(features.cols));
  }
  data.labels = read_lines(paths.labels);
  data.matrix = read_attribute_matrix(paths.attributes, paths.classes);
  data.split = read_split(paths.split);
  data.validate();
  return data;
}

void save_dataset(const ZslDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Matrix features;
  features.rows = data.features.size();
  features.cols = data.feature_dim();
  for (const auto& row : data.features) features.values.insert(features.values.end(), row.begin(), row.end());
  write_dpm1(features, dir / "features.dpm1");
  write_lines(data.labels, dir / "labels.txt");
  write_dpm1({data.matrix.rows(), data.matrix.cols(), data.matrix.values}, dir / "attributes.dpm1");
  write_attribute_csv(data.matrix, dir / "attributes.csv");
  write_lines(data.matrix.classes, dir / "classes.txt");
  write_split(data.split, dir / "split.txt");
}

}  // namespace deeppsl::io
