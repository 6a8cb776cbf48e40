// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include "deeppsl/mlp.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "deeppsl/binary_io.hpp"
#include "deeppsl/error.hpp"

namespace deeppsl {

namespace {

constexpr char kCheckpointMagic[4] = {'D', 'P', 'W', '1'};

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Elu:
      return elu(z);
    case Activation::Sigmoid:
      return sigmoid(z);
    case Activation::Identity:
      break;
  }
  return z;
}

// Derivative expressed through the pre-activation z and output o.
double activate_slope(Activation a, double z, double o) {
  switch (a) {
    case Activation::Elu:
      return z > 0.0 ? 1.0 : o + 1.0;
    case Activation::Sigmoid:
      return o * (1.0 - o);
    case Activation::Identity:
      break;
  }
  return 1.0;
}

void check_same_shape(const MlpParams& a, const MlpParams& b) {
  if (a.layers.size() != b.layers.size()) throw InputError("parameter shape mismatch");
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    if (a.layers[k].rows != b.layers[k].rows || a.layers[k].cols != b.layers[k].cols) {
      throw InputError("parameter shape mismatch at layer " + std::to_string(k));
    }
  }
}

}  // namespace

double elu(double z) { return z > 0.0 ? z : std::expm1(z); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams out = *this;
  out.for_each([](double& v) { v = 0.0; });
  return out;
}

void MlpParams::validate() const {
  if (layers.empty()) throw InputError("network has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.rows == 0 || l.cols == 0) throw InputError("layer " + std::to_string(k) + " is empty");
    if (l.weights.size() != l.rows * l.cols || l.bias.size() != l.rows) {
      throw InputError("layer " + std::to_string(k) + " storage does not match its shape");
    }
    if (k > 0 && layers[k - 1].rows != l.cols) {
      throw InputError("layer " + std::to_string(k) + " expects " + std::to_string(l.cols) + " inputs but layer " +
                       std::to_string(k - 1) + " produces " + std::to_string(layers[k - 1].rows));
    }
  }
  bool finite = true;
  for_each([&finite](double v) { finite = finite && std::isfinite(v); });
  if (!finite) throw InputError("network parameters contain non-finite values");
}

MlpParams init_mlp(std::span<const std::size_t> dims, std::span<const Activation> activations, std::uint64_t seed) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1) {
    throw InputError("init needs n+1 dimensions for n activations");
  }
  std::mt19937_64 rng(seed);
  MlpParams params;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    DenseLayer l;
    l.cols = dims[k];
    l.rows = dims[k + 1];
    l.activation = activations[k];
    if (l.rows == 0 || l.cols == 0) throw InputError("layer dimensions must be positive");
    double bound = std::sqrt(6.0 / static_cast<double>(l.rows + l.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    l.weights.resize(l.rows * l.cols);
    for (auto& w : l.weights) w = dist(rng);
    l.bias.assign(l.rows, 0.0);
    params.layers.push_back(std::move(l));
  }
  return params;
}

MlpParams init_attribute_network(std::size_t input_dim, std::size_t hidden, std::size_t output_dim,
                                 std::uint64_t seed) {
  const std::size_t dims[] = {input_dim, hidden, output_dim};
  const Activation acts[] = {Activation::Elu, Activation::Sigmoid};
  return init_mlp(dims, acts, seed);
}

std::vector<double> forward(const MlpParams& params, std::span<const double> u, ForwardCache* cache) {
  if (u.size() != params.input_dim()) {
    throw InputError("network expects " + std::to_string(params.input_dim()) + " features, got " +
                     std::to_string(u.size()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  std::vector<double> h(u.begin(), u.end());
  for (const auto& l : params.layers) {
    std::vector<double> z(l.bias);
    for (std::size_t r = 0; r < l.rows; ++r) {
      const double* row = &l.weights[r * l.cols];
      double acc = 0.0;
      for (std::size_t c = 0; c < l.cols; ++c) acc += row[c] * h[c];
      z[r] += acc;
    }
    std::vector<double> out(l.rows);
    for (std::size_t r = 0; r < l.rows; ++r) out[r] = activate(l.activation, z[r]);
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->pre.push_back(std::move(z));
    }
    h = std::move(out);
  }
  for (double v : h) {
    if (!std::isfinite(v)) throw NumericError("network produced a non-finite output");
  }
  if (cache) cache->output = h;
  return h;
}

MlpParams backward(const MlpParams& params, const ForwardCache& cache, std::span<const double> grad_output) {
  if (cache.inputs.size() != params.layers.size() || grad_output.size() != params.output_dim()) {
    throw InputError("backward called with a cache or gradient that does not match the network");
  }
  MlpParams grads = params.zeros_like();
  std::vector<double> delta(grad_output.begin(), grad_output.end());
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const auto& l = params.layers[k];
    auto& g = grads.layers[k];
    const auto& in = cache.inputs[k];
    const auto& z = cache.pre[k];
    const auto& out = k + 1 < params.layers.size() ? cache.inputs[k + 1] : cache.output;
    for (std::size_t r = 0; r < l.rows; ++r) delta[r] *= activate_slope(l.activation, z[r], out[r]);

    std::vector<double> next(l.cols, 0.0);
    for (std::size_t r = 0; r < l.rows; ++r) {
      const double d = delta[r];
      g.bias[r] = d;
      if (d == 0.0) continue;
      double* grow = &g.weights[r * l.cols];
      const double* wrow = &l.weights[r * l.cols];
      for (std::size_t c = 0; c < l.cols; ++c) {
        grow[c] = d * in[c];
        next[c] += d * wrow[c];
      }
    }
    delta = std::move(next);
  }
  return grads;
}

void accumulate(MlpParams& a, const MlpParams& b, double scale) {
  check_same_shape(a, b);
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    auto& la = a.layers[k];
    const auto& lb = b.layers[k];
    for (std::size_t i = 0; i < la.weights.size(); ++i) la.weights[i] += scale * lb.weights[i];
    for (std::size_t i = 0; i < la.bias.size(); ++i) la.bias[i] += scale * lb.bias[i];
  }
}

double parameter_distance(const MlpParams& a, const MlpParams& b) {
  check_same_shape(a, b);
  double sum = 0.0;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    const auto& la = a.layers[k];
    const auto& lb = b.layers[k];
    for (std::size_t i = 0; i < la.weights.size(); ++i) sum += (la.weights[i] - lb.weights[i]) * (la.weights[i] - lb.weights[i]);
    for (std::size_t i = 0; i < la.bias.size(); ++i) sum += (la.bias[i] - lb.bias[i]) * (la.bias[i] - lb.bias[i]);
  }
  return std::sqrt(sum);
}

void adam_step(MlpParams& params, AdamState& state, const MlpParams& gradients) {
  check_same_shape(params, gradients);
  check_same_shape(params, state.m);
  const auto& cfg = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        double gi = g[i] + cfg.weight_decay * p[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
        double m_hat = m[i] / correction1;
        double v_hat = v[i] / correction2;
        p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
      }
    };
    auto& lp = params.layers[k];
    const auto& lg = gradients.layers[k];
    update(lp.weights, lg.weights, state.m.layers[k].weights, state.v.layers[k].weights);
    update(lp.bias, lg.bias, state.m.layers[k].bias, state.v.layers[k].bias);
  }
}

void save_checkpoint(const MlpParams& params, const std::filesystem::path& path) {
  params.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint `" + path.string() + "`");
  out.write(kCheckpointMagic, 4);
  io::write_u32(out, static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    io::write_u32(out, static_cast<std::uint32_t>(l.rows));
    io::write_u32(out, static_cast<std::uint32_t>(l.cols));
    for (double v : l.weights) io::write_f64(out, v);
    for (double v : l.bias) io::write_f64(out, v);
    out.put(static_cast<char>(l.activation));
  }
  if (!out) throw InputError("failed writing checkpoint `" + path.string() + "`");
}

MlpParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint `" + path.string() + "`");
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kCheckpointMagic, 4)) {
    throw InputError("`" + path.string() + "` is not a DPW1 checkpoint");
  }
  MlpParams params;
  std::uint32_t n_layers = io::read_u32(in);
  for (std::uint32_t k = 0; k < n_layers; ++k) {
    DenseLayer l;
    l.rows = io::read_u32(in);
    l.cols = io::read_u32(in);
    l.weights.resize(l.rows * l.cols);
    for (auto& v : l.weights) v = io::read_f64(in);
    l.bias.resize(l.rows);
    for (auto& v : l.bias) v = io::read_f64(in);
    int tag = in.get();
    if (tag < 0 || tag > 2) throw InputError("checkpoint layer " + std::to_string(k) + " has unknown activation");
    l.activation = static_cast<Activation>(tag);
    params.layers.push_back(std::move(l));
  }
  if (!in) throw InputError("checkpoint `" + path.string() + "` is truncated");
  params.validate();
  return params;
}

}  // namespace deeppsl
