// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include "deeppsl/hlmrf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "deeppsl/error.hpp"

namespace deeppsl {

namespace {

void check_dims(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y) {
  if (x.size() != instance.n_obs() || y.size() != instance.n_free()) {
    throw InputError("dimension mismatch: instance has " + std::to_string(instance.n_obs()) + " observed and " +
                     std::to_string(instance.n_free()) + " free variables, got " + std::to_string(x.size()) +
                     " and " + std::to_string(y.size()));
  }
}

void check_anchor(const HlmrfInstance& instance, const SolverConfig& config) {
  if (config.proximal_nu > 0.0 && config.anchor && config.anchor->size() != instance.n_free()) {
    throw InputError("proximal anchor has " + std::to_string(config.anchor->size()) + " entries, expected " +
                     std::to_string(instance.n_free()));
  }
}

// d/dl of max(l, 0)^p. The exponent-1 subgradient at the kink is 0.
double hinge_slope(double l, int exponent) {
  if (l <= 0.0) return 0.0;
  return exponent == 2 ? 2.0 * l : 1.0;
}

// max(a, 0)^p - max(b, 0)^p where a = b + delta.
double hinge_difference(double b, double delta, int exponent) {
  double a = b + delta;
  double pa = std::max(a, 0.0);
  double pb = std::max(b, 0.0);
  if (exponent == 1) {
    return (a > 0.0 && b > 0.0) ? delta : pa - pb;
  }
  if (a > 0.0 && b > 0.0) return delta * (a + b);
  return pa * pa - pb * pb;
}

bool proximal_active(const SolverConfig& config) { return config.proximal_nu > 0.0 && config.anchor.has_value(); }

}  // namespace

double LinearPotential::linear(std::span<const double> x, std::span<const double> y) const {
  double l = offset;
  for (const auto& c : y_coeffs) l += c.value * y[c.index];
  for (const auto& c : x_coeffs) l += c.value * x[c.index];
  return l;
}

double LinearPotential::value(std::span<const double> x, std::span<const double> y) const {
  double h = std::max(linear(x, y), 0.0);
  return weight * (exponent == 2 ? h * h : h);
}

HlmrfInstance::HlmrfInstance(std::vector<LinearPotential> potentials, std::size_t n_free, std::size_t n_obs)
    : potentials_(std::move(potentials)), n_free_(n_free), n_obs_(n_obs) {
  if (n_free_ == 0) throw InputError("an instance needs at least one free variable");
  for (std::size_t j = 0; j < potentials_.size(); ++j) {
    const auto& p = potentials_[j];
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight)) {
      throw InputError("potential " + std::to_string(j) + " has invalid weight");
    }
    if (p.exponent != 1 && p.exponent != 2) {
      throw InputError("potential " + std::to_string(j) + " has exponent " + std::to_string(p.exponent));
    }
    for (const auto& c : p.y_coeffs) {
      if (c.index >= n_free_) throw InputError("potential " + std::to_string(j) + " references y" + std::to_string(c.index));
    }
    for (const auto& c : p.x_coeffs) {
      if (c.index >= n_obs_) throw InputError("potential " + std::to_string(j) + " references x" + std::to_string(c.index));
    }
  }
}

void SolverConfig::validate() const {
  if (!(gamma_lower > 0.0) || !(gamma_upper > 0.0)) throw InputError("box penalty weights must be positive");
  if (!(proximal_nu >= 0.0)) throw InputError("proximal weight must be non-negative");
  if (!(step_size > 0.0)) throw InputError("inference step size must be positive");
  if (max_iterations <= 0) throw InputError("inference max iterations must be positive");
  if (!(loss_change_threshold > 0.0)) throw InputError("inference threshold must be positive");
  if (!(init_value >= 0.0 && init_value <= 1.0)) throw InputError("inference init value must lie in [0, 1]");
}

double energy(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y) {
  check_dims(instance, x, y);
  double total = 0.0;
  for (const auto& p : instance.potentials()) total += p.value(x, y);
  return total;
}

double soft_energy(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y,
                   const SolverConfig& config) {
  check_anchor(instance, config);
  double total = energy(instance, x, y);
  for (double v : y) {
    double below = std::max(0.0, -v);
    double above = std::max(0.0, v - 1.0);
    total += config.gamma_lower * below * below + config.gamma_upper * above * above;
  }
  if (proximal_active(config)) {
    const auto& anchor = *config.anchor;
    double dist = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dist += (y[i] - anchor[i]) * (y[i] - anchor[i]);
    total += config.proximal_nu * dist;
  }
  return total;
}

std::vector<double> grad_y(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y,
                           const SolverConfig& config) {
  check_dims(instance, x, y);
  check_anchor(instance, config);
  std::vector<double> g(y.size(), 0.0);
  for (const auto& p : instance.potentials()) {
    double scale = p.weight * hinge_slope(p.linear(x, y), p.exponent);
    if (scale == 0.0) continue;
    for (const auto& c : p.y_coeffs) g[c.index] += scale * c.value;
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0.0) g[i] += 2.0 * config.gamma_lower * y[i];
    if (y[i] > 1.0) g[i] += 2.0 * config.gamma_upper * (y[i] - 1.0);
  }
  if (proximal_active(config)) {
    const auto& anchor = *config.anchor;
    for (std::size_t i = 0; i < y.size(); ++i) g[i] += 2.0 * config.proximal_nu * (y[i] - anchor[i]);
  }
  return g;
}

std::vector<double> grad_x(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y,
                           const SolverConfig&) {
  check_dims(instance, x, y);
  std::vector<double> g(x.size(), 0.0);
  for (const auto& p : instance.potentials()) {
    double scale = p.weight * hinge_slope(p.linear(x, y), p.exponent);
    if (scale == 0.0) continue;
    for (const auto& c : p.x_coeffs) g[c.index] += scale * c.value;
  }
  return g;
}

double soft_energy_shift(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y,
                         std::span<const double> shift, const SolverConfig& config) {
  check_dims(instance, x, y);
  check_anchor(instance, config);
  if (shift.size() != y.size()) throw InputError("shift dimension mismatch");
  double total = 0.0;
  for (const auto& p : instance.potentials()) {
    double delta = 0.0;
    for (const auto& c : p.y_coeffs) delta += c.value * shift[c.index];
    total += p.weight * hinge_difference(p.linear(x, y), delta, p.exponent);
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    total += config.gamma_lower * hinge_difference(-y[i], -shift[i], 2);
    total += config.gamma_upper * hinge_difference(y[i] - 1.0, shift[i], 2);
  }
  if (proximal_active(config)) {
    const auto& anchor = *config.anchor;
    for (std::size_t i = 0; i < y.size(); ++i) {
      // (d + s)^2 - d^2 = s (2d + s)
      double d = y[i] - anchor[i];
      total += config.proximal_nu * shift[i] * (2.0 * d + shift[i]);
    }
  }
  return total;
}

std::vector<double> soft_energy_shift_grad_x(const HlmrfInstance& instance, std::span<const double> x,
                                             std::span<const double> y, std::span<const double> shift) {
  check_dims(instance, x, y);
  if (shift.size() != y.size()) throw InputError("shift dimension mismatch");
  std::vector<double> g(x.size(), 0.0);
  for (const auto& p : instance.potentials()) {
    if (p.x_coeffs.empty()) continue;
    double l = p.linear(x, y);
    double delta = 0.0;
    for (const auto& c : p.y_coeffs) delta += c.value * shift[c.index];
    double scale = p.weight * (hinge_slope(l + delta, p.exponent) - hinge_slope(l, p.exponent));
    if (p.exponent == 2 && l > 0.0 && l + delta > 0.0) scale = p.weight * 2.0 * delta;
    if (scale == 0.0) continue;
    for (const auto& c : p.x_coeffs) g[c.index] += scale * c.value;
  }
  return g;
}

MapResult map_infer(const HlmrfInstance& instance, std::span<const double> x, const SolverConfig& config) {
  config.validate();
  MapResult result;
  result.raw.assign(instance.n_free(), config.init_value);
  double previous = soft_energy(instance, x, result.raw, config);
  if (!std::isfinite(previous)) throw NumericError("non-finite energy at the initial point");

  for (int t = 1; t <= config.max_iterations; ++t) {
    auto g = grad_y(instance, x, result.raw, config);
    for (std::size_t i = 0; i < g.size(); ++i) result.raw[i] -= config.step_size * g[i];
    double current = soft_energy(instance, x, result.raw, config);
    if (!std::isfinite(current)) {
      throw NumericError("non-finite energy after " + std::to_string(t) + " inference iterations");
    }
    result.iterations = t;
    if (std::abs(current - previous) < config.loss_change_threshold) {
      result.converged = true;
      previous = current;
      break;
    }
    previous = current;
  }
  result.soft_energy = previous;
  result.y = result.raw;
  for (double& v : result.y) v = std::clamp(v, 0.0, 1.0);
  return result;
}

std::vector<double> brute_force_map(const HlmrfInstance& instance, std::span<const double> x, double grid_step,
                                    const SolverConfig& config) {
  const std::size_t n = instance.n_free();
  if (n > 4) throw InputError("brute-force MAP supports at most 4 free variables");
  if (!(grid_step > 0.0) || grid_step > 1.0) throw InputError("grid step must lie in (0, 1]");
  double cells = 1.0 / grid_step;
  auto steps = static_cast<std::size_t>(std::llround(cells));
  if (std::abs(cells - static_cast<double>(steps)) > 1e-9) throw InputError("grid step must divide 1 evenly");

  const std::size_t points = steps + 1;
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= points;

  std::vector<double> y(n), best(n, 0.0);
  double best_energy = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<double>(rest % points) / static_cast<double>(steps);
      rest /= points;
    }
    double e = soft_energy(instance, x, y, config);
    if (e < best_energy) {
      best_energy = e;
      best = y;
    }
  }
  return best;
}

std::string dump(const HlmrfInstance& instance) {
  std::ostringstream out;
  out.precision(17);
  auto term = [&out](double c, char var, std::size_t idx) {
    out << (c < 0.0 ? " - " : " + ") << std::abs(c) << '*' << var << idx;
  };
  for (const auto& p : instance.potentials()) {
    out << p.weight << ' ' << p.exponent << " : " << p.offset;
    for (const auto& c : p.y_coeffs) term(c.value, 'y', c.index);
    for (const auto& c : p.x_coeffs) term(c.value, 'x', c.index);
    out << '\n';
  }
  return out.str();
}

HlmrfInstance parse_dump(const std::string& text, std::size_t n_free, std::size_t n_obs) {
  std::vector<LinearPotential> potentials;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream in(line);
    LinearPotential p;
    std::string colon;
    if (!(in >> p.weight >> p.exponent >> colon >> p.offset) || colon != ":") {
      throw ParseError(line_no, 1, "expected `weight exponent : offset`");
    }
    std::string sign, tok;
    while (in >> sign) {
      if ((sign != "+" && sign != "-") || !(in >> tok)) throw ParseError(line_no, 1, "expected `+|- c*var`");
      auto star = tok.find('*');
      if (star == std::string::npos || star + 2 > tok.size()) throw ParseError(line_no, 1, "bad term `" + tok + "`");
      double c = std::stod(tok.substr(0, star));
      if (sign == "-") c = -c;
      char var = tok[star + 1];
      std::size_t idx = std::stoul(tok.substr(star + 2));
      if (var == 'y') {
        p.y_coeffs.push_back({idx, c});
      } else if (var == 'x') {
        p.x_coeffs.push_back({idx, c});
      } else {
        throw ParseError(line_no, 1, "unknown variable kind in `" + tok + "`");
      }
    }
    potentials.push_back(std::move(p));
  }
  return HlmrfInstance(std::move(potentials), n_free, n_obs);
}

}  // namespace deeppsl
