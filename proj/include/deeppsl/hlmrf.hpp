// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

// Hinge-loss Markov random fields: energy, box-penalized energy, gradients
// and MAP inference.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deeppsl {

struct Coefficient {
  std::size_t index = 0;
  double value = 0.0;
};

/// One term theta * max(l(x, y), 0)^p with l linear in x and y.
struct LinearPotential {
  std::vector<Coefficient> y_coeffs;
  std::vector<Coefficient> x_coeffs;
  double offset = 0.0;
  double weight = 1.0;
  int exponent = 2;

  double linear(std::span<const double> x, std::span<const double> y) const;
  double value(std::span<const double> x, std::span<const double> y) const;
};

class HlmrfInstance {
 public:
  HlmrfInstance() = default;
  /// Validates indices, weights and exponents; throws InputError.
  HlmrfInstance(std::vector<LinearPotential> potentials, std::size_t n_free, std::size_t n_obs);

  const std::vector<LinearPotential>& potentials() const { return potentials_; }
  std::size_t n_free() const { return n_free_; }
  std::size_t n_obs() const { return n_obs_; }

 private:
  std::vector<LinearPotential> potentials_;
  std::size_t n_free_ = 0;
  std::size_t n_obs_ = 0;
};

struct SolverConfig {
  double gamma_lower = 100.0;
  double gamma_upper = 100.0;
  double proximal_nu = 0.0;
  std::optional<std::vector<double>> anchor;
  double step_size = 5e-3;
  int max_iterations = 5000;
  double loss_change_threshold = 1e-6;
  double init_value = 0.5;

  void validate() const;
};

double energy(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y);

/// Energy plus quadratic box penalties and the optional proximal term.
double soft_energy(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y,
                   const SolverConfig& config);

std::vector<double> grad_y(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y,
                           const SolverConfig& config);

std::vector<double> grad_x(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y,
                           const SolverConfig& config);

/// soft_energy(y + shift) - soft_energy(y), accumulated term by term so that
/// small shifts do not lose precision to cancellation.
double soft_energy_shift(const HlmrfInstance& instance, std::span<const double> x, std::span<const double> y,
                         std::span<const double> shift, const SolverConfig& config);

/// Gradient in x of soft_energy_shift. Penalties do not depend on x.
std::vector<double> soft_energy_shift_grad_x(const HlmrfInstance& instance, std::span<const double> x,
                                             std::span<const double> y, std::span<const double> shift);

struct MapResult {
  std::vector<double> y;    // clamped to [0, 1]
  std::vector<double> raw;  // final iterate
  double soft_energy = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Gradient descent on soft_energy from init_value. Throws NumericError if
/// the energy becomes non-finite.
MapResult map_infer(const HlmrfInstance& instance, std::span<const double> x, const SolverConfig& config);

/// Exhaustive grid search over {0, step, ..., 1}^n_free, n_free <= 4.
std::vector<double> brute_force_map(const HlmrfInstance& instance, std::span<const double> x, double grid_step,
                                    const SolverConfig& config = {});

/// One potential per line: `w p : offset [+|- c*y<i>]* [+|- c*x<j>]*`.
std::string dump(const HlmrfInstance& instance);
HlmrfInstance parse_dump(const std::string& text, std::size_t n_free, std::size_t n_obs);

}  // namespace deeppsl
