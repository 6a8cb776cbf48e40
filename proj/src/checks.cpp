// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include "deeppsl/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "deeppsl/error.hpp"
#include "deeppsl/mlp.hpp"
#include "deeppsl/parallel.hpp"
#include "deeppsl/trainer.hpp"
#include "deeppsl/zsl.hpp"

namespace deeppsl {

namespace {

constexpr double kCorruption = 1e-3;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& e : v) e = uniform(rng, lo, hi);
  return v;
}

double norm(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  std::vector<double> diff(analytic.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = analytic[i] - numeric[i];
  const double scale = std::max({norm(analytic), norm(numeric), 1e-12});
  return norm(diff) / scale;
}

void corrupt(std::vector<double>& g, const CheckOptions& options) {
  if (!options.corrupt_gradients) return;
  for (auto& v : g) v *= 1.0 + kCorruption;
}

// True when every hinge and box boundary is at least `gap` away, so central
// differences do not straddle a kink.
bool away_from_kinks(const HlmrfInstance& inst, std::span<const double> x, std::span<const double> y, double gap) {
  for (const auto& p : inst.potentials()) {
    if (std::abs(p.linear(x, y)) < gap) return false;
  }
  for (double v : y) {
    if (std::abs(v) < gap || std::abs(v - 1.0) < gap) return false;
  }
  return true;
}

CheckResult make_result(std::string name, double measured, double limit, bool passed, std::string detail = {}) {
  return {std::move(name), passed, measured, limit, std::move(detail)};
}

// Energy-gradient fidelity in y and x on random squared-hinge instances.
std::vector<CheckResult> energy_gradient_checks(const CheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  constexpr double h = 1e-6;
  constexpr double limit = 1e-6;
  double worst_y = 0.0;
  double worst_x = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_rule_instance(rng, {4, 3, 8, 2});
    SolverConfig cfg;
    cfg.proximal_nu = uniform(rng, 0.0, 1.0);
    cfg.anchor = uniform_vector(rng, 4, 0.0, 1.0);
    std::vector<double> x;
    std::vector<double> y;
    do {
      x = uniform_vector(rng, 3, 0.0, 1.0);
      y = uniform_vector(rng, 4, -0.2, 1.2);
    } while (!away_from_kinks(inst, x, y, 1e-4));

    auto gy = grad_y(inst, x, y, cfg);
    auto gx = grad_x(inst, x, y, cfg);
    corrupt(gy, options);
    corrupt(gx, options);
    std::vector<double> ny(gy.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      auto hi = y;
      auto lo = y;
      hi[i] += h;
      lo[i] -= h;
      ny[i] = (soft_energy(inst, x, hi, cfg) - soft_energy(inst, x, lo, cfg)) / (2 * h);
    }
    std::vector<double> nx(gx.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      auto hi = x;
      auto lo = x;
      hi[j] += h;
      lo[j] -= h;
      nx[j] = (soft_energy(inst, hi, y, cfg) - soft_energy(inst, lo, y, cfg)) / (2 * h);
    }
    worst_y = std::max(worst_y, relative_error(gy, ny));
    worst_x = std::max(worst_x, relative_error(gx, nx));
  }
  return {make_result("grad_y", worst_y, limit, worst_y < limit, "20 instances, h=1e-6"),
          make_result("grad_x", worst_x, limit, worst_x < limit, "20 instances, h=1e-6")};
}

// Network backward against differences of a fixed random projection.
CheckResult network_gradient_check(const CheckOptions& options) {
  std::mt19937_64 rng(options.seed + 1);
  constexpr double h = 1e-5;
  constexpr double limit = 1e-5;
  auto params = init_attribute_network(5, 4, 3, options.seed);
  // Non-zero biases so the check covers them.
  for (auto& layer : params.layers) {
    for (auto& b : layer.bias) b = uniform(rng, -0.5, 0.5);
  }
  const auto u = uniform_vector(rng, 5, -1.0, 1.0);
  const auto probe = uniform_vector(rng, 3, -1.0, 1.0);
  auto scalar = [&](const MlpParams& p) {
    auto out = forward(p, u);
    return std::inner_product(out.begin(), out.end(), probe.begin(), 0.0);
  };
  ForwardCache cache;
  forward(params, u, &cache);
  std::vector<double> analytic;
  backward(params, cache, probe).for_each([&](double v) { analytic.push_back(v); });
  corrupt(analytic, options);

  std::vector<double> numeric;
  std::size_t k = 0;
  const std::size_t count = params.parameter_count();
  for (std::size_t idx = 0; idx < count; ++idx) {
    auto hi = params;
    auto lo = params;
    k = 0;
    hi.for_each([&](double& v) { v += (k++ == idx) ? h : 0.0; });
    k = 0;
    lo.for_each([&](double& v) { v -= (k++ == idx) ? h : 0.0; });
    numeric.push_back((scalar(hi) - scalar(lo)) / (2 * h));
  }
  const double err = relative_error(analytic, numeric);
  return make_result("network_backward", err, limit, err < limit, "5-4-3 network, all parameters, h=1e-5");
}

// d(sum of L2)/dw for an 8-4-3 network over a random 3-class program.
CheckResult surrogate_weight_gradient_check(const CheckOptions& options) {
  std::mt19937_64 rng(options.seed + 2);
  constexpr double h = 1e-5;
  constexpr double limit = 1e-4;
  constexpr std::size_t probes = 20;

  AttributeMatrix matrix;
  matrix.classes = {"c0", "c1", "c2"};
  matrix.attributes = {"a0", "a1", "a2"};
  matrix.values = uniform_vector(rng, 9, 0.05, 1.0);
  const auto tmpl = make_template(matrix, matrix.classes, WeightMode::Continuous);
  auto params = init_attribute_network(8, 4, 3, options.seed);

  std::vector<LabeledSample> samples;
  for (std::size_t s = 0; s < 4; ++s) samples.push_back({uniform_vector(rng, 8, -1.0, 1.0), s % 3});

  SolverConfig solver;
  solver.proximal_nu = 1e-3;
  solver.anchor = std::vector<double>(tmpl.instance.n_free(), 0.5);
  const double alpha = TrainConfig{}.alpha;
  std::vector<SampleTarget> targets;
  for (const auto& s : samples) targets.push_back(infer_target(params, tmpl, s, 0.3, solver));

  const auto batch = batch_surrogate_gradient(params, tmpl, samples, targets, alpha, solver);
  std::vector<double> analytic;
  batch.gradient.for_each([&](double v) { analytic.push_back(v); });
  corrupt(analytic, options);

  std::vector<std::size_t> order(analytic.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(probes, order.size()));

  auto total = [&](const MlpParams& p) {
    return batch_surrogate_gradient(p, tmpl, samples, targets, alpha, solver).surrogate;
  };
  double worst = 0.0;
  for (std::size_t idx : order) {
    auto hi = params;
    auto lo = params;
    std::size_t k = 0;
    hi.for_each([&](double& v) { v += (k++ == idx) ? h : 0.0; });
    k = 0;
    lo.for_each([&](double& v) { v -= (k++ == idx) ? h : 0.0; });
    const double numeric = (total(hi) - total(lo)) / (2 * h);
    const double scale = std::max({std::abs(analytic[idx]), std::abs(numeric), 1e-12});
    worst = std::max(worst, std::abs(analytic[idx] - numeric) / scale);
  }
  return make_result("surrogate_weight_gradient", worst, limit, worst < limit,
                     std::to_string(order.size()) + " probed weights, 8-4-3 network, 3 classes, h=1e-5");
}

}  // namespace

bool CheckReport::passed() const {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

const CheckResult* CheckReport::find(std::string_view name) const {
  for (const auto& r : results) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::string CheckReport::to_text() const {
  std::ostringstream out;
  for (const auto& r : results) {
    char line[256];
    std::snprintf(line, sizeof line, "%s %s/%s: measured %.3e, limit %.3e", r.passed ? "PASS" : "FAIL", mode.c_str(),
                  r.name.c_str(), r.measured, r.limit);
    out << line;
    if (!r.detail.empty()) out << " (" << r.detail << ')';
    out << '\n';
  }
  return out.str();
}

HlmrfInstance random_rule_instance(std::mt19937_64& rng, const RandomInstanceSpec& spec) {
  if (spec.n_free == 0) throw InputError("random instance needs at least one free variable");
  std::uniform_int_distribution<int> body_len(1, 3);
  std::uniform_int_distribution<int> head_len(1, 2);
  std::bernoulli_distribution coin(0.5);
  std::vector<LinearPotential> potentials;
  for (std::size_t j = 0; j < spec.potentials; ++j) {
    LinearPotential p;
    p.weight = uniform(rng, 0.1, 2.0);
    p.exponent = spec.exponent;
    const int m = body_len(rng);
    const int n = head_len(rng);
    p.offset = -(m - 1);
    auto add_literal = [&](bool in_body, bool force_free) {
      const bool negated = coin(rng);
      const bool free = force_free || spec.n_obs == 0 || coin(rng);
      const std::size_t pool = free ? spec.n_free : spec.n_obs;
      const std::size_t index = std::uniform_int_distribution<std::size_t>(0, pool - 1)(rng);
      // Positive body +v, negated body 1 - v, positive head -v, negated head -(1 - v).
      const double sign = (in_body ? 1.0 : -1.0) * (negated ? -1.0 : 1.0);
      if (negated) p.offset += in_body ? 1.0 : -1.0;
      (free ? p.y_coeffs : p.x_coeffs).push_back({index, sign});
    };
    for (int i = 0; i < m; ++i) add_literal(true, false);
    for (int i = 0; i < n; ++i) add_literal(false, i == 0);  // every rule touches a free atom
    // Redraw tautologies such as A -> A whose coefficients cancel.
    std::vector<double> net(spec.n_free + spec.n_obs, 0.0);
    for (const auto& c : p.y_coeffs) net[c.index] += c.value;
    for (const auto& c : p.x_coeffs) net[spec.n_free + c.index] += c.value;
    if (std::all_of(net.begin(), net.end(), [](double v) { return v == 0.0; })) {
      --j;
      continue;
    }
    potentials.push_back(std::move(p));
  }
  return HlmrfInstance(std::move(potentials), spec.n_free, spec.n_obs);
}

CheckReport check_gradients(const CheckOptions& options) {
  CheckReport report{"gradients", energy_gradient_checks(options)};
  report.results.push_back(network_gradient_check(options));
  report.results.push_back(surrogate_weight_gradient_check(options));
  return report;
}

CheckReport check_oracle(const CheckOptions& options) {
  constexpr std::size_t instances = 50;
  constexpr double limit = 1e-3;
  std::vector<HlmrfInstance> inst;
  std::vector<std::vector<double>> xs;
  std::mt19937_64 rng(options.seed);
  for (std::size_t k = 0; k < instances; ++k) {
    const std::size_t n_free = 1 + k % 3;
    inst.push_back(random_rule_instance(rng, {n_free, 2, 2 + n_free * 2, 2}));
    xs.push_back(uniform_vector(rng, 2, 0.0, 1.0));
  }
  const SolverConfig cfg;
  std::vector<double> gap(instances);
  parallel_for(instances, [&](std::size_t k) {
    const auto solved = map_infer(inst[k], xs[k], cfg);
    const auto grid = brute_force_map(inst[k], xs[k], 0.01, cfg);
    gap[k] = soft_energy(inst[k], xs[k], solved.y, cfg) - soft_energy(inst[k], xs[k], grid, cfg);
  });
  const double worst = *std::max_element(gap.begin(), gap.end());
  return {"oracle",
          {make_result("map_vs_grid", worst, limit, worst <= limit,
                       "50 instances, n_free 1-3, grid 0.01; measured = worst excess energy")}};
}

CheckReport check_convexity(const CheckOptions& options) {
  constexpr std::size_t instances = 20;
  constexpr int pairs = 1000;
  constexpr double limit = 1e-12;
  std::vector<double> worst(instances, -1e300);
  parallel_for(instances, [&](std::size_t k) {
    std::mt19937_64 rng(options.seed * 1000003 + k);
    const std::size_t n_free = 1 + k % 4;
    const auto inst = random_rule_instance(rng, {n_free, 3, 8, 1 + static_cast<int>(k % 2)});
    SolverConfig cfg;
    cfg.proximal_nu = (k % 3 == 0) ? 0.0 : uniform(rng, 0.0, 1.0);
    if (cfg.proximal_nu > 0.0) cfg.anchor = uniform_vector(rng, n_free, 0.0, 1.0);
    const auto x = uniform_vector(rng, 3, 0.0, 1.0);
    for (int p = 0; p < pairs; ++p) {
      const auto a = uniform_vector(rng, n_free, -0.5, 1.5);
      const auto b = uniform_vector(rng, n_free, -0.5, 1.5);
      std::vector<double> mid(n_free);
      for (std::size_t i = 0; i < n_free; ++i) mid[i] = 0.5 * (a[i] + b[i]);
      const double excess =
          soft_energy(inst, x, mid, cfg) - 0.5 * (soft_energy(inst, x, a, cfg) + soft_energy(inst, x, b, cfg));
      worst[k] = std::max(worst[k], excess);
    }
  });
  const double w = *std::max_element(worst.begin(), worst.end());
  return {"convexity",
          {make_result("midpoint", w, limit, w <= limit,
                       "20 instances x 1000 pairs; measured = worst f(mid) - mean(f(a), f(b))")}};
}

CheckReport check_surrogate(const CheckOptions& options) {
  constexpr std::size_t instances = 10;
  constexpr double first_order_limit = 1e-6;
  std::mt19937_64 rng(options.seed);
  double worst_identity = 0.0;
  double ratio_lo = 1e300;
  double ratio_hi = -1e300;
  const SolverConfig cfg;
  for (std::size_t k = 0; k < instances; ++k) {
    HlmrfInstance inst;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> g;
    double gf_gl = 0.0;
    double residual_big = 0.0;
    auto residual = [&](double a) {
      return std::abs(surrogate_loss(inst, x, y, g, a, cfg) + a * gf_gl);
    };
    // Draw until the second-order remainder is measurable and no kink is
    // within reach of the shift.
    do {
      inst = random_rule_instance(rng, {3, 2, 6, 2});
      x = uniform_vector(rng, 2, 0.0, 1.0);
      y = uniform_vector(rng, 3, 0.0, 1.0);
      g = uniform_vector(rng, 3, -1.0, 1.0);
      auto gf = grad_y(inst, x, y, cfg);
      gf_gl = std::inner_product(gf.begin(), gf.end(), g.begin(), 0.0);
      residual_big = residual(1e-4);
    } while (!away_from_kinks(inst, x, y, 1e-2) || residual_big < 1e-12);

    const double alpha = 1e-8;
    double identity = std::abs(surrogate_loss(inst, x, y, g, alpha, cfg) / alpha + gf_gl);
    if (options.corrupt_gradients) identity += kCorruption * std::abs(gf_gl);
    worst_identity = std::max(worst_identity, identity);
    const double ratio = residual_big / residual(5e-5);
    ratio_lo = std::min(ratio_lo, ratio);
    ratio_hi = std::max(ratio_hi, ratio);
  }
  const double ratio_dev = std::max(std::abs(ratio_lo - 4.0), std::abs(ratio_hi - 4.0));
  char range[96];
  std::snprintf(range, sizeof range, "ratios in [%.4f, %.4f], required [3.5, 4.5]", ratio_lo, ratio_hi);
  return {"surrogate",
          {make_result("first_order", worst_identity, first_order_limit, worst_identity <= first_order_limit,
                       "|L2/alpha + grad f . grad L| at alpha=1e-8, 10 instances"),
           make_result("remainder_ratio", ratio_dev, 0.5, ratio_lo >= 3.5 && ratio_hi <= 4.5, range)}};
}

std::vector<std::string> check_modes() { return {"gradients", "oracle", "convexity", "surrogate"}; }

CheckReport run_check(std::string_view mode, const CheckOptions& options) {
  if (mode == "gradients") return check_gradients(options);
  if (mode == "oracle") return check_oracle(options);
  if (mode == "convexity") return check_convexity(options);
  if (mode == "surrogate") return check_surrogate(options);
  throw InputError("unknown check mode `" + std::string(mode) + "` (gradients, oracle, convexity, surrogate)");
}

}  // namespace deeppsl
