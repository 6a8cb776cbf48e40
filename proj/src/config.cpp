// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include "deeppsl/config.hpp"

#include <charconv>
#include <sstream>

#include "deeppsl/error.hpp"

namespace deeppsl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  value = trim(value);
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw InputError("config key `" + std::string(key) + "`: `" + std::string(value) + "` is not a valid number");
  }
  return out;
}

}  // namespace

std::vector<std::string> RunConfig::keys() {
  return {"batch_size", "epochs",      "inference_lr", "inference_threshold", "inference_max_iters",
          "alpha",      "adam_lr",     "adam_betas",   "adam_eps",            "weight_decay",
          "inner_steps", "margin",     "gamma",        "nu",                  "seed",
          "hidden_units", "delta_epsilon", "rule_weights"};
}

void RunConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "batch_size") {
    batch_size = parse_number<std::size_t>(key, value);
  } else if (key == "epochs") {
    epochs = parse_number<int>(key, value);
  } else if (key == "inference_lr") {
    inference_lr = parse_number<double>(key, value);
  } else if (key == "inference_threshold") {
    inference_threshold = parse_number<double>(key, value);
  } else if (key == "inference_max_iters") {
    inference_max_iters = parse_number<int>(key, value);
  } else if (key == "alpha") {
    alpha = parse_number<double>(key, value);
  } else if (key == "adam_lr") {
    adam_lr = parse_number<double>(key, value);
  } else if (key == "adam_betas") {
    auto comma = value.find(',');
    if (comma == std::string_view::npos) throw InputError("config key `adam_betas` expects `beta1,beta2`");
    adam_beta1 = parse_number<double>(key, value.substr(0, comma));
    adam_beta2 = parse_number<double>(key, value.substr(comma + 1));
  } else if (key == "adam_eps") {
    adam_eps = parse_number<double>(key, value);
  } else if (key == "weight_decay") {
    weight_decay = parse_number<double>(key, value);
  } else if (key == "inner_steps") {
    inner_steps = parse_number<int>(key, value);
  } else if (key == "margin") {
    margin = parse_number<double>(key, value);
  } else if (key == "gamma") {
    gamma = parse_number<double>(key, value);
  } else if (key == "nu") {
    nu = parse_number<double>(key, value);
  } else if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "hidden_units") {
    hidden_units = parse_number<std::size_t>(key, value);
  } else if (key == "delta_epsilon") {
    delta_epsilon = parse_number<double>(key, value);
  } else if (key == "rule_weights") {
    if (value == "continuous") {
      rule_weights = WeightMode::Continuous;
    } else if (value == "binarized") {
      rule_weights = WeightMode::Binarized;
    } else {
      throw InputError("config key `rule_weights` must be `continuous` or `binarized`");
    }
  } else {
    throw InputError("unknown config key `" + std::string(key) + "`");
  }
}

void RunConfig::apply(std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, 1, "expected `key = value`");
    try {
      set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const ParseError&) {
      throw;
    } catch (const InputError& e) {
      throw ParseError(line_no, 1, e.what());
    }
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "batch_size = " << batch_size << '\n'
      << "epochs = " << epochs << '\n'
      << "inference_lr = " << inference_lr << '\n'
      << "inference_threshold = " << inference_threshold << '\n'
      << "inference_max_iters = " << inference_max_iters << '\n'
      << "alpha = " << alpha << '\n'
      << "adam_lr = " << adam_lr << '\n'
      << "adam_betas = " << adam_beta1 << ',' << adam_beta2 << '\n'
      << "adam_eps = " << adam_eps << '\n'
      << "weight_decay = " << weight_decay << '\n'
      << "inner_steps = " << inner_steps << '\n'
      << "margin = " << margin << '\n'
      << "gamma = " << gamma << '\n'
      << "nu = " << nu << '\n'
      << "seed = " << seed << '\n'
      << "hidden_units = " << hidden_units << '\n'
      << "delta_epsilon = " << delta_epsilon << '\n'
      << "rule_weights = " << (rule_weights == WeightMode::Continuous ? "continuous" : "binarized") << '\n';
  return out.str();
}

SolverConfig RunConfig::eval_solver() const {
  SolverConfig s;
  s.gamma_lower = gamma;
  s.gamma_upper = gamma;
  s.proximal_nu = 0.0;
  s.step_size = inference_lr;
  s.max_iterations = inference_max_iters;
  s.loss_change_threshold = inference_threshold;
  return s;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.alpha = alpha;
  t.inner_steps = inner_steps;
  t.margin = margin;
  t.batch_size = batch_size;
  t.epochs = epochs;
  t.delta_epsilon = delta_epsilon;
  t.adam = {adam_lr, adam_beta1, adam_beta2, adam_eps, weight_decay};
  t.solver = eval_solver();
  t.train_nu = nu;
  t.seed = seed;
  return t;
}

}  // namespace deeppsl
