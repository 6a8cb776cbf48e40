// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the engine only through deeppsl.h.
// Exit codes: 0 success, 2 input error, 3 numeric failure, 1 anything else.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "deeppsl/deeppsl.h"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

// Carries a library status out of a subcommand.
struct Failure {
  dpsl_status status;
  std::string message;
};

void ok(dpsl_status s) {
  if (s != DPSL_OK) throw Failure{s, dpsl_last_error()};
}

int exit_code(dpsl_status s) {
  switch (s) {
    case DPSL_OK:
      return 0;
    case DPSL_ERR_ARGUMENT:
    case DPSL_ERR_INPUT:
      return kExitInput;
    case DPSL_ERR_NUMERIC:
      return kExitNumeric;
    default:
      return 1;
  }
}

struct StringDeleter {
  void operator()(char* s) const { dpsl_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct ConfigDeleter {
  void operator()(dpsl_config* c) const { dpsl_config_destroy(c); }
};
struct InstanceDeleter {
  void operator()(dpsl_instance* i) const { dpsl_instance_destroy(i); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Failure{DPSL_ERR_INPUT, "cannot write `" + path + "`"};
}

// Config file, then --set pairs, then dedicated flags.
struct ConfigOptions {
  std::string file;
  std::vector<std::string> sets;
  std::optional<int> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> margin;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> hidden_units;
  std::optional<std::string> rule_weights;

  void attach(CLI::App* cmd, bool training) {
    cmd->add_option("--config", file, "key = value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override one key, e.g. --set margin=0.1 (repeatable)");
    cmd->add_option("--margin", margin, "hinge rank margin");
    cmd->add_option("--seed", seed, "network initialization and shuffling seed");
    cmd->add_option("--rule-weights", rule_weights, "continuous or binarized")
        ->check(CLI::IsMember({"continuous", "binarized"}));
    if (training) {
      cmd->add_option("--epochs", epochs, "training epochs");
      cmd->add_option("--batch-size", batch_size, "samples per batch");
      cmd->add_option("--hidden-units", hidden_units, "hidden layer width");
    }
  }

  std::unique_ptr<dpsl_config, ConfigDeleter> build() const {
    dpsl_config* raw = nullptr;
    ok(dpsl_config_create(&raw));
    std::unique_ptr<dpsl_config, ConfigDeleter> cfg(raw);
    if (!file.empty()) ok(dpsl_config_load(cfg.get(), file.c_str()));
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Failure{DPSL_ERR_INPUT, "--set expects key=value, got `" + kv + "`"};
      ok(dpsl_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
    auto set = [&](const char* key, const std::string& value) { ok(dpsl_config_set(cfg.get(), key, value.c_str())); };
    if (epochs) set("epochs", std::to_string(*epochs));
    if (batch_size) set("batch_size", std::to_string(*batch_size));
    if (margin) set("margin", CLI::detail::to_string(*margin));
    if (seed) set("seed", std::to_string(*seed));
    if (hidden_units) set("hidden_units", std::to_string(*hidden_units));
    if (rule_weights) set("rule_weights", *rule_weights);
    return cfg;
  }
};

struct DatasetOptions {
  std::string features, labels, attributes, classes, split;

  void attach(CLI::App* cmd) {
    cmd->add_option("--features", features, "DPM1 feature matrix")->required();
    cmd->add_option("--labels", labels, "class name per feature row")->required();
    cmd->add_option("--attributes", attributes, "class-attribute matrix (DPM1 or CSV)")->required();
    cmd->add_option("--classes", classes, "class names for a DPM1 attribute matrix");
    cmd->add_option("--split", split, "split file with train: and test: sections")->required();
  }

  dpsl_dataset_paths paths() const {
    return {features.c_str(), labels.c_str(), attributes.c_str(), classes.empty() ? nullptr : classes.c_str(),
            split.c_str()};
  }
};

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw Failure{DPSL_ERR_INPUT, "`" + cell + "` is not a number"};
    }
  }
  return out;
}

std::unique_ptr<dpsl_instance, InstanceDeleter> ground(const std::string& rules, const std::string& domain) {
  dpsl_instance* raw = nullptr;
  ok(dpsl_ground_files(rules.c_str(), domain.c_str(), &raw));
  return std::unique_ptr<dpsl_instance, InstanceDeleter>(raw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DeepPSL: weighted rules as hinge-loss MRFs with a jointly trained attribute network"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dpsl_version()));
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)")->envname("DEEPPSL_THREADS");

  // ground
  auto* ground_cmd = app.add_subcommand("ground", "ground a rule program and write the potential dump");
  std::string rules_path, domain_path, dump_out, atoms_out;
  ground_cmd->add_option("--rules", rules_path, "rule file")->required();
  ground_cmd->add_option("--domain", domain_path, "domain file")->required();
  ground_cmd->add_option("--out", dump_out, "potential dump (default: stdout)");
  ground_cmd->add_option("--atoms", atoms_out, "atom index listing");

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "MAP inference on a grounded program");
  std::string x_text;
  ConfigOptions infer_cfg;
  infer_cmd->add_option("--rules", rules_path, "rule file")->required();
  infer_cmd->add_option("--domain", domain_path, "domain file")->required();
  infer_cmd->add_option("--x", x_text, "observed truths in x-index order, comma separated");
  infer_cfg.attach(infer_cmd, false);

  // train
  auto* train_cmd = app.add_subcommand("train", "train the attribute network");
  DatasetOptions train_data;
  ConfigOptions train_cfg;
  std::string model_out, metrics_out;
  bool two_stage = false;
  train_data.attach(train_cmd);
  train_cfg.attach(train_cmd, true);
  train_cmd->add_option("--model-out", model_out, "DPW1 checkpoint to write")->required();
  train_cmd->add_option("--metrics-out", metrics_out, "per-batch metrics CSV");
  train_cmd->add_flag("--two-stage", two_stage, "fit attributes by cross-entropy (ablation baseline)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "class-averaged accuracy on unseen classes");
  DatasetOptions eval_data;
  ConfigOptions eval_cfg;
  std::string model_path, report_out;
  bool on_train = false;
  eval_data.attach(eval_cmd);
  eval_cfg.attach(eval_cmd, false);
  eval_cmd->add_option("--model", model_path, "DPW1 checkpoint")->required();
  eval_cmd->add_option("--report-out", report_out, "JSON report path");
  eval_cmd->add_flag("--on-train", on_train, "score the train classes instead");

  // check
  auto* check_cmd = app.add_subcommand("check", "run randomized property suites");
  std::string mode = "all";
  std::uint64_t check_seed = 1;
  bool corrupt = false;
  check_cmd->add_option("--mode", mode, "gradients, oracle, convexity, surrogate or all")
      ->check(CLI::IsMember({"gradients", "oracle", "convexity", "surrogate", "all"}));
  check_cmd->add_option("--seed", check_seed, "random seed");
  check_cmd->add_flag("--corrupt-gradient", corrupt, "perturb analytic gradients (must fail)");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic zero-shot dataset");
  dpsl_synth_params synth{};
  dpsl_synth_defaults(&synth);
  std::string synth_out;
  bool no_span = false;
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--train-classes", synth.train_classes, "seen classes")->capture_default_str();
  synth_cmd->add_option("--test-classes", synth.test_classes, "unseen classes")->capture_default_str();
  synth_cmd->add_option("--attributes", synth.attributes, "attributes per class")->capture_default_str();
  synth_cmd->add_option("--feature-dim", synth.feature_dim, "feature width")->capture_default_str();
  synth_cmd->add_option("--samples", synth.samples_per_class, "samples per class")->capture_default_str();
  synth_cmd->add_option("--sigma", synth.noise_sigma, "feature noise standard deviation")->capture_default_str();
  synth_cmd->add_option("--min-hamming", synth.min_hamming, "minimum signature distance")->capture_default_str();
  synth_cmd->add_flag("--no-span", no_span, "draw unseen signatures freely instead of from seen-class analogies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  dpsl_set_threads(threads);
  try {
    if (*ground_cmd) {
      auto inst = ground(rules_path, domain_path);
      std::size_t rules = 0, potentials = 0, n_free = 0, n_obs = 0;
      ok(dpsl_instance_counts(inst.get(), &rules, &potentials, &n_free, &n_obs));
      char* raw = nullptr;
      ok(dpsl_instance_dump(inst.get(), &raw));
      OwnedString text(raw);
      if (dump_out.empty()) {
        std::cout << text.get();
      } else {
        write_file(dump_out, text.get());
      }
      if (!atoms_out.empty()) {
        ok(dpsl_instance_atoms(inst.get(), &raw));
        OwnedString atoms(raw);
        write_file(atoms_out, atoms.get());
      }
      // Counts go to stderr when stdout carries the dump.
      std::ostream& info = dump_out.empty() ? std::cerr : std::cout;
      info << rules << " ground rules\n"
           << potentials << " potentials, " << n_free << " free and " << n_obs << " observed atoms\n";
    } else if (*infer_cmd) {
      auto inst = ground(rules_path, domain_path);
      auto cfg = infer_cfg.build();
      std::size_t n_free = 0, n_obs = 0;
      ok(dpsl_instance_counts(inst.get(), nullptr, nullptr, &n_free, &n_obs));
      auto x = x_text.empty() ? std::vector<double>{} : parse_values(x_text);
      if (x.size() != n_obs) {
        throw Failure{DPSL_ERR_INPUT, "--x has " + std::to_string(x.size()) + " values but the program has " +
                                          std::to_string(n_obs) + " observed atoms"};
      }
      std::vector<double> y(n_free);
      int iterations = 0;
      ok(dpsl_instance_map(inst.get(), cfg.get(), x.data(), x.size(), y.data(), y.size(), &iterations));
      char* raw = nullptr;
      ok(dpsl_instance_atoms(inst.get(), &raw));
      OwnedString atoms(raw);
      std::istringstream lines(atoms.get());
      std::string line;
      while (std::getline(lines, line)) {
        if (line.rfind('y', 0) != 0) continue;
        const auto space = line.find(' ');
        const auto k = std::stoul(line.substr(1, space - 1));
        std::printf("%s = %.6f\n", line.substr(space + 1).c_str(), y[k]);
      }
      std::fprintf(stderr, "%d iterations\n", iterations);
    } else if (*train_cmd) {
      auto cfg = train_cfg.build();
      const auto paths = train_data.paths();
      dpsl_train_summary summary{};
      ok(dpsl_train(&paths, cfg.get(), two_stage ? 1 : 0, model_out.c_str(),
                    metrics_out.empty() ? nullptr : metrics_out.c_str(), &summary));
      std::printf("epochs %d%s, batches %zu\n", summary.epochs_run, summary.stopped_early ? " (stopped early)" : "",
                  summary.batches);
      std::printf("train %s: first epoch %.6g, final epoch %.6g\n", two_stage ? "BCE" : "L1", summary.first_epoch_l1,
                  summary.final_epoch_l1);
      std::printf("final delta %.6g\n", summary.final_delta);
    } else if (*eval_cmd) {
      auto cfg = eval_cfg.build();
      const auto paths = eval_data.paths();
      char* raw = nullptr;
      double average = 0.0;
      ok(dpsl_eval(model_path.c_str(), &paths, cfg.get(), on_train ? 1 : 0,
                   report_out.empty() ? nullptr : report_out.c_str(), &raw, &average));
      OwnedString json(raw);
      std::cout << json.get() << '\n';
      std::printf("class-averaged top-1 accuracy %.4f\n", average);
    } else if (*check_cmd) {
      std::vector<std::string> modes;
      if (mode == "all") {
        modes = {"gradients", "oracle", "convexity", "surrogate"};
      } else {
        modes = {mode};
      }
      bool all_passed = true;
      for (const auto& m : modes) {
        int passed = 0;
        char* raw = nullptr;
        ok(dpsl_check(m.c_str(), check_seed, corrupt ? 1 : 0, &passed, &raw));
        OwnedString report(raw);
        std::cout << report.get();
        all_passed = all_passed && passed;
      }
      std::cout << (all_passed ? "all checks passed\n" : "some checks FAILED\n");
      return all_passed ? 0 : 1;
    } else if (*synth_cmd) {
      synth.test_in_train_span = no_span ? 0 : 1;
      ok(dpsl_synth(&synth, synth_out.c_str()));
      std::printf("wrote synthetic dataset to %s\n", synth_out.c_str());
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return exit_code(f.status);
  }
  return 0;
}
