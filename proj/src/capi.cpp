// Copyright 2026 The DeepPSL Authors
// SPDX-License-Identifier: Apache-2.0

#include "deeppsl/deeppsl.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "deeppsl/checks.hpp"
#include "deeppsl/config.hpp"
#include "deeppsl/dataset_io.hpp"
#include "deeppsl/error.hpp"
#include "deeppsl/hlmrf.hpp"
#include "deeppsl/mlp.hpp"
#include "deeppsl/parallel.hpp"
#include "deeppsl/rules.hpp"
#include "deeppsl/trainer.hpp"
#include "deeppsl/zsl.hpp"
#include "json.hpp"

struct dpsl_config {
  deeppsl::RunConfig run;
};

struct dpsl_instance {
  deeppsl::Program program;
  deeppsl::Grounding grounding;
  deeppsl::HlmrfInstance instance;
};

struct dpsl_model {
  deeppsl::MlpParams params;
};

namespace {

thread_local std::string last_error;

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Fn>
dpsl_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return DPSL_OK;
  } catch (const ArgumentError& e) {
    last_error = e.what();
    return DPSL_ERR_ARGUMENT;
  } catch (const deeppsl::InputError& e) {
    last_error = e.what();
    return DPSL_ERR_INPUT;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return DPSL_ERR_INPUT;
  } catch (const deeppsl::NumericError& e) {
    last_error = e.what();
    return DPSL_ERR_NUMERIC;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DPSL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DPSL_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return DPSL_ERR_INTERNAL;
  }
}

template <typename T>
T& require(T* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " must not be null");
  return *p;
}

const char* require(const char* s, const char* what) {
  if (!s) throw ArgumentError(std::string(what) + " must not be null");
  return s;
}

char* copy_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const deeppsl::RunConfig& run_config(const dpsl_config* config) {
  static const deeppsl::RunConfig defaults;
  return config ? config->run : defaults;
}

deeppsl::ZslDataset load(const dpsl_dataset_paths* paths) {
  const auto& p = require(paths, "paths");
  deeppsl::io::DatasetPaths d;
  d.features = require(p.features, "paths.features");
  d.labels = require(p.labels, "paths.labels");
  d.attributes = require(p.attributes, "paths.attributes");
  if (p.classes) d.classes = p.classes;
  d.split = require(p.split, "paths.split");
  return deeppsl::io::load_dataset(d);
}

void write_metrics(const deeppsl::TrainHistory& history, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,batch,mean_l1,mean_iterations,delta\n";
  for (const auto& b : history.batches) {
    out << b.epoch << ',' << b.batch << ',' << b.mean_l1 << ',' << b.mean_iterations << ',';
    if (b.delta) out << *b.delta;
    out << '\n';
  }
  deeppsl::io::write_text(out.str(), path);
}

}  // namespace

extern "C" {

const char* dpsl_last_error(void) { return last_error.c_str(); }

const char* dpsl_version(void) { return "0.1.0"; }

void dpsl_string_free(char* s) { std::free(s); }

void dpsl_set_threads(unsigned count) { deeppsl::set_thread_count(count); }

dpsl_status dpsl_config_create(dpsl_config** out) {
  return guarded([&] { require(out, "out") = new dpsl_config(); });
}

void dpsl_config_destroy(dpsl_config* config) { delete config; }

dpsl_status dpsl_config_load(dpsl_config* config, const char* path) {
  return guarded([&] {
    auto& c = require(config, "config");
    const std::string file = require(path, "path");
    try {
      c.run.apply(deeppsl::io::read_text(file));
    } catch (const deeppsl::ParseError& e) {
      throw deeppsl::InputError(file + ": " + e.what());
    }
  });
}

dpsl_status dpsl_config_set(dpsl_config* config, const char* key, const char* value) {
  return guarded([&] { require(config, "config").run.set(require(key, "key"), require(value, "value")); });
}

dpsl_status dpsl_config_to_string(const dpsl_config* config, char** out) {
  return guarded([&] { require(out, "out") = copy_string(require(config, "config").run.to_text()); });
}

dpsl_status dpsl_ground_text(const char* rules, const char* domain, dpsl_instance** out) {
  return guarded([&] {
    auto& slot = require(out, "out");
    auto inst = std::make_unique<dpsl_instance>();
    inst->program = deeppsl::parse_program(require(rules, "rules"));
    const auto dom = deeppsl::parse_domain(require(domain, "domain"));
    inst->grounding = deeppsl::ground(inst->program, dom);
    inst->instance = deeppsl::build_instance(inst->program, inst->grounding);
    slot = inst.release();
  });
}

dpsl_status dpsl_ground_files(const char* rules_path, const char* domain_path, dpsl_instance** out) {
  return guarded([&] {
    auto& slot = require(out, "out");
    const std::string rp = require(rules_path, "rules_path");
    const std::string dp = require(domain_path, "domain_path");
    auto inst = std::make_unique<dpsl_instance>();
    deeppsl::Domain dom;
    // Prefix positions with the file they came from.
    try {
      inst->program = deeppsl::parse_program(deeppsl::io::read_text(rp));
    } catch (const deeppsl::ParseError& e) {
      throw deeppsl::InputError(rp + ": " + e.what());
    }
    try {
      dom = deeppsl::parse_domain(deeppsl::io::read_text(dp));
    } catch (const deeppsl::ParseError& e) {
      throw deeppsl::InputError(dp + ": " + e.what());
    }
    inst->grounding = deeppsl::ground(inst->program, dom);
    inst->instance = deeppsl::build_instance(inst->program, inst->grounding);
    slot = inst.release();
  });
}

void dpsl_instance_destroy(dpsl_instance* instance) { delete instance; }

dpsl_status dpsl_instance_counts(const dpsl_instance* instance, size_t* ground_rules, size_t* potentials,
                                 size_t* n_free, size_t* n_obs) {
  return guarded([&] {
    const auto& i = require(instance, "instance");
    if (ground_rules) *ground_rules = i.grounding.rules.size();
    if (potentials) *potentials = i.instance.potentials().size();
    if (n_free) *n_free = i.instance.n_free();
    if (n_obs) *n_obs = i.instance.n_obs();
  });
}

dpsl_status dpsl_instance_dump(const dpsl_instance* instance, char** out) {
  return guarded([&] { require(out, "out") = copy_string(deeppsl::dump(require(instance, "instance").instance)); });
}

dpsl_status dpsl_instance_atoms(const dpsl_instance* instance, char** out) {
  return guarded([&] {
    auto& slot = require(out, "out");
    const auto& i = require(instance, "instance");
    std::string text;
    for (std::size_t j = 0; j < i.grounding.observed.size(); ++j) {
      text += "x" + std::to_string(j) + " " + deeppsl::format_atom(i.program, i.grounding.observed.atom(j)) + "\n";
    }
    for (std::size_t k = 0; k < i.grounding.free.size(); ++k) {
      text += "y" + std::to_string(k) + " " + deeppsl::format_atom(i.program, i.grounding.free.atom(k)) + "\n";
    }
    slot = copy_string(text);
  });
}

dpsl_status dpsl_instance_energy(const dpsl_instance* instance, const double* x, size_t n_obs, const double* y,
                                 size_t n_free, double* energy) {
  return guarded([&] {
    const auto& i = require(instance, "instance").instance;
    auto& out = require(energy, "energy");
    if (n_obs != i.n_obs() || n_free != i.n_free()) throw ArgumentError("x or y length does not match the instance");
    if ((n_obs && !x) || !y) throw ArgumentError("x and y must not be null");
    out = deeppsl::energy(i, {x, n_obs}, {y, n_free});
  });
}

dpsl_status dpsl_instance_map(const dpsl_instance* instance, const dpsl_config* config, const double* x,
                              size_t n_obs, double* y, size_t n_free, int* iterations) {
  return guarded([&] {
    const auto& i = require(instance, "instance").instance;
    if (n_obs != i.n_obs() || n_free != i.n_free()) throw ArgumentError("x or y length does not match the instance");
    if ((n_obs && !x) || !y) throw ArgumentError("x and y must not be null");
    const auto result = deeppsl::map_infer(i, {x, n_obs}, run_config(config).eval_solver());
    std::copy(result.y.begin(), result.y.end(), y);
    if (iterations) *iterations = result.iterations;
  });
}

dpsl_status dpsl_model_init(size_t input_dim, size_t hidden, size_t output_dim, uint64_t seed, dpsl_model** out) {
  return guarded([&] {
    auto& slot = require(out, "out");
    if (!input_dim || !hidden || !output_dim) throw ArgumentError("network dimensions must be positive");
    slot = new dpsl_model{deeppsl::init_attribute_network(input_dim, hidden, output_dim, seed)};
  });
}

dpsl_status dpsl_model_load(const char* path, dpsl_model** out) {
  return guarded([&] {
    auto& slot = require(out, "out");
    slot = new dpsl_model{deeppsl::load_checkpoint(require(path, "path"))};
  });
}

dpsl_status dpsl_model_save(const dpsl_model* model, const char* path) {
  return guarded([&] { deeppsl::save_checkpoint(require(model, "model").params, require(path, "path")); });
}

void dpsl_model_destroy(dpsl_model* model) { delete model; }

dpsl_status dpsl_model_dims(const dpsl_model* model, size_t* input_dim, size_t* output_dim) {
  return guarded([&] {
    const auto& m = require(model, "model");
    if (input_dim) *input_dim = m.params.input_dim();
    if (output_dim) *output_dim = m.params.output_dim();
  });
}

dpsl_status dpsl_model_forward(const dpsl_model* model, const double* u, size_t input_dim, double* x,
                               size_t output_dim) {
  return guarded([&] {
    const auto& m = require(model, "model");
    if (!u || !x) throw ArgumentError("u and x must not be null");
    if (input_dim != m.params.input_dim() || output_dim != m.params.output_dim()) {
      throw ArgumentError("buffer lengths do not match the network");
    }
    const auto out = deeppsl::forward(m.params, {u, input_dim});
    std::copy(out.begin(), out.end(), x);
  });
}

dpsl_status dpsl_train(const dpsl_dataset_paths* paths, const dpsl_config* config, int two_stage,
                       const char* model_out, const char* metrics_out, dpsl_train_summary* summary) {
  return guarded([&] {
    const std::string model_path = require(model_out, "model_out");
    const auto& run = run_config(config);
    const auto data = load(paths);
    const auto samples = data.select(data.split.train);
    if (samples.empty()) throw deeppsl::InputError("no feature rows belong to the train classes");
    const auto cfg = run.train_config();
    auto init = deeppsl::init_attribute_network(data.feature_dim(), run.hidden_units, data.matrix.cols(), run.seed);

    deeppsl::TrainResult result;
    if (two_stage) {
      result = deeppsl::train_attribute_classifier(std::move(init), data.matrix, data.split.train, samples, cfg);
    } else {
      const auto tmpl = deeppsl::make_template(data.matrix, data.split.train, run.rule_weights);
      result = deeppsl::train(std::move(init), tmpl, samples, cfg);
    }
    deeppsl::save_checkpoint(result.params, model_path);
    if (metrics_out) write_metrics(result.history, metrics_out);
    if (summary) {
      const auto& h = result.history;
      summary->first_epoch_l1 = h.epoch_mean_l1.empty() ? 0.0 : h.epoch_mean_l1.front();
      summary->final_epoch_l1 = h.epoch_mean_l1.empty() ? 0.0 : h.epoch_mean_l1.back();
      summary->final_delta = h.epoch_delta.empty() ? 0.0 : h.epoch_delta.back();
      summary->epochs_run = static_cast<int>(h.epoch_mean_l1.size());
      summary->stopped_early = h.stopped_early ? 1 : 0;
      summary->batches = h.batches.size();
    }
  });
}

dpsl_status dpsl_eval(const char* model_path, const dpsl_dataset_paths* paths, const dpsl_config* config,
                      int on_train, const char* report_out, char** report_json, double* class_average) {
  return guarded([&] {
    const auto params = deeppsl::load_checkpoint(require(model_path, "model_path"));
    const auto& run = run_config(config);
    const auto data = load(paths);
    if (params.input_dim() != data.feature_dim()) {
      throw deeppsl::InputError("model expects " + std::to_string(params.input_dim()) +
                                " features but the dataset has " + std::to_string(data.feature_dim()));
    }
    if (params.output_dim() != data.matrix.cols()) {
      throw deeppsl::InputError("model emits " + std::to_string(params.output_dim()) +
                                " attributes but the matrix has " + std::to_string(data.matrix.cols()));
    }
    const auto& classes = on_train ? data.split.train : data.split.test;
    const auto samples = data.select(classes);
    const auto tmpl = deeppsl::make_template(data.matrix, classes, run.rule_weights);
    const auto report = deeppsl::evaluate_model(params, tmpl, classes, samples, run.eval_solver());
    const auto json = report.to_json();
    if (report_out) deeppsl::io::write_text(json + "\n", report_out);
    if (report_json) *report_json = copy_string(json);
    if (class_average) *class_average = report.class_average;
  });
}

void dpsl_synth_defaults(dpsl_synth_params* params) {
  if (!params) return;
  const deeppsl::SynthConfig d;
  *params = {d.seed,        d.train_classes,     d.test_classes, d.attributes,
             d.feature_dim, d.samples_per_class, d.noise_sigma,  d.min_hamming,
             d.test_in_train_span ? 1 : 0};
}

dpsl_status dpsl_synth(const dpsl_synth_params* params, const char* out_dir) {
  return guarded([&] {
    const auto& p = require(params, "params");
    const std::filesystem::path dir = require(out_dir, "out_dir");
    deeppsl::SynthConfig cfg;
    cfg.seed = p.seed;
    cfg.train_classes = p.train_classes;
    cfg.test_classes = p.test_classes;
    cfg.attributes = p.attributes;
    cfg.feature_dim = p.feature_dim;
    cfg.samples_per_class = p.samples_per_class;
    cfg.noise_sigma = p.noise_sigma;
    cfg.min_hamming = p.min_hamming;
    cfg.test_in_train_span = p.test_in_train_span != 0;
    const auto synth = deeppsl::synthesize(cfg);
    deeppsl::io::save_dataset(synth.data, dir);
    deeppsl::io::write_dpm1({cfg.feature_dim, cfg.attributes, synth.embedding}, dir / "embedding.dpm1");

    for (const auto& [name, classes] :
         {std::pair{"train", &synth.data.split.train}, std::pair{"test", &synth.data.split.test}}) {
      const auto zsl = deeppsl::build_rules(synth.data.matrix, *classes, deeppsl::WeightMode::Continuous);
      deeppsl::io::write_text(deeppsl::to_text(zsl.program), dir / (std::string("rules_") + name + ".txt"));
      deeppsl::io::write_text(deeppsl::to_text(zsl.domain), dir / (std::string("domain_") + name + ".txt"));
    }

    nlohmann::ordered_json manifest;
    manifest["generator"] = "deeppsl synth";
    manifest["seed"] = cfg.seed;
    manifest["train_classes"] = cfg.train_classes;
    manifest["test_classes"] = cfg.test_classes;
    manifest["attributes"] = cfg.attributes;
    manifest["feature_dim"] = cfg.feature_dim;
    manifest["samples_per_class"] = cfg.samples_per_class;
    manifest["noise_sigma"] = cfg.noise_sigma;
    manifest["noiseless"] = cfg.noise_sigma == 0.0;
    manifest["min_hamming"] = cfg.min_hamming;
    manifest["test_in_train_span"] = cfg.test_in_train_span;
    deeppsl::io::write_text(manifest.dump(2) + "\n", dir / "manifest.json");
  });
}

dpsl_status dpsl_check(const char* mode, uint64_t seed, int corrupt, int* passed, char** report) {
  return guarded([&] {
    deeppsl::CheckOptions options;
    options.seed = seed;
    options.corrupt_gradients = corrupt != 0;
    const auto r = deeppsl::run_check(require(mode, "mode"), options);
    if (passed) *passed = r.passed() ? 1 : 0;
    if (report) *report = copy_string(r.to_text());
  });
}

}  // extern "C"
