/* Copyright 2026 The DeepPSL Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to libdeeppsl.
 *
 * Every function that can fail returns a dpsl_status. On failure a message
 * is available from dpsl_last_error() on the same thread until the next
 * call into the library. Strings returned through `char**` out-parameters
 * are owned by the caller and released with dpsl_string_free(). Handles are
 * released with their matching *_destroy function; passing NULL to a
 * destroy function is a no-op.
 */

#ifndef DEEPPSL_DEEPPSL_H
#define DEEPPSL_DEEPPSL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DEEPPSL_BUILDING_LIBRARY)
#    define DPSL_API __declspec(dllexport)
#  else
#    define DPSL_API __declspec(dllimport)
#  endif
#else
#  define DPSL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dpsl_status {
  DPSL_OK = 0,
  DPSL_ERR_ARGUMENT = 1, /* null pointer, wrong buffer length */
  DPSL_ERR_INPUT = 2,    /* unreadable or inconsistent input */
  DPSL_ERR_NUMERIC = 3,  /* non-finite energy or loss */
  DPSL_ERR_INTERNAL = 4
} dpsl_status;

DPSL_API const char* dpsl_last_error(void);
DPSL_API const char* dpsl_version(void);
DPSL_API void dpsl_string_free(char* s);

/* Caps worker threads for batched inference; 0 selects the hardware count. */
DPSL_API void dpsl_set_threads(unsigned count);

/* ---- run configuration ------------------------------------------------ */

typedef struct dpsl_config dpsl_config;

DPSL_API dpsl_status dpsl_config_create(dpsl_config** out);
DPSL_API void dpsl_config_destroy(dpsl_config* config);
/* Applies a `key = value` file on top of the current values. */
DPSL_API dpsl_status dpsl_config_load(dpsl_config* config, const char* path);
DPSL_API dpsl_status dpsl_config_set(dpsl_config* config, const char* key, const char* value);
DPSL_API dpsl_status dpsl_config_to_string(const dpsl_config* config, char** out);

/* ---- grounded programs ------------------------------------------------ */

typedef struct dpsl_instance dpsl_instance;

DPSL_API dpsl_status dpsl_ground_text(const char* rules, const char* domain, dpsl_instance** out);
DPSL_API dpsl_status dpsl_ground_files(const char* rules_path, const char* domain_path, dpsl_instance** out);
DPSL_API void dpsl_instance_destroy(dpsl_instance* instance);

/* Any out pointer may be NULL. */
DPSL_API dpsl_status dpsl_instance_counts(const dpsl_instance* instance, size_t* ground_rules, size_t* potentials,
                                          size_t* n_free, size_t* n_obs);
/* One potential per line: `w p : offset [+|- c*y<i>]* [+|- c*x<j>]*`. */
DPSL_API dpsl_status dpsl_instance_dump(const dpsl_instance* instance, char** out);
/* One line per atom: `x<j> Atom` or `y<i> Atom`. */
DPSL_API dpsl_status dpsl_instance_atoms(const dpsl_instance* instance, char** out);
DPSL_API dpsl_status dpsl_instance_energy(const dpsl_instance* instance, const double* x, size_t n_obs,
                                          const double* y, size_t n_free, double* energy);
/* MAP state with the evaluation solver settings of `config` (NULL for
 * defaults). `y` receives n_free clamped values. */
DPSL_API dpsl_status dpsl_instance_map(const dpsl_instance* instance, const dpsl_config* config, const double* x,
                                       size_t n_obs, double* y, size_t n_free, int* iterations);

/* ---- attribute network ------------------------------------------------ */

typedef struct dpsl_model dpsl_model;

/* input -> ELU hidden -> sigmoid output, deterministic in `seed`. */
DPSL_API dpsl_status dpsl_model_init(size_t input_dim, size_t hidden, size_t output_dim, uint64_t seed,
                                     dpsl_model** out);
DPSL_API dpsl_status dpsl_model_load(const char* path, dpsl_model** out);
DPSL_API dpsl_status dpsl_model_save(const dpsl_model* model, const char* path);
DPSL_API void dpsl_model_destroy(dpsl_model* model);
DPSL_API dpsl_status dpsl_model_dims(const dpsl_model* model, size_t* input_dim, size_t* output_dim);
DPSL_API dpsl_status dpsl_model_forward(const dpsl_model* model, const double* u, size_t input_dim, double* x,
                                        size_t output_dim);

/* ---- zero-shot workflows ---------------------------------------------- */

typedef struct dpsl_dataset_paths {
  const char* features;   /* DPM1, one row per image */
  const char* labels;     /* one class name per feature row */
  const char* attributes; /* DPM1 or CSV class-attribute matrix */
  const char* classes;    /* optional; defaults to classes.txt beside a DPM1 matrix */
  const char* split;      /* `train:` / `test:` sections */
} dpsl_dataset_paths;

typedef struct dpsl_train_summary {
  double first_epoch_l1; /* mean train hinge rank loss (BCE for two-stage) */
  double final_epoch_l1;
  double final_delta;    /* parameter change over the last epoch */
  int epochs_run;
  int stopped_early;
  size_t batches;
} dpsl_train_summary;

/* Trains on the split's train classes and writes a DPW1 checkpoint. With
 * `two_stage` set, the network is fitted to binarized class signatures by
 * cross-entropy instead of through inference. `metrics_out` (optional)
 * receives CSV rows epoch,batch,mean_l1,mean_iterations,delta. */
DPSL_API dpsl_status dpsl_train(const dpsl_dataset_paths* paths, const dpsl_config* config, int two_stage,
                                const char* model_out, const char* metrics_out, dpsl_train_summary* summary);

/* Scores `model` on the split's test classes (or train classes when
 * `on_train` is set). The JSON report is returned through `report_json`
 * (optional) and written to `report_out` (optional). */
DPSL_API dpsl_status dpsl_eval(const char* model_path, const dpsl_dataset_paths* paths, const dpsl_config* config,
                               int on_train, const char* report_out, char** report_json, double* class_average);

typedef struct dpsl_synth_params {
  uint64_t seed;
  size_t train_classes;
  size_t test_classes;
  size_t attributes;
  size_t feature_dim;
  size_t samples_per_class;
  double noise_sigma;
  size_t min_hamming;
  int test_in_train_span;
} dpsl_synth_params;

DPSL_API void dpsl_synth_defaults(dpsl_synth_params* params);

/* Writes features.dpm1, labels.txt, attributes.dpm1, attributes.csv,
 * classes.txt, split.txt, rules_{train,test}.txt, domain_{train,test}.txt,
 * embedding.dpm1 and manifest.json into `out_dir`. */
DPSL_API dpsl_status dpsl_synth(const dpsl_synth_params* params, const char* out_dir);

/* Runs a property suite: "gradients", "oracle", "convexity" or "surrogate".
 * `corrupt` perturbs analytic gradients so the suite must fail. */
DPSL_API dpsl_status dpsl_check(const char* mode, uint64_t seed, int corrupt, int* passed, char** report);

#ifdef __cplusplus
}
#endif

#endif /* DEEPPSL_DEEPPSL_H */
