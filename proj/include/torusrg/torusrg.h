#ifndef TORUSRG_H
#define TORUSRG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TRG_API __declspec(dllexport)
#else
#define TRG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum trg_status {
  TRG_OK = 0,
  TRG_INVALID_ARGUMENT,
  TRG_RATIONAL_EXHAUSTED,
  TRG_PRECISION_EXHAUSTED,
  TRG_ZERO_INPUT,
  TRG_INDEX_OUT_OF_RANGE,
  TRG_POLE_AT_INPUT,
  TRG_CONE_VIOLATION,
  TRG_DOMAIN_ERROR,
  TRG_SINGULAR_JACOBIAN,
  TRG_OUTSIDE_BALL,
  TRG_NO_CONVERGENCE,
  TRG_DOMAIN_EXCEEDED,
  TRG_ZERO_SLOPE,
  TRG_INCONCLUSIVE,
  TRG_CONFIG_INVALID,
  TRG_IO,
  TRG_CERTIFICATE_FAILED,
  TRG_INTERNAL
} trg_status;

typedef struct trg_config trg_config;
typedef struct trg_result trg_result;
typedef struct trg_cf trg_cf;
typedef struct trg_field trg_field;

TRG_API const char* trg_version(void);
TRG_API const char* trg_status_name(trg_status status);
/* Message of the last failing call on this thread, "" if none. */
TRG_API const char* trg_last_error(void);

/* Flat key=value configuration. parse and load merge into the existing entries. */
TRG_API trg_status trg_config_create(trg_config** out);
TRG_API void trg_config_destroy(trg_config* config);
TRG_API trg_status trg_config_set(trg_config* config, const char* key, const char* value);
TRG_API trg_status trg_config_parse(trg_config* config, const char* text);
TRG_API trg_status trg_config_load(trg_config* config, const char* path);
/* Defaults filled in and validated; the caller owns *out. */
TRG_API trg_status trg_config_resolve(const trg_config* config, trg_config** out);
/* *value stays valid until the config is modified or destroyed. */
TRG_API trg_status trg_config_get(const trg_config* config, const char* key, const char** value);
TRG_API trg_status trg_config_hash(const trg_config* config, uint64_t* out);

/* Runs the configured scenario and writes its artifacts. Returns TRG_OK
   whenever the run completed; scenario failures are in the exit code. */
TRG_API trg_status trg_run_scenario(const trg_config* config, trg_result** out);
/* 0 ok, 1 certificate failed, 2 invalid config, 3 module error. */
TRG_API int trg_result_exit_code(const trg_result* result);
TRG_API const char* trg_result_error(const trg_result* result);
TRG_API const char* trg_result_manifest(const trg_result* result);
TRG_API size_t trg_result_file_count(const trg_result* result);
TRG_API const char* trg_result_file(const trg_result* result, size_t index);
TRG_API void trg_result_destroy(trg_result* result);

/* Slope syntax: golden | sqrt2 | silver | e | p/q | u,v,d,w | decimal[@bits]. */
TRG_API trg_status trg_cf_expand(const char* slope, size_t n_terms, unsigned long precision_bits,
                                 trg_cf** out);
TRG_API size_t trg_cf_size(const trg_cf* cf);
TRG_API trg_status trg_cf_coefficient(const trg_cf* cf, size_t n, long* out);
TRG_API trg_status trg_cf_beta(const trg_cf* cf, size_t n, double* out);
/* 1 and the period data when the expansion is eventually periodic, else 0. */
TRG_API int trg_cf_period(const trg_cf* cf, size_t* start, size_t* length);
TRG_API void trg_cf_destroy(trg_cf* cf);

TRG_API trg_status trg_field_from_json(const char* json, trg_field** out);
/* See the perturb key: none, resonant:amp, unstable:amp, mixed:amp, random:amp. */
TRG_API trg_status trg_field_perturbation(const char* spec, double alpha, double sigma,
                                          int truncation, double rho_prime, uint64_t seed,
                                          trg_field** out);
/* *out is released with trg_string_free. */
TRG_API trg_status trg_field_to_json(const trg_field* field, char** out);
TRG_API trg_status trg_field_norm(const trg_field* field, double r, double* out);
TRG_API void trg_field_destroy(trg_field* field);

TRG_API void trg_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
