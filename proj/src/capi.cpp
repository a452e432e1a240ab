#include "torusrg/torusrg.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "torusrg/error.hpp"
#include "torusrg/experiments.hpp"
#include "torusrg/fourier_field.hpp"
#include "torusrg/number_theory.hpp"

struct trg_config {
  torusrg::Config config;
};

struct trg_result {
  torusrg::ScenarioResult result;
};

struct trg_cf {
  torusrg::CFExpansion cf;
};

struct trg_field {
  torusrg::FourierVectorField field;
};

namespace {

thread_local std::string last_error;

trg_status to_status(torusrg::ErrorCode code) { return static_cast<trg_status>(code); }

trg_status set_error(trg_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <class F>
trg_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return TRG_OK;
  } catch (const torusrg::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(TRG_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(TRG_INTERNAL, e.what());
  }
}

bool null_arg(const void* p, const char* name, trg_status* status) {
  if (p) return false;
  *status = set_error(TRG_INVALID_ARGUMENT, std::string(name) + " is null");
  return true;
}

}  // namespace

extern "C" {

const char* trg_version(void) { return "0.1.0"; }

const char* trg_status_name(trg_status status) {
  if (status == TRG_OK) return "Ok";
  if (status < TRG_INVALID_ARGUMENT || status > TRG_INTERNAL) return "Unknown";
  return torusrg::error_name(static_cast<torusrg::ErrorCode>(status));
}

const char* trg_last_error(void) { return last_error.c_str(); }

trg_status trg_config_create(trg_config** out) {
  trg_status s;
  if (null_arg(out, "out", &s)) return s;
  return guarded([&] { *out = new trg_config{}; });
}

void trg_config_destroy(trg_config* config) { delete config; }

trg_status trg_config_set(trg_config* config, const char* key, const char* value) {
  trg_status s;
  if (null_arg(config, "config", &s) || null_arg(key, "key", &s) || null_arg(value, "value", &s)) {
    return s;
  }
  return guarded([&] { config->config.set(key, value); });
}

trg_status trg_config_parse(trg_config* config, const char* text) {
  trg_status s;
  if (null_arg(config, "config", &s) || null_arg(text, "text", &s)) return s;
  return guarded([&] { config->config.merge(torusrg::Config::parse(text)); });
}

trg_status trg_config_load(trg_config* config, const char* path) {
  trg_status s;
  if (null_arg(config, "config", &s) || null_arg(path, "path", &s)) return s;
  return guarded([&] { config->config.merge(torusrg::Config::load(path)); });
}

trg_status trg_config_resolve(const trg_config* config, trg_config** out) {
  trg_status s;
  if (null_arg(config, "config", &s) || null_arg(out, "out", &s)) return s;
  return guarded([&] { *out = new trg_config{config->config.resolved()}; });
}

trg_status trg_config_get(const trg_config* config, const char* key, const char** value) {
  trg_status s;
  if (null_arg(config, "config", &s) || null_arg(key, "key", &s) || null_arg(value, "value", &s)) {
    return s;
  }
  return guarded([&] { *value = config->config.get(key).c_str(); });
}

trg_status trg_config_hash(const trg_config* config, uint64_t* out) {
  trg_status s;
  if (null_arg(config, "config", &s) || null_arg(out, "out", &s)) return s;
  return guarded([&] { *out = config->config.hash(); });
}

trg_status trg_run_scenario(const trg_config* config, trg_result** out) {
  trg_status s;
  if (null_arg(config, "config", &s) || null_arg(out, "out", &s)) return s;
  return guarded([&] { *out = new trg_result{torusrg::run_scenario(config->config)}; });
}

int trg_result_exit_code(const trg_result* result) {
  return result ? result->result.exit_code : torusrg::kExitModule;
}

const char* trg_result_error(const trg_result* result) {
  return result ? result->result.error.c_str() : "";
}

const char* trg_result_manifest(const trg_result* result) {
  return result ? result->result.manifest.c_str() : "";
}

size_t trg_result_file_count(const trg_result* result) {
  return result ? result->result.files.size() : 0;
}

const char* trg_result_file(const trg_result* result, size_t index) {
  if (!result || index >= result->result.files.size()) return nullptr;
  return result->result.files[index].c_str();
}

void trg_result_destroy(trg_result* result) { delete result; }

trg_status trg_cf_expand(const char* slope, size_t n_terms, unsigned long precision_bits,
                         trg_cf** out) {
  trg_status s;
  if (null_arg(slope, "slope", &s) || null_arg(out, "out", &s)) return s;
  return guarded([&] {
    auto bits = static_cast<mpfr_prec_t>(precision_bits ? precision_bits
                                                        : torusrg::BigReal::kDefaultPrecision);
    torusrg::Slope alpha = torusrg::Slope::parse(slope, bits);
    *out = new trg_cf{torusrg::cf_expand(alpha, n_terms, bits)};
  });
}

size_t trg_cf_size(const trg_cf* cf) { return cf ? cf->cf.size() : 0; }

trg_status trg_cf_coefficient(const trg_cf* cf, size_t n, long* out) {
  trg_status s;
  if (null_arg(cf, "cf", &s) || null_arg(out, "out", &s)) return s;
  return guarded([&] {
    const mpz_class& a = cf->cf.a(n);
    if (!a.fits_slong_p()) torusrg::fail(torusrg::ErrorCode::InvalidArgument, "coefficient overflows long");
    *out = a.get_si();
  });
}

trg_status trg_cf_beta(const trg_cf* cf, size_t n, double* out) {
  trg_status s;
  if (null_arg(cf, "cf", &s) || null_arg(out, "out", &s)) return s;
  return guarded([&] { *out = cf->cf.beta(static_cast<long>(n)).to_double(); });
}

int trg_cf_period(const trg_cf* cf, size_t* start, size_t* length) {
  if (!cf || !cf->cf.period()) return 0;
  if (start) *start = cf->cf.period()->start;
  if (length) *length = cf->cf.period()->length;
  return 1;
}

void trg_cf_destroy(trg_cf* cf) { delete cf; }

trg_status trg_field_from_json(const char* json, trg_field** out) {
  trg_status s;
  if (null_arg(json, "json", &s) || null_arg(out, "out", &s)) return s;
  return guarded([&] { *out = new trg_field{torusrg::FourierVectorField::from_json(json)}; });
}

trg_status trg_field_perturbation(const char* spec, double alpha, double sigma, int truncation,
                                  double rho_prime, uint64_t seed, trg_field** out) {
  trg_status s;
  if (null_arg(spec, "spec", &s) || null_arg(out, "out", &s)) return s;
  return guarded([&] {
    *out = new trg_field{
        torusrg::make_perturbation(spec, alpha, sigma, truncation, rho_prime, seed)};
  });
}

trg_status trg_field_to_json(const trg_field* field, char** out) {
  trg_status s;
  if (null_arg(field, "field", &s) || null_arg(out, "out", &s)) return s;
  return guarded([&] {
    std::string text = field->field.to_json();
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

trg_status trg_field_norm(const trg_field* field, double r, double* out) {
  trg_status s;
  if (null_arg(field, "field", &s) || null_arg(out, "out", &s)) return s;
  return guarded([&] { *out = torusrg::norm_r(field->field, r); });
}

void trg_field_destroy(trg_field* field) { delete field; }

void trg_string_free(char* s) { std::free(s); }

}  // extern "C"
