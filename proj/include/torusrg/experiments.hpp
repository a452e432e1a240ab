#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "torusrg/fourier_field.hpp"

namespace torusrg {

// Flat key=value configuration. Lines starting with '#' are comments.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  // Entries of `overrides` replace ours.
  void merge(const Config& overrides);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Fills in the defaults of the named scenario and validates every value.
  // ConfigInvalid on unknown keys, bad values or a missing seed.
  Config resolved() const;

  // Sorted "key=value\n" lines.
  std::string canonical() const;
  // FNV-1a over canonical().
  std::uint64_t hash() const;
  std::string hash_hex() const;

 private:
  std::map<std::string, std::string> entries_;
};

// Perturbation X_0 - omega_0 for omega_0 = (1, alpha):
//   none
//   resonant:amp  random modes in I+_sigma(omega_0), zero average, real, |f|_rho' = amp
//   unstable:amp  amp * Omega_0
//   mixed:amp     sum of the two above
//   random:amp    random modes of every direction, zero average, real, |f|_rho' = amp
// Mode amplitudes are Gaussian times exp(-decay |k|).
FourierVectorField make_perturbation(const std::string& spec, double alpha, double sigma,
                                     int truncation, double rho_prime, std::uint64_t seed,
                                     double decay = 1.5);

// True for specs that consume random numbers.
bool perturbation_is_random(const std::string& spec);

enum ExitStatus { kExitOk = 0, kExitCertificate = 1, kExitConfig = 2, kExitModule = 3 };

struct ScenarioResult {
  int exit_code = kExitOk;
  std::string scenario;
  std::string hash;
  std::vector<std::string> files;  // written, relative to the output directory
  std::string error;               // empty on success
  std::string manifest;            // JSON text, also written as manifest.json
};

// Runs cf | project | scale | eliminate | orbit | spectrum | decay-probe | sweep
// and writes CSV tables plus manifest.json into the "out" directory. Errors are
// reported through the exit code; only I/O failures on the output directory throw.
ScenarioResult run_scenario(const Config& config);

}  // namespace torusrg
