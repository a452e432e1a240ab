#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "torusrg/torusrg.h"

namespace {

int report(trg_status s) {
  std::fprintf(stderr, "torusrg: %s: %s\n", trg_status_name(s), trg_last_error());
  return s == TRG_CONFIG_INVALID ? 2 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Renormalization experiments for linear flows on the two-torus"};
  std::string config_path;
  std::map<std::string, std::string> flags;
  std::vector<std::string> sets;
  bool print_manifest = false;

  app.add_option("--config", config_path, "flat key=value file")->check(CLI::ExistingFile);
  const std::vector<std::pair<std::string, std::string>> named = {
      {"scenario", "cf | project | scale | eliminate | orbit | spectrum | decay-probe | sweep"},
      {"slope", "golden | sqrt2 | silver | e | p/q | u,v,d,w | decimal[@bits]"},
      {"sigma", "resonance cone width"},
      {"rho", "analyticity width of the input"},
      {"rho_prime", "analyticity width of the output"},
      {"truncation", "Fourier truncation |k|_1 <= N"},
      {"steps", "renormalization steps"},
      {"perturb", "none | resonant:amp | unstable:amp | mixed:amp | random:amp"},
      {"seed", "RNG seed, mandatory for random perturbations"},
      {"out", "output directory"},
  };
  for (const auto& [key, help] : named) {
    std::string flag = "--" + key;
    for (auto& c : flag) if (c == '_') c = '-';
    app.add_option_function<std::string>(flag, [&flags, key = key](const std::string& v) { flags[key] = v; }, help);
  }
  app.add_option("--set", sets, "any other key=value, repeatable");
  app.add_flag("--print-manifest", print_manifest, "write the JSON manifest to stdout");
  CLI11_PARSE(app, argc, argv);

  trg_config* cfg = nullptr;
  trg_status s = trg_config_create(&cfg);
  if (s != TRG_OK) return report(s);
  if (!config_path.empty() && (s = trg_config_load(cfg, config_path.c_str())) != TRG_OK) {
    trg_config_destroy(cfg);
    return report(s);
  }
  for (const auto& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "torusrg: --set expects key=value, got '%s'\n", kv.c_str());
      trg_config_destroy(cfg);
      return 2;
    }
    if ((s = trg_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str())) != TRG_OK) {
      trg_config_destroy(cfg);
      return report(s);
    }
  }
  for (const auto& [k, v] : flags) {
    if ((s = trg_config_set(cfg, k.c_str(), v.c_str())) != TRG_OK) {
      trg_config_destroy(cfg);
      return report(s);
    }
  }

  trg_result* result = nullptr;
  s = trg_run_scenario(cfg, &result);
  trg_config_destroy(cfg);
  if (s != TRG_OK) return report(s);

  int code = trg_result_exit_code(result);
  if (print_manifest) {
    std::fputs(trg_result_manifest(result), stdout);
  } else {
    for (size_t i = 0; i < trg_result_file_count(result); ++i) {
      std::printf("wrote %s\n", trg_result_file(result, i));
    }
  }
  if (code != 0) std::fprintf(stderr, "torusrg: exit %d: %s\n", code, trg_result_error(result));
  trg_result_destroy(result);
  return code;
}
