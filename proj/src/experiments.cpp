#include "torusrg/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <atomic>
#include <future>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "torusrg/error.hpp"
#include "torusrg/number_theory.hpp"
#include "torusrg/renorm_driver.hpp"
#include "torusrg/scaling_step.hpp"

namespace torusrg {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

[[noreturn]] void invalid(const std::string& message) { fail(ErrorCode::ConfigInvalid, message); }

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    invalid(key + ": not a number: '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x)) invalid(key + ": not a finite number: '" + v + "'");
  return x;
}

long parse_long(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long x = 0;
  try {
    x = std::stol(v, &used);
  } catch (const std::exception&) {
    invalid(key + ": not an integer: '" + v + "'");
  }
  if (used != v.size()) invalid(key + ": not an integer: '" + v + "'");
  return x;
}

std::uint64_t parse_seed(const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    invalid("seed: expected a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    invalid("seed: out of range: '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  invalid(key + ": expected true or false, got '" + v + "'");
}

enum class Kind { Double, Positive, Int, Bool, Text, Seed };

const std::map<std::string, Kind>& known_keys() {
  static const std::map<std::string, Kind> keys = {
      {"scenario", Kind::Text},       {"slope", Kind::Text},
      {"precision", Kind::Int},       {"out", Kind::Text},
      {"sigma", Kind::Positive},      {"rho", Kind::Positive},
      {"rho_prime", Kind::Positive},  {"kappa", Kind::Double},
      {"truncation", Kind::Int},      {"n", Kind::Int},
      {"order", Kind::Double},        {"agreement_tol", Kind::Positive},
      {"perturb", Kind::Text},        {"seed", Kind::Seed},
      {"decay", Kind::Positive},      {"k_max", Kind::Int},
      {"trials", Kind::Int},          {"tol", Kind::Positive},
      {"relative_tol", Kind::Positive}, {"max_iter", Kind::Int},
      {"steps", Kind::Int},           {"c_prime", Kind::Positive},
      {"stable_manifold", Kind::Text}, {"shooting_passes", Kind::Int},
      {"shooting_tol", Kind::Positive},
      {"check_domain", Kind::Bool},   {"expect", Kind::Text},
      {"sweep", Kind::Text},          {"sweep_scenario", Kind::Text},
      {"jobs", Kind::Int},
  };
  return keys;
}

// Keys that do not change results; kept out of the hash and the CSV header.
bool is_run_local(const std::string& key) { return key == "out" || key == "jobs"; }

const std::map<std::string, std::string> kCommon = {
    {"slope", "golden"}, {"precision", "256"}, {"out", "."},
};
const std::map<std::string, std::string> kModel = {
    {"sigma", "0.1"}, {"rho", "1"}, {"rho_prime", "0.9"}, {"kappa", "0"}, {"truncation", "32"},
};

std::map<std::string, std::string> defaults_for(const std::string& scenario) {
  std::map<std::string, std::string> d = kCommon;
  auto add = [&](const std::map<std::string, std::string>& m) {
    for (const auto& [k, v] : m) d[k] = v;
  };
  if (scenario == "cf") {
    add({{"n", "30"}, {"order", "0"}, {"agreement_tol", "1e-30"}});
  } else if (scenario == "project") {
    add(kModel);
    add({{"perturb", "random:1"}, {"decay", "1.5"}, {"k_max", "50"}});
  } else if (scenario == "scale") {
    add(kModel);
    add({{"trials", "100"}, {"decay", "1.5"}});
  } else if (scenario == "eliminate") {
    add(kModel);
    add({{"perturb", "random:1e-3"}, {"decay", "1.5"}, {"tol", "1e-12"}, {"max_iter", "12"}});
  } else if (scenario == "orbit") {
    add(kModel);
    add({{"perturb", "resonant:1e-3"}, {"decay", "1.5"}, {"steps", "8"}, {"c_prime", "0.01"},
         {"tol", "1e-12"}, {"relative_tol", "1e-10"}, {"max_iter", "12"},
         {"stable_manifold", "auto"}, {"shooting_passes", "16"}, {"shooting_tol", "1e-6"},
         {"check_domain", "true"},
         {"expect", "none"}});
  } else if (scenario == "spectrum") {
    add({{"steps", "8"}});
  } else if (scenario == "decay-probe") {
    add(kModel);
    add({{"truncation", "150"}, {"n", "6"}, {"order", "0"}});
  } else if (scenario == "sweep") {
    d = {{"out", "."}, {"jobs", "0"}};
  } else {
    invalid("unknown scenario '" + scenario +
            "' (cf, project, scale, eliminate, orbit, spectrum, decay-probe, sweep)");
  }
  return d;
}

struct PerturbSpec {
  std::string kind;
  double amp = 0;
};

PerturbSpec parse_perturb(const std::string& spec) {
  if (spec == "none") return {"none", 0};
  auto colon = spec.find(':');
  if (colon == std::string::npos) invalid("perturb: expected kind:amplitude, got '" + spec + "'");
  PerturbSpec p{spec.substr(0, colon), parse_double("perturb", spec.substr(colon + 1))};
  if (p.kind != "resonant" && p.kind != "unstable" && p.kind != "mixed" && p.kind != "random") {
    invalid("perturb: unknown kind '" + p.kind + "' (none, resonant, unstable, mixed, random)");
  }
  if (p.amp < 0) invalid("perturb: amplitude must be non-negative");
  return p;
}

bool uses_randomness(const std::string& scenario, const std::map<std::string, std::string>& e) {
  if (scenario == "scale") return true;
  auto it = e.find("perturb");
  if (scenario == "project" || scenario == "eliminate" || scenario == "orbit") {
    return it != e.end() && perturbation_is_random(it->second);
  }
  return false;
}

void validate_value(const std::string& key, const std::string& value) {
  auto it = known_keys().find(key);
  if (it == known_keys().end()) invalid("unknown key '" + key + "'");
  switch (it->second) {
    case Kind::Double:
      parse_double(key, value);
      break;
    case Kind::Positive:
      if (parse_double(key, value) <= 0) invalid(key + ": must be positive");
      break;
    case Kind::Int:
      parse_long(key, value);
      break;
    case Kind::Bool:
      parse_bool(key, value);
      break;
    case Kind::Seed:
      parse_seed(value);
      break;
    case Kind::Text:
      break;
  }
}

// Cartesian product of "key=v1|v2;key2=w1|w2".
std::vector<std::vector<std::pair<std::string, std::string>>> expand_sweep(const std::string& text) {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& group : split(text, ';')) {
    if (group.empty()) continue;
    auto eq = group.find('=');
    if (eq == std::string::npos) invalid("sweep: expected key=v1|v2, got '" + group + "'");
    std::string key = trim(group.substr(0, eq));
    if (key == "scenario" || key == "sweep" || key == "sweep_scenario" || is_run_local(key)) {
      invalid("sweep: key '" + key + "' cannot be swept");
    }
    std::vector<std::string> values = split(group.substr(eq + 1), '|');
    if (values.empty()) invalid("sweep: no values for '" + key + "'");
    axes.push_back({key, values});
  }
  if (axes.empty()) invalid("sweep: nothing to sweep");
  std::vector<std::vector<std::pair<std::string, std::string>>> out{{}};
  for (const auto& [key, values] : axes) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& partial : out) {
      for (const auto& v : values) {
        auto p = partial;
        p.push_back({key, v});
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

using Row = std::vector<std::string>;

// One scenario execution.
class Run {
 public:
  explicit Run(Config cfg) : cfg_(std::move(cfg)), out_(cfg_.get("out")) {}

  const Config& cfg() const { return cfg_; }
  const std::string& get(const std::string& k) const { return cfg_.get(k); }
  double num(const std::string& k) const { return parse_double(k, get(k)); }
  long integer(const std::string& k) const { return parse_long(k, get(k)); }
  bool flag(const std::string& k) const { return parse_bool(k, get(k)); }
  std::uint64_t seed() const { return parse_seed(get("seed")); }
  mpfr_prec_t precision() const { return static_cast<mpfr_prec_t>(integer("precision")); }

  void check(const std::string& name, bool ok) {
    checks_[name] = ok;
    pass_ = pass_ && ok;
  }
  json& summary() { return summary_; }

  void write_csv(const std::string& name, const Row& columns, const std::vector<Row>& rows) {
    std::ostringstream s;
    for (const auto& [k, v] : cfg_.entries()) {
      if (!is_run_local(k)) s << "# " << k << '=' << v << '\n';
    }
    s << "# config_hash=" << cfg_.hash_hex() << '\n';
    auto line = [&](const Row& r) {
      for (std::size_t i = 0; i < r.size(); ++i) s << (i ? "," : "") << r[i];
      s << '\n';
    };
    line(columns);
    for (const auto& r : rows) line(r);
    write_file(name, s.str());
  }

  void write_file(const std::string& name, const std::string& text) {
    std::ofstream f(out_ / name, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) fail(ErrorCode::Io, "cannot write " + (out_ / name).string());
    files_.push_back(name);
  }

  ScenarioResult finish(int exit_code, const std::string& error_name, const std::string& error) {
    ScenarioResult r;
    if (exit_code == kExitOk && !pass_) exit_code = kExitCertificate;
    r.exit_code = exit_code;
    r.scenario = cfg_.has("scenario") ? cfg_.get("scenario") : "";
    r.hash = cfg_.hash_hex();
    r.error = error;
    json m;
    json c = json::object();
    for (const auto& [k, v] : cfg_.entries()) {
      if (!is_run_local(k)) c[k] = v;
    }
    m["scenario"] = r.scenario;
    m["config"] = c;
    m["config_hash"] = r.hash;
    m["exit_code"] = exit_code;
    static const char* names[] = {"ok", "certificate_failed", "config_invalid", "module_error"};
    m["status"] = names[exit_code];
    m["error"] = error.empty() ? json(nullptr) : json{{"code", error_name}, {"message", error}};
    m["checks"] = checks_;
    m["summary"] = summary_;
    std::vector<std::string> listed = files_;
    listed.push_back("manifest.json");
    m["files"] = listed;
    r.manifest = m.dump(2) + "\n";
    write_file("manifest.json", r.manifest);
    r.files = files_;
    return r;
  }

  void prepare_output() {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec || !fs::is_directory(out_)) {
      fail(ErrorCode::Io, "cannot create output directory " + out_.string());
    }
  }

 private:
  Config cfg_;
  fs::path out_;
  json checks_ = json::object();
  json summary_ = json::object();
  std::vector<std::string> files_;
  bool pass_ = true;
};

RenormParams params_of(const Run& run) {
  RenormParams p;
  const Config& c = run.cfg();
  if (c.has("sigma")) p.sigma = run.num("sigma");
  if (c.has("rho")) p.rho = run.num("rho");
  if (c.has("rho_prime")) p.rho_prime = run.num("rho_prime");
  if (c.has("kappa")) p.kappa = run.num("kappa");
  if (c.has("c_prime")) p.c_prime = run.num("c_prime");
  if (c.has("tol")) p.tol = run.num("tol");
  if (c.has("relative_tol")) p.relative_tol = run.num("relative_tol");
  if (c.has("max_iter")) p.max_iter = static_cast<int>(run.integer("max_iter"));
  if (c.has("check_domain")) p.check_domain = run.flag("check_domain");
  return p;
}

int truncation_of(const Run& run) {
  long n = run.integer("truncation");
  if (n < 1 || n > 4096) invalid("truncation: must be in 1..4096");
  return static_cast<int>(n);
}

// Slope after the V/S transient, alpha > 1.
Slope working_slope(const Run& run, const RenormParams& p, json& summary) {
  Slope s = Slope::parse(run.get("slope"), run.precision());
  TransientResult t = transient_step(FourierVectorField(1, p.rho_prime), s, p);
  summary["slope"] = t.slope.describe();
  summary["transient"] = t.applied;
  return t.slope;
}

FourierVectorField perturbation_of(const Run& run, double alpha, const RenormParams& p) {
  std::uint64_t seed = run.cfg().has("seed") ? run.seed() : 0;
  return make_perturbation(run.get("perturb"), alpha, p.sigma, truncation_of(run), p.rho_prime,
                           seed, run.num("decay"));
}

void scenario_cf(Run& run) {
  long n = run.integer("n");
  if (n < 1) invalid("n: must be at least 1");
  double order = run.num("order");
  double agreement_tol = run.num("agreement_tol");
  Slope slope = Slope::parse(run.get("slope"), run.precision());
  CFExpansion cf = cf_expand(slope, static_cast<std::size_t>(n) + 2, run.precision());
  std::size_t rows = std::min<std::size_t>(static_cast<std::size_t>(n), cf.size());
  std::optional<DiophantineReport> probe;
  if (cf.size() >= 2 && rows >= 1) {
    probe = diophantine_probe(cf, order, std::min(rows - 1, cf.size() - 2));
  }
  const double golden = (1 + std::sqrt(5.0)) / 2;
  bool sandwich = true, golden_bound = true, agree = true;
  double worst_agreement = 0;
  std::vector<Row> table;
  for (std::size_t i = 0; i < rows; ++i) {
    long li = static_cast<long>(i);
    Row r{std::to_string(i), cf.a(i).get_str(), cf.p(li).get_str(), cf.q(li).get_str(),
          cf.beta(li).to_string(20), cf.atilde(li).to_string(20)};
    if (probe && i < probe->rows.size()) {
      const auto& d = probe->rows[i];
      r.insert(r.end(), {fmt(d.k_q), fmt(d.k_a), fmt(d.k_beta), fmt(d.k_atilde)});
    } else {
      r.insert(r.end(), {"", "", "", ""});
    }
    table.push_back(std::move(r));

    double beta = cf.beta(li).to_double();
    if (beta > 0 && i + 1 < cf.size()) {
      double q1 = cf.q(li + 1).get_d();
      sandwich = sandwich && 1 / (2 * q1) < beta && beta < 1 / q1;
      golden_bound = golden_bound && beta <= std::pow(golden, -static_cast<double>(i)) * (1 + 1e-12);
    }
    double diff = (cf.beta(li) - cf.beta_direct(li)).abs().to_double();
    worst_agreement = std::max(worst_agreement, diff);
    agree = agree && diff <= agreement_tol;
  }
  run.write_csv("cf.csv",
                {"n", "a_n", "p_n", "q_n", "beta_n", "Atilde_n", "K_q", "K_a", "K_beta", "K_Atilde"},
                table);
  json& s = run.summary();
  s["slope"] = slope.describe();
  s["certified"] = cf.size();
  s["rational_exhausted"] = cf.rational_exhausted();
  s["precision_exhausted"] = cf.precision_exhausted();
  if (cf.period()) {
    s["period"] = {{"start", cf.period()->start}, {"length", cf.period()->length}};
  } else {
    s["period"] = nullptr;
  }
  std::vector<std::string> coeffs;
  for (std::size_t i = 0; i < rows; ++i) coeffs.push_back(cf.a(i).get_str());
  s["coefficients"] = coeffs;
  s["beta_agreement"] = worst_agreement;
  if (probe) {
    s["K"] = {{"K_q", probe->k_q}, {"K_a", probe->k_a}, {"K_beta", probe->k_beta},
              {"K_Atilde", probe->k_atilde}};
  }
  run.check("beta_sandwich", sandwich);
  run.check("beta_golden_bound", golden_bound);
  run.check("beta_agreement", agree);
}

void scenario_project(Run& run) {
  RenormParams p = params_of(run);
  json& s = run.summary();
  Slope slope = working_slope(run, p, s);
  double alpha = slope.to_double();
  long a = static_cast<long>(std::floor(alpha));
  FourierVectorField f = perturbation_of(run, alpha, p);
  ConeSpec cone = ConeSpec::far_resonant(omega_of(alpha), p.sigma);
  FourierVectorField in = project(f, cone, Side::Inside);
  FourierVectorField out = project(f, cone, Side::Outside);
  std::vector<Row> rows;
  for (const auto& [k, c] : f.modes()) {
    rows.push_back({std::to_string(k.k1), std::to_string(k.k2),
                    cone.inside(k) ? "resonant" : "far", fmt(c[0].real()), fmt(c[0].imag()),
                    fmt(c[1].real()), fmt(c[1].imag())});
  }
  run.write_csv("project.csv", {"k1", "k2", "side", "re_f1", "im_f1", "re_f2", "im_f2"}, rows);

  double total = norm_r(f, p.rho_prime), ni = norm_r(in, p.rho_prime),
         no = norm_r(out, p.rho_prime);
  s["norm_total"] = total;
  s["norm_resonant"] = ni;
  s["norm_far"] = no;
  s["modes_resonant"] = in.size();
  s["modes_far"] = out.size();
  run.check("split_additive", std::abs(ni + no - total) <= 1e-14 * std::max(1.0, total));

  long k_max = run.integer("k_max");
  double kappa = p.resolved_kappa();
  ConeCertificate c = cone_containment_certificate(omega_of(alpha), p.sigma, a, kappa,
                                                   static_cast<int>(k_max));
  Row w = c.witness ? Row{std::to_string(c.witness->k1), std::to_string(c.witness->k2)}
                    : Row{"", ""};
  run.write_csv("cone.csv",
                {"alpha", "a", "sigma", "kappa", "k_max", "checked", "pass", "witness_k1",
                 "witness_k2", "m", "l", "s", "r", "ordering", "kappa_lower_bound"},
                {{fmt(alpha), std::to_string(a), fmt(p.sigma), fmt(kappa), std::to_string(k_max),
                  std::to_string(c.checked), c.pass ? "1" : "0", w[0], w[1], fmt(c.m), fmt(c.l),
                  fmt(c.s), fmt(c.r), c.ordering ? "1" : "0", fmt(c.kappa_lower_bound)}});
  run.check("cone_containment", c.pass);
}

void scenario_scale(Run& run) {
  RenormParams p = params_of(run);
  json& s = run.summary();
  Slope slope = working_slope(run, p, s);
  double alpha = slope.to_double();
  long a = static_cast<long>(std::floor(alpha));
  long trials = run.integer("trials");
  if (trials < 1) invalid("trials: must be at least 1");
  Widths w{p.rho, p.rho_prime, p.resolved_kappa()};
  double bound = operator_norm_bound(a, p.rho, p.rho_prime, w.kappa);
  double worst = 0;
  std::vector<Row> rows;
  for (long t = 0; t < trials; ++t) {
    FourierVectorField f = make_perturbation("resonant:1", alpha, p.sigma, truncation_of(run),
                                             p.rho_prime, run.seed() + static_cast<std::uint64_t>(t),
                                             run.num("decay"));
    FourierVectorField g = scale_step(f, a, w);
    double in = norm_r(f, p.rho_prime), outp = norm_prime_r(g, p.rho);
    double ratio = outp / in;
    worst = std::max(worst, ratio);
    rows.push_back({std::to_string(t), fmt(in), fmt(outp), fmt(ratio), fmt(bound),
                    fmt(bound - ratio)});
  }
  run.write_csv("scale.csv",
                {"trial", "input_norm", "output_norm_prime", "ratio", "bound", "margin"}, rows);
  s["a"] = a;
  s["bound"] = bound;
  s["max_ratio"] = worst;
  s["margin"] = bound - worst;
  run.check("norm_bound", worst <= bound);
}

std::optional<double> fitted_order(const std::vector<double>& r) {
  // Least squares of log r_{i+1} against log r_i above the round-off floor.
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    if (r[i] > 0 && r[i + 1] > 1e-15) pts.push_back({std::log(r[i]), std::log(r[i + 1])});
  }
  if (pts.size() < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (auto [x, y] : pts) mx += x, my += y;
  mx /= pts.size();
  my /= pts.size();
  double sxy = 0, sxx = 0;
  for (auto [x, y] : pts) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
  if (sxx == 0) return std::nullopt;
  return sxy / sxx;
}

void scenario_eliminate(Run& run) {
  RenormParams p = params_of(run);
  json& s = run.summary();
  Slope slope = working_slope(run, p, s);
  double alpha = slope.to_double();
  FourierVectorField g = perturbation_of(run, alpha, p);
  g.erase({0, 0});
  EliminationOptions opt;
  opt.sigma = p.sigma;
  opt.rho = p.rho;
  opt.rho_prime = p.rho_prime;
  opt.tol = p.tol;
  opt.max_iter = p.max_iter;
  EliminationResult r = eliminate_far_perturbation(g, to_vec2(omega_of(alpha)), opt);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < r.residuals.size(); ++i) {
    rows.push_back({std::to_string(i), fmt(r.residuals[i])});
  }
  run.write_csv("eliminate.csv", {"sweep", "far_residual"}, rows);
  run.write_file("map.json", r.map.to_json() + "\n");
  auto order = fitted_order(r.residuals);
  s["sweeps"] = r.sweeps;
  s["far_residual"] = r.far_residual;
  s["identity"] = r.map.is_identity();
  s["order"] = order ? json(*order) : json(nullptr);
  s["grid_size"] = r.grid_size;
  s["taylor_order"] = r.taylor_order;
  s["gmres_iterations"] = r.gmres_iterations;
  s["aliasing"] = r.aliasing;
  s["eps_hat"] = r.eps_hat;
  s["inside_ball"] = r.inside_ball;
  s["contraction_bound"] = r.contraction_bound;
  s["output_norm"] = r.output_norm;
  s["contraction_ok"] = r.contraction_ok;
  run.check("far_residual", r.far_residual <= opt.tol);
}

void scenario_orbit(Run& run) {
  RenormParams p = params_of(run);
  Slope slope = Slope::parse(run.get("slope"), run.precision());
  OrbitOptions o;
  long steps = run.integer("steps");
  if (steps < 1) invalid("steps: must be at least 1");
  o.steps = static_cast<std::size_t>(steps);
  const std::string& sm = run.get("stable_manifold");
  if (sm == "auto") {
    o.stable_manifold = StableManifold::Auto;
  } else if (sm == "on") {
    o.stable_manifold = StableManifold::On;
  } else if (sm == "off") {
    o.stable_manifold = StableManifold::Off;
  } else {
    invalid("stable_manifold: expected auto, on or off");
  }
  o.shooting_passes = static_cast<int>(run.integer("shooting_passes"));
  o.shooting_tol = run.num("shooting_tol");
  o.precision = run.precision();
  const std::string& expect = run.get("expect");
  if (expect != "none" && expect != "decay") invalid("expect: expected none or decay");

  FourierVectorField f0 = perturbation_of(run, slope.to_double(), p);
  OrbitResult r = renorm_orbit(f0, slope, p, o);

  std::vector<Row> rows;
  for (std::size_t n = 0; n < r.states.size(); ++n) {
    const RenormState& st = r.states[n];
    long a = n < r.steps.size() ? r.steps[n].frequency.a : static_cast<long>(std::floor(st.alpha));
    int sweeps = n == 0 ? 0 : r.steps[n - 1].newton_sweeps;
    rows.push_back({std::to_string(n), std::to_string(a), fmt(st.alpha), fmt(st.norms.total),
                    fmt(st.norms.osc), fmt(st.norms.const_omega), fmt(st.norms.const_Omega),
                    fmt(st.norms.far_residual), std::to_string(sweeps),
                    n < r.theta_running.size() ? fmt(r.theta_running[n]) : ""});
  }
  run.write_csv("orbit.csv",
                {"n", "a_n", "alpha_n", "norm_total", "norm_osc", "norm_const_omega",
                 "norm_const_Omega", "far_residual", "newton_sweeps", "theta_hat_running"},
                rows);

  std::vector<Row> diag;
  double worst_defect = 0;
  for (std::size_t n = 0; n < r.steps.size(); ++n) {
    const StepReport& s = r.steps[n];
    worst_defect = std::max(worst_defect, s.frequency_defect);
    diag.push_back({std::to_string(n), std::to_string(s.frequency.a), fmt(s.zeta),
                    fmt(s.input_norm), fmt(s.dropped_far), fmt(s.scaled_norm_prime),
                    std::to_string(s.newton_sweeps), std::to_string(s.gmres_iterations),
                    fmt(s.far_residual), fmt(s.elimination_tol), fmt(s.eps_hat),
                    s.inside_ball ? "1" : "0", fmt(s.contraction_bound),
                    s.contraction_ok ? "1" : "0", std::to_string(s.taylor_order), fmt(s.aliasing),
                    fmt(s.normalization), fmt(s.omega_cleanup), fmt(s.frequency_defect)});
  }
  run.write_csv("orbit_steps.csv",
                {"step", "a_n", "zeta", "input_norm", "dropped_far", "scaled_norm_prime",
                 "newton_sweeps", "gmres_iterations", "far_residual", "elimination_tol",
                 "eps_hat", "inside_ball", "contraction_bound", "contraction_ok",
                 "taylor_order", "aliasing", "normalization", "omega_cleanup",
                 "frequency_defect"},
                diag);

  json& s = run.summary();
  s["slope"] = r.slope;
  s["transient"] = r.transient;
  s["steps_completed"] = r.steps.size();
  s["theta_hat"] = r.theta_hat ? json(*r.theta_hat) : json(nullptr);
  s["monotone_from_2"] = r.monotone_from_2;
  s["stable_manifold"] = r.stable_manifold;
  s["shooting_passes"] = r.passes;
  s["shooting_converged"] = r.shooting_converged;
  s["initial_adjustment"] = r.initial_adjustment;
  s["max_shadow_correction"] = r.max_shadow_correction;
  s["max_frequency_defect"] = worst_defect;
  if (r.failure) {
    s["failure"] = {{"step", r.failure->step},
                    {"code", error_name(r.failure->code)},
                    {"message", r.failure->message}};
  } else {
    s["failure"] = nullptr;
  }
  run.check("frequency_orbit", worst_defect <= 1e-12);
  if (r.stable_manifold) run.check("shooting_converged", r.shooting_converged);
  if (expect == "decay") {
    run.check("monotone_from_2", r.monotone_from_2);
    run.check("theta_below_one", r.theta_hat && *r.theta_hat < 1);
  }
  if (r.failure) {
    std::string where = "step " + std::to_string(r.failure->step) + ": ";
    const std::string& msg = r.failure->message;
    fail(r.failure->code, msg.rfind(where, 0) == 0 ? msg : where + msg);
  }
}

void scenario_spectrum(Run& run) {
  RenormParams p;
  json& s = run.summary();
  Slope slope = working_slope(run, p, s);
  long steps = run.integer("steps");
  if (steps < 1) invalid("steps: must be at least 1");
  CFExpansion cf = cf_expand(slope, static_cast<std::size_t>(steps) + 2, run.precision());
  std::vector<Row> rows;
  bool rank_one = true, unstable = true;
  for (long n = 0; n < steps; ++n) {
    Frequency f = frequency_at(cf, static_cast<std::size_t>(n));
    ConstantBlock b = constant_block(f.alpha, f.frac);
    double det = b.g[0] * b.g[3] - b.g[1] * b.g[2];
    double scale = std::abs(b.g[0] * b.g[3]) + std::abs(b.g[1] * b.g[2]);
    rank_one = rank_one && std::abs(det) <= 1e-12 * std::max(1.0, scale);
    unstable = unstable && std::abs(b.nu) > 1;
    rows.push_back({std::to_string(n), std::to_string(f.a), fmt(f.alpha), fmt(b.nu), fmt(b.mu),
                    fmt(b.g[0]), fmt(b.g[1]), fmt(b.g[2]), fmt(b.g[3]), fmt(det)});
  }
  run.write_csv("spectrum.csv",
                {"n", "a_n", "alpha_n", "nu", "mu", "g11", "g12", "g21", "g22", "det"}, rows);
  run.check("rank_one", rank_one);
  run.check("unstable_eigenvalue", unstable);
}

void scenario_decay(Run& run) {
  RenormParams p = params_of(run);
  json& s = run.summary();
  Slope slope = working_slope(run, p, s);
  long n = run.integer("n");
  if (n < 0) invalid("n: must be non-negative");
  CFExpansion cf = cf_expand(slope, static_cast<std::size_t>(n) + 3, run.precision());
  DecayProbe probe = stable_decay_probe(cf, p, truncation_of(run), n, run.num("order"));
  std::vector<Row> rows;
  for (const auto& r : probe.rows) {
    rows.push_back({std::to_string(r.j), fmt(r.norm), fmt(r.log_ratio), fmt(r.lambda)});
  }
  run.write_csv("decay.csv", {"j", "norm", "log_ratio", "lambda"}, rows);
  s["n"] = probe.n;
  s["truncation"] = probe.truncation;
  s["log_ratio_increasing"] = probe.log_ratio_increasing;
  run.check("log_ratio_increasing", probe.log_ratio_increasing);
}

void scenario_sweep(Run& run) {
  const Config& cfg = run.cfg();
  auto combos = expand_sweep(run.get("sweep"));
  Config base;
  for (const auto& [k, v] : cfg.entries()) {
    if (k != "scenario" && k != "sweep" && k != "sweep_scenario" && !is_run_local(k)) base.set(k, v);
  }
  base.set("scenario", run.get("sweep_scenario"));
  std::vector<Config> children;
  for (const auto& combo : combos) {
    Config c = base;
    for (const auto& [k, v] : combo) c.set(k, v);
    Config r = c.resolved();
    r.set("out", (fs::path(run.get("out")) / ("run-" + r.hash_hex())).string());
    children.push_back(std::move(r));
  }

  long jobs = run.integer("jobs");
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, children.size());
  std::vector<ScenarioResult> results(children.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next++; i < children.size(); i = next++) {
        results[i] = run_scenario(children[i]);
      }
    }));
  }
  for (auto& f : pool) f.get();

  Row columns{"run", "config_hash"};
  for (const auto& [k, v] : combos.front()) columns.push_back(k);
  columns.insert(columns.end(), {"exit_code", "error"});
  std::vector<Row> rows;
  int worst = kExitOk;
  for (std::size_t i = 0; i < children.size(); ++i) {
    Row r{std::to_string(i), results[i].hash};
    for (const auto& [k, v] : combos[i]) r.push_back('"' + v + '"');
    std::string err = results[i].error;
    std::replace(err.begin(), err.end(), '"', '\'');
    r.insert(r.end(), {std::to_string(results[i].exit_code), '"' + err + '"'});
    rows.push_back(std::move(r));
    worst = std::max(worst, results[i].exit_code);
  }
  run.write_csv("sweep.csv", columns, rows);
  run.summary()["runs"] = children.size();
  run.summary()["worst_exit_code"] = worst;
  run.check("all_runs_ok", worst == kExitOk);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config c;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      invalid("line " + std::to_string(number) + ": expected key=value");
    }
    c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  if (key.empty()) invalid("empty key");
  if (value.find('\n') != std::string::npos) invalid(key + ": value contains a newline");
  entries_[key] = value;
}

void Config::merge(const Config& overrides) {
  for (const auto& [k, v] : overrides.entries_) entries_[k] = v;
}

const std::string& Config::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) invalid("missing key '" + key + "'");
  return it->second;
}

Config Config::resolved() const {
  if (!has("scenario")) invalid("missing key 'scenario'");
  const std::string& scenario = get("scenario");
  Config r;
  r.entries_ = defaults_for(scenario);
  for (const auto& [k, v] : entries_) r.entries_[k] = v;
  for (const auto& [k, v] : r.entries_) validate_value(k, v);
  if (scenario == "sweep") {
    if (!r.has("sweep")) invalid("sweep: missing key 'sweep'");
    if (!r.has("sweep_scenario")) invalid("sweep: missing key 'sweep_scenario'");
    const std::string& inner = r.get("sweep_scenario");
    if (inner == "sweep") invalid("sweep_scenario: sweeps cannot nest");
    defaults_for(inner);
    return r;
  }
  long bits = parse_long("precision", r.get("precision"));
  if (bits < 16 || bits > 1 << 20) invalid("precision: must be in 16..1048576 bits");
  try {
    Slope::parse(r.get("slope"), static_cast<mpfr_prec_t>(bits));
  } catch (const Error& e) {
    invalid("slope: " + std::string(e.what()));
  }
  if (r.has("perturb")) parse_perturb(r.get("perturb"));
  if (uses_randomness(scenario, r.entries_) && !r.has("seed")) {
    invalid("seed is mandatory for randomized scenarios");
  }
  return r;
}

std::string Config::canonical() const {
  std::string s;
  for (const auto& [k, v] : entries_) {
    if (!is_run_local(k)) s += k + "=" + v + "\n";
  }
  return s;
}

std::uint64_t Config::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string Config::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

bool perturbation_is_random(const std::string& spec) {
  PerturbSpec p = parse_perturb(spec);
  return p.kind == "resonant" || p.kind == "mixed" || p.kind == "random";
}

FourierVectorField make_perturbation(const std::string& spec, double alpha, double sigma,
                                     int truncation, double rho_prime, std::uint64_t seed,
                                     double decay) {
  PerturbSpec p = parse_perturb(spec);
  FourierVectorField f(truncation, rho_prime);
  if (p.kind == "none" || p.amp == 0) return f;
  if (p.kind == "resonant" || p.kind == "mixed" || p.kind == "random") {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Vec2 omega = to_vec2(omega_of(alpha));
    for (int k1 = 0; k1 <= truncation; ++k1) {
      for (int k2 = -truncation; k2 <= truncation; ++k2) {
        Mode k{k1, k2};
        if (k.norm1() == 0 || k.norm1() > truncation || (k1 == 0 && k2 < 0)) continue;
        if (p.kind != "random" && !is_resonant(k, omega, sigma)) continue;
        double s = std::exp(-decay * k.norm1());
        Vec2 c{Complex(g(rng), g(rng)) * s, Complex(g(rng), g(rng)) * s};
        f.set(k, c);
        f.set(-k, {std::conj(c[0]), std::conj(c[1])});
      }
    }
    double n = norm_r(f, rho_prime);
    if (n == 0) fail(ErrorCode::InvalidArgument, "perturbation " + spec + " has no admissible modes");
    f *= p.amp / n;
  }
  if (p.kind == "unstable" || p.kind == "mixed") {
    Real2 big = big_omega_of(alpha);
    f.add({0, 0}, {Complex(p.amp * big[0]), Complex(p.amp * big[1])});
  }
  return f;
}

ScenarioResult run_scenario(const Config& config) {
  Config resolved;
  std::string config_error;
  try {
    resolved = config.resolved();
  } catch (const Error& e) {
    config_error = e.what();
    resolved = config;
    if (!resolved.has("out")) resolved.set("out", ".");
  }
  Run run(resolved);
  run.prepare_output();
  if (!config_error.empty()) {
    return run.finish(kExitConfig, error_name(ErrorCode::ConfigInvalid), config_error);
  }
  static const std::map<std::string, std::function<void(Run&)>> table = {
      {"cf", scenario_cf},           {"project", scenario_project},
      {"scale", scenario_scale},     {"eliminate", scenario_eliminate},
      {"orbit", scenario_orbit},     {"spectrum", scenario_spectrum},
      {"decay-probe", scenario_decay}, {"sweep", scenario_sweep},
  };
  try {
    table.at(resolved.get("scenario"))(run);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    int code = e.code() == ErrorCode::ConfigInvalid ? kExitConfig : kExitModule;
    return run.finish(code, error_name(e.code()), e.what());
  } catch (const std::exception& e) {
    return run.finish(kExitModule, error_name(ErrorCode::Internal), e.what());
  }
  return run.finish(kExitOk, "", "");
}

}  // namespace torusrg
