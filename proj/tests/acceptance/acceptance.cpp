#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "torusrg/error.hpp"
#include "torusrg/experiments.hpp"
#include "torusrg/normalization_step.hpp"
#include "torusrg/number_theory.hpp"
#include "torusrg/renorm_driver.hpp"
#include "torusrg/scaling_step.hpp"

using namespace torusrg;

namespace {

const double kGolden = (1 + std::sqrt(5.0)) / 2;
const std::uint64_t kSeed = 20260101;
const char* kEMinus2 =
    "0.71828182845904523536028747135266249775724709369995957496696762772407663035354759457138217852"
    "516642742746@256";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string format(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_mode_diff(const FourierVectorField& a, const FourierVectorField& b) {
  double d = 0;
  for (const auto& [k, f] : a.modes()) {
    Vec2 g = b.coefficient(k);
    d = std::max(d, std::abs(f[0] - g[0]) + std::abs(f[1] - g[1]));
  }
  for (const auto& [k, f] : b.modes()) {
    Vec2 g = a.coefficient(k);
    d = std::max(d, std::abs(f[0] - g[0]) + std::abs(f[1] - g[1]));
  }
  return d;
}

// Resonance and cone membership written out directly, independent of the library.
bool resonant_direct(int k1, int k2, double alpha, double sigma) {
  return std::abs(k1 + alpha * k2) <= sigma * (std::abs(k1) + std::abs(k2));
}

Outcome cf_golden_values() {
  auto t0 = std::chrono::steady_clock::now();
  CFExpansion g = cf_expand(Slope::golden(), 30);
  CFExpansion s = cf_expand(Slope::sqrt2(), 30);
  double dt = seconds_since(t0);
  bool ok = g.size() == 30 && s.size() == 30;
  for (std::size_t n = 0; ok && n < 30; ++n) {
    ok = g.a(n) == 1 && s.a(n) == (n == 0 ? 1 : 2);
  }
  ok = ok && g.period() && g.period()->start == 0 && g.period()->length == 1;
  ok = ok && s.period() && s.period()->start == 1 && s.period()->length == 1;
  return {ok && dt < 1.0,
          format("gamma=[1;1,1,...] sqrt2=[1;2,2,...] x30, periods (0,1) (1,1), %.3f s < 1 s", dt)};
}

Outcome beta_sandwich() {
  std::mt19937_64 rng(kSeed);
  std::uniform_int_distribution<int> du(0, 20), dv(1, 5), dd(2, 200), dw(1, 10);
  int slopes = 0, checks = 0;
  bool ok = true;
  double worst_agreement = 0;
  const mpfr_prec_t prec = 256;
  BigReal inv_golden = BigReal(1, prec) / Slope::golden().value(prec);
  while (slopes < 10) {
    int d = dd(rng);
    int r = static_cast<int>(std::lround(std::sqrt(d)));
    if (r * r == d) continue;
    Slope alpha = Slope::quadratic(du(rng), dv(rng), d, dw(rng));
    ++slopes;
    CFExpansion cf = cf_expand(alpha, 27, prec);
    BigReal bound = BigReal(1, prec);
    for (long n = 0; n <= 25; ++n) {
      BigReal q1(cf.q(n + 1), prec);
      const BigReal& beta = cf.beta(n);
      BigReal lower = BigReal(1, prec) / (BigReal(2, prec) * q1);
      BigReal upper = BigReal(1, prec) / q1;
      double agreement = (beta - cf.beta_direct(n)).abs().to_double();
      worst_agreement = std::max(worst_agreement, agreement);
      ok = ok && lower < beta && beta < upper && beta <= bound && agreement <= 1e-30;
      bound = bound * inv_golden;
      ++checks;
    }
  }
  return {ok, format("%d surds, %d rows: 1/(2q_{n+1}) < beta_n < 1/q_{n+1}, beta_n <= gamma^-n, "
                     "max |beta - beta_direct| = %.1e <= 1e-30",
                     slopes, checks, worst_agreement)};
}

Outcome cone_containment() {
  const double sigma = 0.1, kappa = 1 - (1 - 3 * sigma) / 3;
  const double alphas[] = {kGolden, std::sqrt(2.0), 1 + std::sqrt(2.0)};
  bool ok = true;
  std::size_t checked = 0, witnesses = 0;
  for (double alpha : alphas) {
    long a = static_cast<long>(std::floor(alpha));
    ConeCertificate c = cone_containment_certificate(omega_of(alpha), sigma, a, kappa, 50);
    ok = ok && c.pass && !c.witness;
    for (int k1 = -50; k1 <= 50; ++k1) {
      for (int k2 = -50; k2 <= 50; ++k2) {
        int n1 = std::abs(k1) + std::abs(k2);
        if (n1 == 0 || n1 > 50 || !resonant_direct(k1, k2, alpha, sigma)) continue;
        ++checked;
        long t1 = k2, t2 = k1 + a * k2;
        if (std::abs(t1) + std::abs(t2) > kappa * n1) ++witnesses;
      }
    }
  }
  return {ok && witnesses == 0,
          format("alpha in {gamma, sqrt2, 1+sqrt2}, |k|_1 <= 50, kappa = %.4f: %zu resonant modes, "
                 "%zu witnesses",
                 kappa, checked, witnesses)};
}

Outcome scale_gain() {
  const double rho = 1, rho_prime = 0.9, sigma = 0.1, kappa = default_kappa(sigma);
  const long a = 1;
  double bound = 6 * std::numbers::pi * a / (rho_prime - kappa * rho) + 3 * a;
  bool ok = std::abs(bound - operator_norm_bound(a, rho, rho_prime, kappa)) <= 1e-12 * bound;
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    FourierVectorField f = make_perturbation("resonant:1", kGolden, sigma, 32, rho_prime,
                                             kSeed + static_cast<std::uint64_t>(t));
    FourierVectorField g = scale_step(f, a, {rho, rho_prime, kappa});
    worst = std::max(worst, norm_prime_r(g, rho) / norm_r(f, rho_prime));
  }
  ok = ok && worst <= bound;
  return {ok, format("100 resonant fields, N = 32: max gain %.4f <= bound %.4f, margin %.4f",
                     worst, bound, bound - worst)};
}

Outcome elimination_contract() {
  const Vec2 psi = to_vec2(omega_of(kGolden));
  EliminationOptions opt;
  opt.sigma = 0.1;

  FourierVectorField res = make_perturbation("resonant:1e-3", kGolden, opt.sigma, 32, 0.9, kSeed);
  EliminationResult r0 = eliminate_far_perturbation(res, psi, opt);
  bool identity = r0.map.is_identity() && max_mode_diff(r0.field, res) == 0.0;

  FourierVectorField g = make_perturbation("random:1e-3", kGolden, opt.sigma, 32, 0.9, kSeed);
  EliminationResult r1 = eliminate_far_perturbation(g, psi, opt);
  bool contract = r1.far_residual <= 1e-12 && r1.sweeps <= 6;

  // Order from the first-sweep residual across amplitudes: r1 = C r0^p.
  FourierVectorField dir = make_perturbation("random:1", kGolden, opt.sigma, 32, 0.9, kSeed + 1);
  std::vector<double> xs, ys;
  for (double eps : {1e-3, 1e-4, 1e-5, 1e-6}) {
    FourierVectorField h = dir;
    h *= eps;
    EliminationResult r = eliminate_far_perturbation(h, psi, opt);
    if (r.residuals.size() >= 2) {
      xs.push_back(std::log(r.residuals[0]));
      ys.push_back(std::log(r.residuals[1]));
    }
  }
  double order = 0;
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= xs.size();
    my /= xs.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    order = sxy / sxx;
  }

  // Central difference of the eliminated field at psi against the I+ projection.
  const double eps = 1e-6;
  EliminationOptions fine = opt;
  fine.tol = 1e-17;
  FourierVectorField u = make_perturbation("random:1", kGolden, opt.sigma, 16, 0.9, kSeed + 2);
  FourierVectorField up = u, um = u;
  up *= eps;
  um *= -eps;
  FourierVectorField d = eliminate_far_perturbation(up, psi, fine).field -
                         eliminate_far_perturbation(um, psi, fine).field;
  d *= 1 / (2 * eps);
  double deriv = max_mode_diff(d, project(u, ConeSpec::far_resonant(psi, opt.sigma), Side::Inside));

  bool ok = identity && contract && order >= 1.8 && deriv <= 1e-8;
  return {ok, format("U = id on resonant input: %s; 1e-3 field: residual %.1e <= 1e-12 in %d <= 6 "
                     "sweeps; order %.3f >= 1.8; |D - I+| = %.1e <= 1e-8",
                     identity ? "yes" : "no", r1.far_residual, r1.sweeps, order, deriv)};
}

Outcome fixed_point() {
  RenormParams p;
  CFExpansion cf = cf_expand(Slope::golden(), 4);
  RenormState s;
  s.alpha = cf.tail(0).to_double();
  s.f = FourierVectorField(32, p.rho_prime);
  RenormState next = one_step(s, frequency_at(cf, 0), p);
  double defect = next.norms.total + std::abs(next.alpha - kGolden);

  CFExpansion cf2 = cf_expand(Slope::sqrt2(), 22);
  const double silver = 1 + std::sqrt(2.0);
  double worst = 0;
  for (std::size_t n = 1; n <= 20; ++n) {
    Frequency f = frequency_at(cf2, n);
    RenormState t;
    t.n = n;
    t.alpha = f.alpha;
    t.f = FourierVectorField(32, p.rho_prime);
    RenormState u = one_step(t, f, p);
    worst = std::max({worst, std::abs(f.alpha - silver), std::abs(u.alpha - silver),
                      u.norms.total});
  }
  bool ok = defect <= 1e-12 && worst <= 1e-12;
  return {ok, format("|R(1,gamma) - (1,gamma)| = %.1e <= 1e-12; sqrt2: omega_n = (1, 1+sqrt2) for "
                     "n = 1..20 within %.1e <= 1e-12",
                     defect, worst)};
}

Outcome convergence_orbits() {
  RenormParams p;
  OrbitOptions o;
  o.steps = 8;
  struct Case {
    const char* name;
    std::string slope;
  };
  const Case cases[] = {{"gamma", "golden"}, {"1+sqrt2", "silver"}, {"e-2", kEMinus2}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    Slope slope = Slope::parse(c.slope);
    FourierVectorField f0 =
        make_perturbation("resonant:1e-3", slope.to_double(), p.sigma, 32, p.rho_prime, kSeed);
    auto t0 = std::chrono::steady_clock::now();
    OrbitResult r = renorm_orbit(f0, slope, p, o);
    double dt = seconds_since(t0);
    bool pass = !r.failure && r.states.size() == 9 && r.monotone_from_2 && r.theta_hat &&
                *r.theta_hat < 1 && dt < 120;
    ok = ok && pass;
    detail += format("%s%s: |f_8| = %.1e, theta = %.1e, %.1f s%s", detail.empty() ? "" : "; ",
                     c.name, r.states.back().norms.total, r.theta_hat.value_or(NAN), dt,
                     pass ? "" : " FAILED");
  }
  return {ok, "strictly decreasing from n = 2, theta < 1, < 120 s: " + detail};
}

Outcome unstable_direction() {
  RenormParams p;
  OrbitOptions o;
  o.steps = 20;
  FourierVectorField f0 = make_perturbation("unstable:1e-6", kGolden, p.sigma, 32, p.rho_prime, 0);
  OrbitResult r = renorm_orbit(f0, Slope::golden(), p, o);
  const double nu = kGolden * kGolden;
  bool ok = r.states.size() >= 5 && !r.stable_manifold;
  double worst = 0;
  for (std::size_t n = 1; ok && n <= 4; ++n) {
    double g = r.states[n].norms.const_Omega / r.states[n - 1].norms.const_Omega;
    worst = std::max(worst, std::abs(g / nu - 1));
  }
  ok = ok && worst <= 0.1 && r.failure && r.failure->code == ErrorCode::DomainExceeded &&
       r.failure->step > 4;
  return {ok, format("growth of the Omega component within %.1e of gamma^2 (<= 10%%) for 4 steps; "
                     "%s at step %zu",
                     worst, r.failure ? error_name(r.failure->code) : "no failure",
                     r.failure ? r.failure->step : 0)};
}

Outcome quadratic_remainder() {
  RenormParams p;
  CFExpansion cf = cf_expand(Slope::golden(), 4);
  FourierVectorField dir = make_perturbation("mixed:1", kGolden, p.sigma, 24, p.rho_prime, kSeed);
  RemainderProbe r = remainder_probe(dir, frequency_at(cf, 0), p, {0.1, 0.01});
  bool ok = std::abs(r.exponent - 2.0) <= 0.2;
  return {ok, format("remainder at |f| = zeta/10, zeta/100: %.2e, %.2e; exponent %.3f in 2.0 +- 0.2",
                     r.samples.at(0).remainder, r.samples.at(1).remainder, r.exponent)};
}

Outcome decay_probe() {
  RenormParams p;
  CFExpansion cf = cf_expand(Slope::golden(), 12);
  DecayProbe probe = stable_decay_probe(cf, p, 150, 6);
  std::string ratios;
  for (const auto& row : probe.rows) ratios += format("%s%.2f", ratios.empty() ? "" : ", ", row.log_ratio);
  return {probe.log_ratio_increasing,
          format("gamma, n = 6, K = 150: log-ratios %s increasing in n - j", ratios.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"continued fractions of gamma and sqrt2", cf_golden_values},
      {"beta_n sandwich", beta_sandwich},
      {"cone containment", cone_containment},
      {"linear step norm bound", scale_gain},
      {"elimination contract", elimination_contract},
      {"fixed point and periodic frequencies", fixed_point},
      {"convergence of renormalization orbits", convergence_orbits},
      {"unstable constant direction", unstable_direction},
      {"quadratic remainder", quadratic_remainder},
      {"stable decay probe", decay_probe},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
