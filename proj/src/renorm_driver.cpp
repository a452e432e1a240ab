#include "torusrg/renorm_driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "torusrg/scaling_step.hpp"

namespace torusrg {

namespace {

Complex dot(const Vec2& c, const Real2& v) { return c[0] * v[0] + c[1] * v[1]; }
double dot(const Real2& a, const Real2& b) { return a[0] * b[0] + a[1] * b[1]; }

Widths widths_of(const RenormParams& p) { return {p.rho, p.rho_prime, p.resolved_kappa()}; }

void validate(const RenormParams& p) {
  if (!(p.sigma > 0)) fail(ErrorCode::InvalidArgument, "sigma must be > 0");
  if (!(p.rho > p.rho_prime && p.rho_prime > 0)) {
    fail(ErrorCode::InvalidArgument, "widths need rho > rho' > 0");
  }
  if (!(p.c_prime > 0)) fail(ErrorCode::InvalidArgument, "c' must be > 0");
  if (!(p.tol > 0) || !(p.relative_tol > 0)) {
    fail(ErrorCode::InvalidArgument, "tolerances must be > 0");
  }
}

// The frequency part of the field for omega = (1, alpha) with E f = c Omega.
void set_omega_coefficient(FourierVectorField& f, double alpha, Complex c_big) {
  Vec2 c = f.coefficient({0, 0});
  auto coords = constant_coordinates(c, alpha);
  Real2 w = omega_of(alpha), big = big_omega_of(alpha);
  Vec2 next{coords[0] * w[0] + c_big * big[0], coords[0] * w[1] + c_big * big[1]};
  f.set({0, 0}, next);
}

}  // namespace

double RenormParams::resolved_kappa() const { return kappa > 0 ? kappa : default_kappa(sigma); }

Frequency frequency_at(const CFExpansion& cf, std::size_t n) {
  cf.require(n + 1);
  Frequency f;
  f.n = n;
  if (!cf.a(n).fits_slong_p()) fail(ErrorCode::InvalidArgument, "partial quotient too large");
  f.a = cf.a(n).get_si();
  f.alpha = cf.tail(n).to_double();
  f.alpha_next = cf.tail(n + 1).to_double();
  f.frac = cf.remainder(n).to_double();
  return f;
}

std::array<Complex, 2> constant_coordinates(const Vec2& c, double alpha) {
  Real2 w = omega_of(alpha), big = big_omega_of(alpha);
  return {dot(c, w) / dot(w, w), dot(c, big) / dot(big, big)};
}

StateNorms measure(const FourierVectorField& f, double alpha, double sigma, double rho_prime) {
  StateNorms s;
  s.total = norm_r(f, rho_prime);
  s.osc = norm_r(oscillatory_part(f), rho_prime);
  auto coords = constant_coordinates(f.coefficient({0, 0}), alpha);
  s.const_omega = std::abs(coords[0]) * norm1(omega_of(alpha));
  s.const_Omega = std::abs(coords[1]) * norm1(big_omega_of(alpha));
  s.far_residual =
      norm_r(project(f, ConeSpec::far_resonant(omega_of(alpha), sigma), Side::Outside), rho_prime);
  return s;
}

FourierVectorField RenormState::field() const {
  FourierVectorField x = f;
  x.add({0, 0}, to_vec2(omega()));
  return x;
}

RenormState one_step(const RenormState& state, const Frequency& freq, const RenormParams& p,
                     StepReport* report) {
  validate(p);
  if (freq.a < 1 || !(freq.alpha > 1) || !(freq.frac > 0)) {
    fail(ErrorCode::InvalidArgument, "one_step needs alpha_n > 1 with a nonzero fractional part");
  }
  StepReport rep;
  rep.frequency = freq;
  const double alpha_next = freq.alpha_next;

  FourierVectorField f =
      project(state.f, ConeSpec::far_resonant(omega_of(freq.alpha), p.sigma), Side::Inside);
  rep.dropped_far = norm_r(state.f - f, p.rho_prime);
  rep.input_norm = norm_r(f, p.rho_prime);
  rep.zeta = p.c_prime / (freq.alpha * alpha_next);
  if (p.check_domain && !(rep.input_norm < rep.zeta)) {
    fail(ErrorCode::DomainExceeded, "step " + std::to_string(freq.n) + ": |f| = " +
                                        std::to_string(rep.input_norm) +
                                        " is outside the domain radius " + std::to_string(rep.zeta));
  }

  FourierVectorField g = scale_step(f, freq.a, widths_of(p));
  rep.scaled_norm_prime = norm_prime_r(g, p.rho);

  // psi = T^{-1} omega_n = omega_{n+1} / alpha_{n+1}
  const Vec2 psi{freq.frac, 1.0};
  rep.frequency_defect = std::abs(alpha_next * (freq.alpha - double(freq.a)) - 1.0);
  EliminationOptions eo;
  eo.sigma = p.sigma / alpha_next;
  eo.rho = p.rho;
  eo.rho_prime = p.rho_prime;
  double gnorm = norm_r(g, p.rho_prime);
  eo.tol = gnorm > 0 ? std::min(p.tol, p.relative_tol * gnorm) : p.tol;
  eo.max_iter = p.max_iter;
  eo.grid = p.grid;
  EliminationResult er = eliminate_far_perturbation(g, psi, eo);
  rep.elimination_tol = eo.tol;
  rep.newton_sweeps = er.sweeps;
  rep.gmres_iterations = er.gmres_iterations;
  rep.far_residual = er.far_residual;
  rep.eps_hat = er.eps_hat;
  rep.inside_ball = er.inside_ball;
  rep.contraction_bound = er.contraction_bound;
  rep.contraction_ok = er.contraction_ok;
  rep.taylor_order = er.taylor_order;
  rep.aliasing = er.aliasing;

  // X_{n+1} - omega' = [g' - (omega_hat'.E g') omega'] / z, alpha' z = 1 + alpha' omega_hat'.E g'.
  const Real2 w1 = omega_of(alpha_next);
  FourierVectorField out = er.field;
  Vec2 c = out.coefficient({0, 0});
  Complex s = dot(c, w1) / dot(w1, w1);
  rep.normalization = std::abs(alpha_next * s);
  if (!(rep.normalization < 0.5)) {
    fail(ErrorCode::DomainExceeded,
         "step " + std::to_string(freq.n) + ": normalization leaves |alpha' z - 1| < 1/2");
  }
  out.set({0, 0}, {c[0] - s * w1[0], c[1] - s * w1[1]});
  out *= alpha_next / (1.0 + alpha_next * s);
  auto coords = constant_coordinates(out.coefficient({0, 0}), alpha_next);
  rep.omega_cleanup = std::abs(coords[0]) * norm1(w1);
  Real2 big = big_omega_of(alpha_next);
  out.set({0, 0}, {coords[1] * big[0], coords[1] * big[1]});
  out.prune();

  RenormState next;
  next.n = state.n + 1;
  next.alpha = alpha_next;
  next.f = std::move(out);
  next.norms = measure(next.f, alpha_next, p.sigma, p.rho_prime);
  if (report) *report = rep;
  return next;
}

FourierVectorField linear_step(const FourierVectorField& f, const Frequency& freq,
                               const RenormParams& p) {
  FourierVectorField in =
      project(f, ConeSpec::far_resonant(omega_of(freq.alpha), p.sigma), Side::Inside);
  FourierVectorField g = scale_step(in, freq.a, widths_of(p));
  const Vec2 psi{freq.frac, 1.0};
  FourierVectorField h =
      project(g, ConeSpec::far_resonant(psi, p.sigma / freq.alpha_next), Side::Inside);
  h *= freq.alpha_next;
  const Real2 w1 = omega_of(freq.alpha_next);
  Vec2 c = h.coefficient({0, 0});
  Complex s = dot(c, w1) / dot(w1, w1);
  h.set({0, 0}, {c[0] - s * w1[0], c[1] - s * w1[1]});
  h.prune();
  return h;
}

ConstantBlock constant_block(double alpha, std::optional<double> frac) {
  if (!(alpha > 1)) fail(ErrorCode::InvalidArgument, "constant_block needs alpha > 1");
  double x = frac ? *frac : alpha - std::floor(alpha);
  if (!(x > 0)) fail(ErrorCode::InvalidArgument, "constant_block needs a non-integer alpha");
  const double alpha_next = 1.0 / x;
  const double s = alpha_next / (1.0 + x * x);
  ConstantBlock b;
  b.g = {-alpha * s, s, x * alpha * s, -x * s};
  b.nu = b.g[0] + b.g[3];
  b.kernel = omega_of(alpha);
  b.unstable = big_omega_of(alpha_next);
  Real2 big = big_omega_of(alpha);
  Real2 image{b.g[0] * big[0] + b.g[1] * big[1], b.g[2] * big[0] + b.g[3] * big[1]};
  b.mu = dot(image, b.unstable) / dot(b.unstable, b.unstable);
  return b;
}

WindingConeCheck winding_cone_check(const RenormState& state, double rho_prime) {
  WindingConeCheck out;
  Real2 w = state.omega();
  Vec2 c = state.f.coefficient({0, 0});
  Complex s = dot(c, w) / dot(w, w);
  out.lhs = norm1(Vec2{c[0] - s * w[0], c[1] - s * w[1]});
  out.rhs = norm_r(oscillatory_part(state.f), rho_prime);
  out.pass = out.lhs <= out.rhs;
  return out;
}

namespace {

// X -> M X o M^{-1}: modes k -> M^{-T} k, coefficients f -> M f.
FourierVectorField change_basis(const FourierVectorField& f, const GL2ZMatrix& m) {
  auto md = m.to_double();
  GL2ZMatrix inv_t = m.inverse().transpose();
  auto it = inv_t.to_double();
  FourierVectorField out(f.truncation(), f.width());
  for (const auto& [k, c] : f.modes()) {
    Mode image{static_cast<int>(it[0] * k.k1 + it[1] * k.k2),
               static_cast<int>(it[2] * k.k1 + it[3] * k.k2)};
    out.set(image, {md[0] * c[0] + md[1] * c[1], md[2] * c[0] + md[3] * c[1]});
  }
  return out;
}

}  // namespace

TransientResult transient_step(const FourierVectorField& f, const Slope& alpha0,
                               const RenormParams& p) {
  validate(p);
  if (alpha0.sign() == 0) fail(ErrorCode::ZeroSlope, "slope 0 has no renormalisation orbit");
  Slope slope = alpha0;
  FourierVectorField g = f;
  std::vector<std::string> applied;
  Real2 omega{1.0, alpha0.to_double()};
  auto apply = [&](const GL2ZMatrix& m, const char* name) {
    slope = act_on_slope(m, slope);
    g = change_basis(g, m);
    auto md = m.to_double();
    omega = {md[0] * omega[0] + md[1] * omega[1], md[2] * omega[0] + md[3] * omega[1]};
    applied.push_back(name);
  };
  if (slope.sign() < 0) apply(GL2ZMatrix::V(), "V");
  if (slope.value(128) < BigReal(1.0, 128)) apply(GL2ZMatrix::S(), "S");
  double scale = omega[0];
  if (scale != 1.0) {
    g *= 1.0 / scale;
    applied.push_back("scale");
  }
  int sweeps = 0;
  Real2 w = omega_of(slope.to_double());
  FourierVectorField far = project(g, ConeSpec::far_resonant(w, p.sigma), Side::Outside);
  bool has_far = false;
  for (const auto& [k, c] : far.modes()) has_far = has_far || norm1(c) > 0;
  if (has_far) {
    EliminationOptions eo;
    eo.sigma = p.sigma;
    eo.rho = p.rho;
    eo.rho_prime = p.rho_prime;
    eo.tol = p.tol;
    eo.max_iter = p.max_iter;
    eo.grid = p.grid;
    EliminationResult er = eliminate_far_perturbation(g, to_vec2(w), eo);
    g = er.field;
    sweeps = er.sweeps;
    applied.push_back("eliminate");
  }
  return TransientResult{slope, g, applied, scale, sweeps};
}

std::optional<double> fit_theta(const std::vector<double>& norms, std::size_t first) {
  std::vector<double> xs, ys;
  for (std::size_t i = first; i < norms.size(); ++i) {
    if (!(norms[i] > 0) || !std::isfinite(norms[i])) return std::nullopt;
    xs.push_back(double(i));
    ys.push_back(std::log(norms[i]));
  }
  if (xs.size() < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= xs.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return std::exp(sxy / sxx);
}

namespace {

struct ForwardRun {
  std::vector<RenormState> states;
  std::vector<StepReport> steps;
  std::vector<Complex> c_in, c_comp;  // Omega coefficient used / as produced
  std::optional<OrbitFailure> failure;
};

// freqs holds steps + 1 entries; the last one only sets the final radius.
ForwardRun forward(const RenormState& start, const std::vector<Frequency>& freqs,
                   const RenormParams& p, const std::vector<Complex>* overrides) {
  const std::size_t steps = freqs.size() - 1;
  ForwardRun run;
  RenormState s = start;
  for (std::size_t n = 0;; ++n) {
    Complex computed = constant_coordinates(s.f.coefficient({0, 0}), s.alpha)[1];
    run.c_comp.push_back(computed);
    if (overrides && n < overrides->size()) {
      set_omega_coefficient(s.f, s.alpha, (*overrides)[n]);
      s.f.prune();
      s.norms = measure(s.f, s.alpha, p.sigma, p.rho_prime);
    }
    run.c_in.push_back(constant_coordinates(s.f.coefficient({0, 0}), s.alpha)[1]);
    s.zeta = p.c_prime / (s.alpha * freqs[n].alpha_next);
    run.states.push_back(s);
    if (n == steps) break;
    StepReport rep;
    try {
      RenormState next = one_step(s, freqs[n], p, &rep);
      run.steps.push_back(rep);
      s = std::move(next);
    } catch (const Error& e) {
      run.failure = OrbitFailure{n, e.code(), e.what()};
      break;
    }
  }
  return run;
}

}  // namespace

OrbitResult renorm_orbit(const FourierVectorField& f0, const Slope& alpha0,
                         const RenormParams& p, const OrbitOptions& opt) {
  validate(p);
  TransientResult tr = transient_step(f0, alpha0, p);
  CFExpansion cf = cf_expand(tr.slope, opt.steps + 2, opt.precision);
  std::vector<Frequency> freqs;
  for (std::size_t n = 0; n <= opt.steps; ++n) freqs.push_back(frequency_at(cf, n));

  RenormState start;
  start.alpha = cf.tail(0).to_double();
  start.f = tr.f;
  start.norms = measure(start.f, start.alpha, p.sigma, p.rho_prime);

  OrbitResult out;
  out.slope = tr.slope.describe();
  out.transient = tr.applied;
  Vec2 c0 = average(f0);
  out.stable_manifold = opt.stable_manifold == StableManifold::On ||
                        (opt.stable_manifold == StableManifold::Auto && norm1(c0) == 0);

  ForwardRun run = forward(start, freqs, p, nullptr);
  if (out.stable_manifold && opt.steps > 0) {
    // Shooting along the unstable constant direction: choose the Omega
    // coefficients c*_n so that c*_{n+1} = mu_n c*_n + S_n with c*_m = 0 at the
    // last computed step, S_n being the part of step n not explained by the
    // linear constant block.
    std::vector<Complex> target;
    for (int pass = 0; pass <= opt.shooting_passes; ++pass) {
      std::size_t m = run.states.size() - 1;
      if (m == 0) break;
      std::vector<Complex> next(m + 1, 0.0);
      for (std::size_t j = m; j-- > 0;) {
        double mu = constant_block(freqs[j].alpha, freqs[j].frac).mu;
        Complex source = run.c_comp[j + 1] - mu * run.c_in[j];
        next[j] = (next[j + 1] - source) / mu;
      }
      next.pop_back();
      bool settled = !target.empty();
      for (std::size_t j = 0; settled && j < m; ++j) {
        double d = std::abs(next[j] - run.c_in[j]) * norm1(big_omega_of(run.states[j].alpha));
        settled = d <= opt.shooting_tol * run.states[j].norms.osc;
      }
      if (settled) {
        out.shooting_converged = true;
        break;
      }
      if (pass == opt.shooting_passes) break;
      target = next;
      run = forward(start, freqs, p, &target);
      ++out.passes;
    }
    if (!target.empty()) {
      out.initial_adjustment = std::abs(target[0]) * norm1(big_omega_of(start.alpha));
      for (std::size_t n = 1; n < run.states.size() && n < target.size(); ++n) {
        double prev = run.states[n - 1].norms.total;
        double d = std::abs(run.c_comp[n] - run.c_in[n]) * norm1(big_omega_of(run.states[n].alpha));
        if (prev > 0) out.max_shadow_correction = std::max(out.max_shadow_correction, d / prev);
      }
    }
  }

  out.states = std::move(run.states);
  out.steps = std::move(run.steps);
  out.failure = run.failure;
  std::vector<double> norms;
  for (const auto& s : out.states) norms.push_back(s.norms.total);
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (i >= 3) {
      std::vector<double> head(norms.begin(), norms.begin() + static_cast<long>(i) + 1);
      out.theta_running.push_back(fit_theta(head, 2));
    } else {
      out.theta_running.push_back(std::nullopt);
    }
  }
  out.theta_hat = fit_theta(norms, 2);
  out.monotone_from_2 = norms.size() >= 4;
  for (std::size_t i = 2; i + 1 < norms.size(); ++i) {
    out.monotone_from_2 = out.monotone_from_2 && norms[i + 1] < norms[i];
  }
  return out;
}

double lambda_jn(const CFExpansion& cf, double sigma, double beta, long j, long n) {
  if (j < 0 || j > n) fail(ErrorCode::IndexOutOfRange, "lambda_jn needs 0 <= j <= n");
  if (!(sigma > 0) || beta < 0) fail(ErrorCode::InvalidArgument, "lambda_jn needs sigma > 0, beta >= 0");
  double log_num = cf.atilde(n + 1).log().to_double() + cf.atilde(n).log().to_double();
  double log_den = std::log(sigma) + (2.0 + beta) * cf.atilde(j - 1).log().to_double();
  return std::exp((log_num - log_den) / (2.0 + beta));
}

DecayProbe stable_decay_probe(const CFExpansion& cf, const RenormParams& p, int truncation,
                              long n, double beta) {
  if (n < 0) fail(ErrorCode::IndexOutOfRange, "decay probe needs n >= 0");
  if (truncation < 1) fail(ErrorCode::InvalidArgument, "decay probe needs truncation >= 1");
  std::vector<Frequency> freqs;
  for (long m = 0; m <= n; ++m) freqs.push_back(frequency_at(cf, static_cast<std::size_t>(m)));
  const double kappa = p.resolved_kappa();

  DecayProbe probe;
  probe.n = n;
  probe.truncation = truncation;
  double previous = 1.0;
  for (long j = n; j >= 0; --j) {
    const Vec2 wj = to_vec2(omega_of(freqs[j].alpha));
    double sup = 0;
    for (int k1 = -truncation; k1 <= truncation; ++k1) {
      int r = truncation - std::abs(k1);
      for (int k2 = -r; k2 <= r; ++k2) {
        Mode k0{k1, k2};
        if (k0.norm1() == 0 || !is_resonant(k0, wj, p.sigma)) continue;
        for (int i = 0; i < 2; ++i) {
          Real2 v{i == 0 ? 1.0 : 0.0, i == 1 ? 1.0 : 0.0};
          Mode k = k0;
          bool alive = true;
          for (long m = j; m <= n && alive; ++m) {
            const Frequency& fm = freqs[m];
            if (t_star(fm.a, k).norm1() > kappa * k.norm1()) {
              fail(ErrorCode::ConeViolation, "decay probe left the contracting cone");
            }
            k = t_star(fm.a, k);
            v = {fm.alpha_next * (-double(fm.a) * v[0] + v[1]), fm.alpha_next * v[0]};
            alive = is_resonant(k, to_vec2(omega_of(fm.alpha_next)), p.sigma);
          }
          if (!alive) continue;
          double col = norm1(v) * std::exp(p.rho_prime * (k.norm1() - k0.norm1()));
          sup = std::max(sup, col);
        }
      }
    }
    DecayRow row;
    row.j = j;
    row.norm = sup;
    row.log_ratio = sup > 0 ? std::log(previous / sup) : std::numeric_limits<double>::infinity();
    row.lambda = lambda_jn(cf, p.sigma, beta, j, n);
    probe.rows.push_back(row);
    previous = sup;
  }
  probe.log_ratio_increasing = probe.rows.size() >= 2;
  for (std::size_t i = 1; i < probe.rows.size(); ++i) {
    probe.log_ratio_increasing =
        probe.log_ratio_increasing && probe.rows[i].log_ratio > probe.rows[i - 1].log_ratio;
  }
  return probe;
}

RemainderProbe remainder_probe(const FourierVectorField& direction, const Frequency& freq,
                               const RenormParams& p, const std::vector<double>& fractions) {
  validate(p);
  if (fractions.size() < 2) fail(ErrorCode::InvalidArgument, "remainder probe needs two samples");
  FourierVectorField dir =
      project(direction, ConeSpec::far_resonant(omega_of(freq.alpha), p.sigma), Side::Inside);
  double dn = norm_r(dir, p.rho_prime);
  if (!(dn > 0)) fail(ErrorCode::InvalidArgument, "remainder probe needs a nonzero resonant direction");
  dir *= 1.0 / dn;

  RemainderProbe probe;
  probe.zeta = p.c_prime / (freq.alpha * freq.alpha_next);
  std::vector<double> lx, ly;
  for (double t : fractions) {
    if (!(t > 0 && t < 1)) fail(ErrorCode::InvalidArgument, "fractions must lie in (0, 1)");
    FourierVectorField f = dir;
    f *= t * probe.zeta;
    RenormState s;
    s.n = freq.n;
    s.alpha = freq.alpha;
    s.f = f;
    RenormState next = one_step(s, freq, p);
    FourierVectorField rem = next.f - linear_step(f, freq, p);
    RemainderSample sample;
    sample.norm = norm_r(f, p.rho_prime);
    sample.remainder = norm_r(rem, p.rho_prime);
    sample.bound = sample.norm * sample.norm / (probe.zeta * (probe.zeta - sample.norm));
    probe.samples.push_back(sample);
    lx.push_back(std::log(sample.norm));
    ly.push_back(std::log(sample.remainder));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= lx.size();
  my /= lx.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  probe.exponent = sxy / sxx;
  return probe;
}

double calibrate_c_prime(const std::vector<FourierVectorField>& directions, const Frequency& freq,
                         RenormParams p, int max_halvings) {
  validate(p);
  for (int h = 0; h <= max_halvings; ++h, p.c_prime *= 0.5) {
    const double zeta = p.c_prime / (freq.alpha * freq.alpha_next);
    bool ok = true;
    for (const auto& d : directions) {
      double dn = norm_r(d, p.rho_prime);
      if (!(dn > 0)) continue;
      FourierVectorField f = d;
      f *= 0.99 * zeta / dn;
      RenormState s;
      s.n = freq.n;
      s.alpha = freq.alpha;
      s.f = f;
      try {
        one_step(s, freq, p);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument || e.code() == ErrorCode::Internal) throw;
        ok = false;
        break;
      }
    }
    if (ok) return p.c_prime;
  }
  fail(ErrorCode::NoConvergence, "c' calibration failed");
}

}  // namespace torusrg
