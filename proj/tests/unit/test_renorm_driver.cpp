#include <doctest.h>

#include <cmath>
#include <random>

#include "torusrg/error.hpp"
#include "torusrg/renorm_driver.hpp"

using namespace torusrg;

namespace {

const double kGolden = (1 + std::sqrt(5.0)) / 2;

FourierVectorField random_resonant(std::mt19937_64& rng, double alpha, double sigma,
                                   int truncation, double amplitude, double rho_prime) {
  std::normal_distribution<double> g(0.0, 1.0);
  FourierVectorField x(truncation, rho_prime);
  for (int k1 = 0; k1 <= truncation; ++k1) {
    for (int k2 = -truncation; k2 <= truncation; ++k2) {
      Mode k{k1, k2};
      if (k.norm1() == 0 || k.norm1() > truncation || (k1 == 0 && k2 < 0)) continue;
      if (!is_resonant(k, to_vec2(omega_of(alpha)), sigma)) continue;
      double s = std::exp(-1.5 * k.norm1());
      Vec2 f{Complex(g(rng), g(rng)) * s, Complex(g(rng), g(rng)) * s};
      x.set(k, f);
      x.set(-k, {std::conj(f[0]), std::conj(f[1])});
    }
  }
  x *= amplitude / norm_r(x, rho_prime);
  return x;
}

}  // namespace

TEST_CASE("frequency data along the golden expansion") {
  CFExpansion cf = cf_expand(Slope::golden(), 12);
  for (std::size_t n = 0; n < 10; ++n) {
    Frequency f = frequency_at(cf, n);
    CHECK(f.a == 1);
    CHECK(f.alpha == doctest::Approx(kGolden).epsilon(1e-15));
    CHECK(f.frac == doctest::Approx(1 / kGolden).epsilon(1e-15));
    CHECK(f.alpha_next * f.frac == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("constant block") {
  ConstantBlock b = constant_block(kGolden);
  CHECK(b.nu == doctest::Approx(-kGolden * kGolden).epsilon(1e-14));
  CHECK(b.mu == doctest::Approx(-kGolden * kGolden).epsilon(1e-14));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.01, 9.0);
  for (int trial = 0; trial < 50; ++trial) {
    double alpha = u(rng);
    ConstantBlock c = constant_block(alpha);
    const auto& g = c.g;
    CHECK(std::abs(g[0] * g[3] - g[1] * g[2]) < 1e-12 * (1 + std::abs(g[0] * g[3])));
    CHECK(std::abs(g[0] + g[1] * alpha) < 1e-12 * alpha);
    CHECK(std::abs(g[2] + g[3] * alpha) < 1e-12 * alpha);
    Real2 v = c.unstable;
    Real2 gv{g[0] * v[0] + g[1] * v[1], g[2] * v[0] + g[3] * v[1]};
    CHECK(gv[0] == doctest::Approx(c.nu * v[0]).epsilon(1e-12));
    CHECK(gv[1] == doctest::Approx(c.nu * v[1]).epsilon(1e-12));
    CHECK(std::abs(c.nu) > 1);

    // G = alpha' (I - omega' omega_hat'^T) T^{-1}
    double a = std::floor(alpha), x = alpha - a, ap = 1 / x;
    double w2 = 1 + ap * ap;
    double p[4] = {1 - 1 / w2, -ap / w2, -ap / w2, 1 - ap * ap / w2};
    double ti[4] = {-a, 1, 1, 0};
    double want[4] = {ap * (p[0] * ti[0] + p[1] * ti[2]), ap * (p[0] * ti[1] + p[1] * ti[3]),
                      ap * (p[2] * ti[0] + p[3] * ti[2]), ap * (p[2] * ti[1] + p[3] * ti[3])};
    for (int i = 0; i < 4; ++i) CHECK(g[i] == doctest::Approx(want[i]).epsilon(1e-12).scale(1));
  }
  CHECK_THROWS_AS(constant_block(0.5), Error);
}

TEST_CASE("transient step") {
  RenormParams p;
  FourierVectorField zero(16, 0.9);
  TransientResult t = transient_step(zero, Slope::golden(), p);
  CHECK(t.applied.empty());

  Slope inv = act_on_slope(GL2ZMatrix::S(), Slope::golden());
  t = transient_step(zero, inv, p);
  REQUIRE(t.applied.size() >= 1);
  CHECK(t.applied[0] == "S");
  CHECK(t.slope.to_double() == doctest::Approx(kGolden).epsilon(1e-15));

  Slope neg = act_on_slope(GL2ZMatrix::V(), Slope::golden());
  CHECK(neg.to_double() == doctest::Approx(-kGolden));
  t = transient_step(zero, neg, p);
  CHECK(t.applied[0] == "V");
  CHECK(t.slope.to_double() == doctest::Approx(kGolden).epsilon(1e-15));

  try {
    transient_step(zero, Slope::rational(0, 1), p);
    FAIL("expected ZeroSlope");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroSlope);
  }

  // V sends the mode (3, 2) to (-3, 2) and the field to (-f1, f2), then the
  // frequency (-1, -alpha) is rescaled to (1, alpha).
  FourierVectorField f(16, 0.9);
  f.set({3, 2}, {Complex(1e-4), Complex(2e-4)});
  t = transient_step(f, neg, p);
  CHECK(t.newton_sweeps == 0);
  Vec2 c = t.f.coefficient({-3, 2});
  CHECK(c[0] == Complex(1e-4));
  CHECK(c[1] == Complex(-2e-4));
}

TEST_CASE("fixed point and periodic frequency orbits") {
  RenormParams p;
  CFExpansion cf = cf_expand(Slope::golden(), 6);
  RenormState s;
  s.alpha = cf.tail(0).to_double();
  s.f = FourierVectorField(32, 0.9);
  StepReport rep;
  RenormState next = one_step(s, frequency_at(cf, 0), p, &rep);
  CHECK(next.alpha == doctest::Approx(kGolden).epsilon(1e-15));
  CHECK(next.norms.total == 0.0);
  CHECK(rep.frequency_defect < 1e-15);

  CFExpansion cf2 = cf_expand(Slope::sqrt2(), 12);
  for (std::size_t n = 1; n < 10; ++n) {
    Frequency f = frequency_at(cf2, n);
    CHECK(f.a == 2);
    CHECK(std::abs(f.alpha - (1 + std::sqrt(2.0))) < 1e-12);
    RenormState t;
    t.n = n;
    t.alpha = f.alpha;
    t.f = FourierVectorField(32, 0.9);
    StepReport r;
    RenormState u = one_step(t, f, p, &r);
    CHECK(std::abs(u.alpha - (1 + std::sqrt(2.0))) < 1e-12);
    CHECK(r.frequency_defect < 1e-12);
  }
}

TEST_CASE("unstable constant direction grows by nu") {
  RenormParams p;
  CFExpansion cf = cf_expand(Slope::golden(), 6);
  RenormState s;
  s.alpha = cf.tail(0).to_double();
  s.f = FourierVectorField::constant(big_omega_of(s.alpha), 32, 0.9);
  s.f *= 1e-6;
  s.norms = measure(s.f, s.alpha, p.sigma, p.rho_prime);
  for (std::size_t n = 0; n < 3; ++n) {
    RenormState next = one_step(s, frequency_at(cf, n), p);
    CHECK(next.norms.const_Omega / s.norms.const_Omega ==
          doctest::Approx(kGolden * kGolden).epsilon(1e-4));
    CHECK(next.norms.const_omega < 1e-18);
    s = next;
  }
}

TEST_CASE("winding cone check") {
  RenormState s;
  s.alpha = kGolden;
  s.f = FourierVectorField(8, 0.9);
  CHECK(winding_cone_check(s, 0.9).pass);
  const double d = 1e-5;
  s.f.set({0, 0}, {Complex(d), Complex(-d / kGolden)});
  CHECK_FALSE(winding_cone_check(s, 0.9).pass);
  double size = 10 * d * norm1(big_omega_of(kGolden));
  s.f.set({3, -2}, {Complex(size / (2 * std::exp(0.9 * 5))), Complex(0)});
  s.f.set({-3, 2}, {Complex(size / (2 * std::exp(0.9 * 5))), Complex(0)});
  WindingConeCheck w = winding_cone_check(s, 0.9);
  CHECK(w.pass);
  CHECK(w.rhs == doctest::Approx(size));
}

TEST_CASE("Lambda_{j,n}") {
  CFExpansion cf = cf_expand(Slope::golden(), 20);
  CHECK(lambda_jn(cf, 0.1, 0.0, 0, 3) == doctest::Approx(std::sqrt(std::pow(kGolden, 9) / 0.1)));
  for (long n = 1; n < 10; ++n) {
    CHECK(lambda_jn(cf, 0.1, 0.0, 0, n + 1) > lambda_jn(cf, 0.1, 0.0, 0, n));
    for (long j = 1; j <= n; ++j) {
      CHECK(lambda_jn(cf, 0.1, 0.0, j, n) < lambda_jn(cf, 0.1, 0.0, j - 1, n));
    }
  }
  CHECK_THROWS_AS(lambda_jn(cf, 0.1, 0.0, 4, 3), Error);
}

TEST_CASE("stable decay probe") {
  CFExpansion cf = cf_expand(Slope::golden(), 12);
  RenormParams p;
  DecayProbe probe = stable_decay_probe(cf, p, 150, 6);
  REQUIRE(probe.rows.size() == 7);
  CHECK(probe.log_ratio_increasing);
  for (std::size_t i = 1; i < probe.rows.size(); ++i) {
    CHECK(probe.rows[i].norm < probe.rows[i - 1].norm);
  }
}

TEST_CASE("geometric fit") {
  std::vector<double> v;
  for (int i = 0; i < 8; ++i) v.push_back(3.0 * std::pow(0.25, i));
  CHECK(*fit_theta(v, 2) == doctest::Approx(0.25));
  v[5] = 0;
  CHECK_FALSE(fit_theta(v, 2).has_value());
}

TEST_CASE("one_step matches its linearisation to second order") {
  std::mt19937_64 rng(41);
  RenormParams p;
  CFExpansion cf = cf_expand(Slope::golden(), 6);
  Frequency f0 = frequency_at(cf, 0);
  FourierVectorField dir = random_resonant(rng, f0.alpha, p.sigma, 24, 1.0, p.rho_prime);
  dir.set({0, 0}, {Complex(0.2), Complex(-0.2 / kGolden)});
  RemainderProbe r = remainder_probe(dir, f0, p);
  REQUIRE(r.samples.size() == 2);
  CHECK(r.exponent == doctest::Approx(2.0).epsilon(0.1));
  for (const auto& s : r.samples) CHECK(s.remainder <= s.bound);
}

TEST_CASE("fixed point orbit stays at the fixed point") {
  RenormParams p;
  OrbitOptions o;
  o.steps = 10;
  OrbitResult r = renorm_orbit(FourierVectorField(32, 0.9), Slope::golden(), p, o);
  CHECK_FALSE(r.failure.has_value());
  REQUIRE(r.states.size() == 11);
  for (const auto& s : r.states) CHECK(s.norms.total == 0.0);
}

TEST_CASE("short orbit with a resonant perturbation decays") {
  std::mt19937_64 rng(7);
  RenormParams p;
  OrbitOptions o;
  o.steps = 4;
  FourierVectorField f = random_resonant(rng, kGolden, p.sigma, 32, 1e-3, p.rho_prime);
  OrbitResult r = renorm_orbit(f, Slope::golden(), p, o);
  REQUIRE_FALSE(r.failure.has_value());
  CHECK(r.stable_manifold);
  for (std::size_t i = 1; i < r.states.size(); ++i) {
    CHECK(r.states[i].norms.total < r.states[i - 1].norms.total);
  }
  CHECK(r.max_shadow_correction < 1e-6);
  CHECK(r.shooting_converged);
}
