#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "torusrg/error.hpp"
#include "torusrg/fourier_field.hpp"

using namespace torusrg;

namespace {

const double kGolden = (1 + std::sqrt(5.0)) / 2;
const double kPi = std::numbers::pi;

FourierVectorField random_real_field(std::mt19937_64& rng, int truncation, double scale) {
  std::normal_distribution<double> g(0.0, 1.0);
  FourierVectorField x(truncation, 1.0);
  for (int k1 = -truncation; k1 <= truncation; ++k1) {
    for (int k2 = -truncation; k2 <= truncation; ++k2) {
      Mode k{k1, k2};
      if (k.norm1() > truncation || k < Mode{0, 0} || k == Mode{0, 0}) continue;
      double damp = scale * std::exp(-1.5 * k.norm1());
      Vec2 f{Complex(g(rng), g(rng)) * damp, Complex(g(rng), g(rng)) * damp};
      x.set(k, f);
      x.set(-k, {std::conj(f[0]), std::conj(f[1])});
    }
  }
  return x;
}

}  // namespace

TEST_CASE("weighted norms") {
  const double eps = 1e-3;
  FourierVectorField omega = FourierVectorField::constant(Real2{1.0, kGolden});
  CHECK(norm_r(omega, 0.3) == doctest::Approx(1 + kGolden));
  CHECK(norm_r(omega, 1.7) == doctest::Approx(1 + kGolden));
  FourierVectorField single(32, 1.0);
  single.set({1, 0}, {eps, 0});
  CHECK(norm_r(single, 1.0) == doctest::Approx(eps * std::exp(1.0)));
  CHECK(norm_r(omega + single, 1.0) == doctest::Approx(1 + kGolden + eps * std::exp(1.0)));

  CHECK(norm_prime_r(omega, 0.9) == doctest::Approx(norm_r(omega, 0.9)));
  FourierVectorField diag(32, 1.0);
  diag.set({1, -1}, {0, eps});
  CHECK(norm_prime_r(diag, 0.5) == doctest::Approx(eps * (1 + 4 * kPi) * std::exp(1.0)));

  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    FourierVectorField x = random_real_field(rng, 12, 1.0);
    CHECK(norm_prime_r(x, 0.9) >= norm_r(x, 0.9));
    CHECK(norm_r(x, 0.5) <= norm_r(x, 0.9));
  }
  CHECK_THROWS_AS(norm_r(omega, 0.0), Error);
}

TEST_CASE("truncation drops modes and records their mass") {
  FourierVectorField x(3, 1.0);
  x.set({2, 2}, {1.0, 0.0});
  CHECK(x.empty());
  CHECK(x.discarded_mass() == doctest::Approx(std::exp(4.0)));
  x.set({1, 2}, {1.0, 0.0});
  CHECK(x.size() == 1);
}

TEST_CASE("far-from-resonance projection") {
  const Real2 psi{1.0, kGolden};
  ConeSpec cone = ConeSpec::far_resonant(psi, 0.25);
  CHECK(cone.inside({-3, 2}));
  CHECK_FALSE(cone.inside({1, 1}));
  CHECK(cone.inside({0, 0}));
  ConeSpec tiny = ConeSpec::far_resonant(Real2{2.0, -0.5}, 1e-9);
  CHECK(tiny.inside({0, 0}));
  CHECK_THROWS_AS(ConeSpec::far_resonant(psi, 3.0), Error);
  CHECK_THROWS_AS(ConeSpec::kappa(1, 0.4), Error);

  std::mt19937_64 rng(2);
  FourierVectorField x = random_real_field(rng, 16, 1.0);
  x.set({0, 0}, {1.0, kGolden});
  for (const ConeSpec& c : {cone, ConeSpec::kappa(1, 0.7667), ConeSpec::kappa(2, 0.9)}) {
    FourierVectorField in = project(x, c, Side::Inside);
    FourierVectorField out = project(x, c, Side::Outside);
    CHECK(in.size() + out.size() == x.size());
    FourierVectorField sum = in + out;
    CHECK(sum.modes() == x.modes());
    CHECK(project(in, c, Side::Inside).modes() == in.modes());
    CHECK(project(out, c, Side::Outside).modes() == out.modes());
    CHECK(project(in, c, Side::Outside).empty());
    CHECK(norm_r(in, 0.9) <= norm_r(x, 0.9));
    CHECK(norm_r(out, 0.9) <= norm_r(x, 0.9));
  }
}

TEST_CASE("resonant modes are contracted by T_a^* (exhaustive)") {
  const double sigma = 0.1;
  const double kappa = 1 - (1 - 3 * sigma) / 3;
  struct Case {
    double alpha;
    long a;
  };
  for (Case c : {Case{kGolden, 1}, Case{std::sqrt(2.0), 1}, Case{1 + std::sqrt(2.0), 2}}) {
    ConeSpec res = ConeSpec::far_resonant(Real2{1.0, c.alpha}, sigma);
    ConeSpec cont = ConeSpec::kappa(c.a, kappa);
    int witnesses = 0;
    for (int k1 = -50; k1 <= 50; ++k1) {
      for (int k2 = -50; k2 <= 50; ++k2) {
        Mode k{k1, k2};
        if (k.norm1() > 50 || k.norm1() == 0 || !res.inside(k)) continue;
        if (!cont.inside(k)) ++witnesses;
      }
    }
    CHECK(witnesses == 0);
  }
}

TEST_CASE("average") {
  FourierVectorField omega = FourierVectorField::constant(Real2{1.0, kGolden});
  CHECK(average(omega)[1] == Complex(kGolden));
  std::mt19937_64 rng(3);
  FourierVectorField f = random_real_field(rng, 8, 1e-2);
  CHECK(average(f)[0] == Complex(0));
  CHECK(average(omega + f)[1] == Complex(kGolden));
}

TEST_CASE("json round trip and evaluation") {
  std::mt19937_64 rng(4);
  FourierVectorField x = random_real_field(rng, 6, 1.0);
  x.set({0, 0}, {1.0, 2.0});
  FourierVectorField y = FourierVectorField::from_json(x.to_json());
  CHECK(y.modes() == x.modes());
  CHECK(y.truncation() == x.truncation());
  CHECK(x.is_real(0.0));
  Vec2 v = x.evaluate(0.3, 0.7);
  CHECK(std::abs(v[0].imag()) < 1e-12);
  CHECK_THROWS_AS(FourierVectorField::from_json("{\"modes\": 3}"), Error);
}

TEST_CASE("winding ratio of torus flows") {
  const Real2 omega{1.0, kGolden};
  FourierVectorField w = FourierVectorField::constant(omega, 16, 1.0);
  WindingReport r = winding_ratio(w);
  CHECK(r.direction[0] == doctest::Approx(1 / (1 + kGolden)).epsilon(1e-12));
  CHECK(r.slope == doctest::Approx(kGolden).epsilon(1e-12));
  CHECK(r.observed.size() == 1);

  // Small resonant perturbation keeps the winding ratio.
  FourierVectorField x = w;
  ConeSpec res = ConeSpec::far_resonant(omega, 0.1);
  Vec2 f{Complex(0, 2e-4), Complex(0, -1e-4)};
  x.set({-3, 2}, f);
  x.set({3, -2}, {std::conj(f[0]), std::conj(f[1])});
  REQUIRE(res.inside({-3, 2}));
  WindingReport rx = winding_ratio(x);
  CHECK(std::abs(rx.slope - kGolden) < 1e-3);

  // A constant push along (1, -1/gamma) changes the slope.
  FourierVectorField y = w;
  y.set({0, 0}, {1.0 + 0.05, kGolden - 0.05 / kGolden});
  WindingReport ry = winding_ratio(y);
  CHECK(std::abs(ry.slope - kGolden) > 1e-2);

  FourierVectorField still = FourierVectorField::constant(Real2{0.0, 0.0}, 4, 1.0);
  WindingOptions quick;
  quick.horizon = 10;
  CHECK_THROWS_AS(winding_ratio(still, quick), Error);
}
