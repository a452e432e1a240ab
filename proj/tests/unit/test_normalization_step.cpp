#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "torusrg/error.hpp"
#include "torusrg/normalization_step.hpp"

using namespace torusrg;

namespace {

const double kGolden = (1 + std::sqrt(5.0)) / 2;
const double kTwoPi = 2 * std::numbers::pi;
const Vec2 kPsi{1.0 / kGolden, 1.0};

void set_real(FourierVectorField& x, const Mode& k, const Vec2& f) {
  x.set(k, f);
  x.set(-k, {std::conj(f[0]), std::conj(f[1])});
}

FourierVectorField random_real(std::mt19937_64& rng, int modes_up_to, int truncation,
                               double scale, double rate) {
  std::normal_distribution<double> g(0.0, 1.0);
  FourierVectorField x(truncation, 1.0);
  for (int k1 = 0; k1 <= modes_up_to; ++k1) {
    for (int k2 = -modes_up_to; k2 <= modes_up_to; ++k2) {
      Mode k{k1, k2};
      if (k.norm1() == 0 || k.norm1() > modes_up_to || (k1 == 0 && k2 < 0)) continue;
      double s = scale * std::exp(-rate * k.norm1());
      set_real(x, k, {Complex(g(rng), g(rng)) * s, Complex(g(rng), g(rng)) * s});
    }
  }
  return x;
}

double max_diff(const FourierVectorField& a, const FourierVectorField& b) {
  double d = 0;
  for (const auto& [k, f] : a.modes()) d = std::max(d, norm1(Vec2{f[0] - b.coefficient(k)[0], f[1] - b.coefficient(k)[1]}));
  for (const auto& [k, f] : b.modes()) d = std::max(d, norm1(Vec2{f[0] - a.coefficient(k)[0], f[1] - a.coefficient(k)[1]}));
  return d;
}

// (I + Du)^{-1} X(theta + u(theta)) at a real point, straight from the series.
Vec2 direct_pullback(const FourierVectorField& x, const FourierVectorField& u, double t1,
                     double t2) {
  Vec2 uu = u.evaluate(t1, t2);
  Vec2 xv = x.evaluate(t1 + uu[0], t2 + uu[1]);
  Complex du[2][2] = {{0, 0}, {0, 0}};
  for (const auto& [k, f] : u.modes()) {
    Complex e = std::exp(Complex(0, kTwoPi) * (k.k1 * t1 + k.k2 * t2));
    for (int i = 0; i < 2; ++i) {
      du[i][0] += f[i] * Complex(0, kTwoPi * k.k1) * e;
      du[i][1] += f[i] * Complex(0, kTwoPi * k.k2) * e;
    }
  }
  Complex a = 1.0 + du[0][0], b = du[0][1], c = du[1][0], d = 1.0 + du[1][1];
  Complex det = a * d - b * c;
  return {(d * xv[0] - b * xv[1]) / det, (-c * xv[0] + a * xv[1]) / det};
}

}  // namespace

TEST_CASE("torus map basics") {
  TorusMap id = TorusMap::identity(8);
  CHECK(id.is_identity());
  FourierVectorField u(8, 0.9);
  set_real(u, {1, 2}, {Complex(1e-3, 2e-4), Complex(0, -1e-3)});
  TorusMap m(u);
  TorusMap back = TorusMap::from_json(m.to_json());
  CHECK(back.u.coefficient({1, 2})[0] == Complex(1e-3, 2e-4));
  CHECK(back.u.coefficient({-1, -2})[1] == Complex(0, 1e-3));
  CHECK_THROWS_AS(TorusMap::from_json(u.to_json()), Error);
  FourierVectorField bad(8, 0.9);
  bad.set({0, 0}, {1.0, 0.0});
  CHECK_THROWS_AS(TorusMap{bad}, Error);
}

TEST_CASE("compose_pullback with the identity is exact") {
  std::mt19937_64 rng(11);
  FourierVectorField x = random_real(rng, 6, 12, 1.0, 0.5);
  x.set({0, 0}, kPsi);
  PullbackResult r = compose_pullback(x, TorusMap::identity(12));
  CHECK(max_diff(r.field, x) == 0.0);
}

TEST_CASE("compose_pullback with a vanishing map on the grid reproduces X") {
  std::mt19937_64 rng(12);
  FourierVectorField x = random_real(rng, 8, 16, 1.0, 0.4);
  x.set({0, 0}, kPsi);
  FourierVectorField u(16, 0.9);
  set_real(u, {2, -1}, {Complex(1e-300), Complex(0)});
  PullbackResult r = compose_pullback(x, TorusMap(u));
  CHECK(r.grid_size >= 65);
  CHECK(max_diff(r.field, x) < 1e-12);
}

TEST_CASE("compose_pullback matches pointwise evaluation") {
  std::mt19937_64 rng(13);
  FourierVectorField x = random_real(rng, 4, 24, 0.2, 0.3);
  x.set({0, 0}, kPsi);
  FourierVectorField u = random_real(rng, 3, 24, 3e-4, 0.5);
  u.erase({0, 0});
  PullbackResult r = compose_pullback(x, TorusMap(u));
  CHECK(r.taylor_order >= 2);
  CHECK(r.max_jacobian > 0);
  CHECK(r.max_jacobian < 0.5);
  for (double t1 : {0.0, 0.137, 0.61}) {
    for (double t2 : {0.05, 0.42, 0.9}) {
      Vec2 want = direct_pullback(x, u, t1, t2);
      Vec2 got = r.field.evaluate(t1, t2);
      INFO(t1, " ", t2, " ", got[0], " ", want[0]);
      CHECK(std::abs(got[0] - want[0]) < 1e-11);
      CHECK(std::abs(got[1] - want[1]) < 1e-11);
    }
  }
  CHECK(r.field.is_real(0.0));
}

TEST_CASE("compose_pullback linearises to -(Dv) psi for constant fields") {
  FourierVectorField x = FourierVectorField::constant(kPsi, 16);
  FourierVectorField v(16, 0.9);
  set_real(v, {1, -1}, {Complex(0.3, 0.1), Complex(-0.2, 0.05)});
  set_real(v, {2, 1}, {Complex(0.0, 0.2), Complex(0.1, 0.0)});
  const double eps = 1e-6;
  FourierVectorField up = v, um = v;
  up *= eps;
  um *= -eps;
  FourierVectorField d = compose_pullback(x, TorusMap(up)).field - compose_pullback(x, TorusMap(um)).field;
  d *= 1.0 / (2 * eps);
  for (const auto& [k, f] : v.modes()) {
    Complex s = Complex(0, -kTwoPi) * (kPsi[0] * double(k.k1) + kPsi[1] * double(k.k2));
    CHECK(std::abs(d.coefficient(k)[0] - s * f[0]) < 1e-7);
    CHECK(std::abs(d.coefficient(k)[1] - s * f[1]) < 1e-7);
  }
  // The average is untouched to first order.
  CHECK(norm1(d.coefficient({0, 0})) < 1e-7);
}

TEST_CASE("compose_pullback rejects a coarse grid") {
  FourierVectorField x = FourierVectorField::constant(kPsi, 8);
  FourierVectorField u(8, 0.9);
  set_real(u, {1, 0}, {Complex(1e-3), Complex(0)});
  GridOptions g;
  g.size = 20;
  CHECK_THROWS_AS(compose_pullback(x, TorusMap(u), g), Error);
}

TEST_CASE("compose_pullback reports a singular Jacobian") {
  FourierVectorField x = FourierVectorField::constant(kPsi, 4);
  FourierVectorField u(4, 0.9);
  set_real(u, {1, 0}, {Complex(0.5 / kTwoPi), Complex(0)});
  // det DU = 1 - sin(2 pi theta1) vanishes at theta1 = 1/4, a node of the real grid.
  GridOptions g;
  g.shift = 0;
  g.size = 20;
  try {
    compose_pullback(x, TorusMap(u), g);
    FAIL("expected SingularJacobian");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularJacobian);
  }
}

TEST_CASE("radius and contraction constants") {
  double s6 = std::sqrt(6.0);
  CHECK(eps_hat_radius(0.1, 1.0, 0.9, 1.0) ==
        doctest::Approx((s6 - 2) / 12 * 0.1 * std::min(0.1 / (4 * std::numbers::pi), (3 - s6) / 6 * 0.1)));
  CHECK(elimination_contraction_factor(0.1, 1.0) == doctest::Approx(2 * (1 + 60 * (s6 + 2))));
}

TEST_CASE("eliminate_far leaves resonant input untouched") {
  EliminationOptions opt;
  opt.sigma = 0.1 / kGolden;
  EliminationResult r = eliminate_far(FourierVectorField::constant(kPsi, 16), kPsi, opt);
  CHECK(r.map.is_identity());
  CHECK(r.sweeps == 0);
  CHECK(r.field.coefficient({0, 0}) == kPsi);

  FourierVectorField x = FourierVectorField::constant(kPsi, 16);
  Mode k{-3, 2};
  REQUIRE(is_resonant(k, kPsi, opt.sigma));
  set_real(x, k, {Complex(1e-3, 1e-4), Complex(-2e-3)});
  r = eliminate_far(x, kPsi, opt);
  CHECK(r.map.is_identity());
  CHECK(max_diff(r.field, x) == 0.0);
}

TEST_CASE("single far mode converges quadratically") {
  EliminationOptions opt;
  opt.sigma = 0.1 / kGolden;
  opt.tol = 1e-14;
  FourierVectorField g(16, 1.0);
  Mode k{1, 1};
  REQUIRE(!is_resonant(k, kPsi, opt.sigma));
  const double eps = 1e-6;
  set_real(g, k, {Complex(eps), Complex(0, eps)});
  EliminationResult r = eliminate_far_perturbation(g, kPsi, opt);
  CHECK(r.sweeps <= 3);
  CHECK(r.far_residual <= 1e-14);
  REQUIRE(r.residuals.size() >= 2);
  CHECK(r.residuals[1] < 1e3 * eps * eps);
  CHECK(r.contraction_ok);
}

TEST_CASE("random perturbation at 1e-3 reaches 1e-12 in at most six sweeps") {
  std::mt19937_64 rng(21);
  EliminationOptions opt;
  opt.sigma = 0.1 / kGolden;
  FourierVectorField g = random_real(rng, 32, 32, 1.0, 1.2);
  g.erase({0, 0});
  g *= 1e-3 / norm_r(g, 1.0);
  EliminationResult r = eliminate_far_perturbation(g, kPsi, opt);
  CHECK(r.sweeps <= 6);
  CHECK(r.far_residual <= 1e-12);
  CHECK(r.grid_size == 135);
  CHECK(r.field.is_real(0.0));
  CHECK(r.map.u.is_real(0.0));
  CHECK(r.contraction_ok);
  // log-residual slopes
  for (std::size_t i = 2; i + 1 < r.residuals.size(); ++i) {
    if (r.residuals[i] < 1e-14 || r.residuals[i - 1] > 1e-4) continue;
    double order = std::log(r.residuals[i]) / std::log(r.residuals[i - 1]);
    CHECK(order >= 1.5);
  }
}

TEST_CASE("derivative at psi is the resonant projection") {
  std::mt19937_64 rng(31);
  EliminationOptions opt;
  opt.sigma = 0.1 / kGolden;
  opt.tol = 1e-17;
  FourierVectorField f = random_real(rng, 10, 16, 1.0, 0.8);
  f.erase({0, 0});
  f *= 1.0 / norm_r(f, 1.0);
  const double eps = 1e-6;
  FourierVectorField g = f;
  g *= eps;
  EliminationResult r = eliminate_far_perturbation(g, kPsi, opt);
  FourierVectorField d = r.field;
  d *= 1.0 / eps;
  FourierVectorField want = project(f, ConeSpec::far_resonant(kPsi, opt.sigma), Side::Inside);
  CHECK(max_diff(d, want) < 1e-8);
}
