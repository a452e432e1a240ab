#include "torusrg/fourier_field.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <json.hpp>
#include <numbers>

#include "torusrg/error.hpp"

namespace torusrg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double weight(const Mode& k, double r) { return std::exp(r * k.norm1()); }

}  // namespace

FourierVectorField::FourierVectorField(int truncation, double width)
    : truncation_(truncation), width_(width) {
  if (truncation < 0) fail(ErrorCode::InvalidArgument, "truncation must be >= 0");
  if (!(width > 0)) fail(ErrorCode::InvalidArgument, "width must be > 0");
}

FourierVectorField FourierVectorField::constant(const Vec2& value, int truncation, double width) {
  FourierVectorField out(truncation, width);
  out.set({0, 0}, value);
  return out;
}

void FourierVectorField::set_width(double width) {
  if (!(width > 0)) fail(ErrorCode::InvalidArgument, "width must be > 0");
  width_ = width;
}

Vec2 FourierVectorField::coefficient(const Mode& k) const {
  auto it = modes_.find(k);
  return it == modes_.end() ? Vec2{} : it->second;
}

void FourierVectorField::set(const Mode& k, const Vec2& value) {
  if (!admits(k)) {
    discarded_ += norm1(value) * weight(k, width_);
    return;
  }
  modes_[k] = value;
}

void FourierVectorField::add(const Mode& k, const Vec2& value) {
  if (!admits(k)) {
    discarded_ += norm1(value) * weight(k, width_);
    return;
  }
  Vec2& slot = modes_[k];
  slot[0] += value[0];
  slot[1] += value[1];
}

void FourierVectorField::prune() {
  std::erase_if(modes_, [](const auto& kv) {
    return kv.second[0] == Complex(0) && kv.second[1] == Complex(0);
  });
}

bool FourierVectorField::is_real(double tol) const {
  for (const auto& [k, f] : modes_) {
    Vec2 g = coefficient(-k);
    if (std::abs(g[0] - std::conj(f[0])) > tol || std::abs(g[1] - std::conj(f[1])) > tol) {
      return false;
    }
  }
  return true;
}

FourierVectorField& FourierVectorField::operator+=(const FourierVectorField& rhs) {
  for (const auto& [k, f] : rhs.modes_) add(k, f);
  discarded_ += rhs.discarded_;
  return *this;
}

FourierVectorField& FourierVectorField::operator-=(const FourierVectorField& rhs) {
  for (const auto& [k, f] : rhs.modes_) add(k, {-f[0], -f[1]});
  discarded_ += rhs.discarded_;
  return *this;
}

FourierVectorField& FourierVectorField::operator*=(Complex s) {
  for (auto& [k, f] : modes_) {
    f[0] *= s;
    f[1] *= s;
  }
  discarded_ *= std::abs(s);
  return *this;
}

Vec2 FourierVectorField::evaluate(Complex theta1, Complex theta2) const {
  Vec2 out{};
  const Complex i(0, 1);
  for (const auto& [k, f] : modes_) {
    Complex e = std::exp(i * kTwoPi * (double(k.k1) * theta1 + double(k.k2) * theta2));
    out[0] += f[0] * e;
    out[1] += f[1] * e;
  }
  return out;
}

std::string FourierVectorField::to_json(const std::string& kind) const {
  nlohmann::json j;
  j["kind"] = kind;
  j["width"] = width_;
  j["truncation"] = truncation_;
  j["discarded_mass"] = discarded_;
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& [k, f] : modes_) {
    modes.push_back({{"k", {k.k1, k.k2}},
                     {"re", {f[0].real(), f[1].real()}},
                     {"im", {f[0].imag(), f[1].imag()}}});
  }
  j["modes"] = std::move(modes);
  return j.dump(1);
}

FourierVectorField FourierVectorField::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("field JSON: ") + e.what());
  }
  try {
    FourierVectorField out(j.value("truncation", 32), j.value("width", 1.0));
    for (const auto& m : j.at("modes")) {
      auto k = m.at("k").get<std::array<int, 2>>();
      auto re = m.at("re").get<std::array<double, 2>>();
      Real2 im{0, 0};
      if (m.contains("im")) im = m.at("im").get<std::array<double, 2>>();
      out.add({k[0], k[1]}, {Complex(re[0], im[0]), Complex(re[1], im[1])});
    }
    out.discarded_ += j.value("discarded_mass", 0.0);
    return out;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("field JSON: ") + e.what());
  }
}

double norm_r(const FourierVectorField& x, double r) {
  if (!(r > 0)) fail(ErrorCode::InvalidArgument, "norm width must be > 0");
  double s = 0;
  for (const auto& [k, f] : x.modes()) s += norm1(f) * weight(k, r);
  return s;
}

double norm_prime_r(const FourierVectorField& x, double r) {
  if (!(r > 0)) fail(ErrorCode::InvalidArgument, "norm width must be > 0");
  double s = 0;
  for (const auto& [k, f] : x.modes()) s += (1.0 + kTwoPi * k.norm1()) * norm1(f) * weight(k, r);
  return s;
}

Vec2 average(const FourierVectorField& x) { return x.coefficient({0, 0}); }

FourierVectorField oscillatory_part(const FourierVectorField& x) {
  FourierVectorField out = x;
  out.erase({0, 0});
  return out;
}

ConeSpec ConeSpec::far_resonant(const Vec2& psi, double sigma) {
  if (!(sigma > 0)) fail(ErrorCode::InvalidArgument, "cone needs sigma > 0");
  if (!(sigma < norm1(psi))) fail(ErrorCode::InvalidArgument, "cone needs sigma < |psi|");
  return ConeSpec(FarResonant{psi, sigma});
}

ConeSpec ConeSpec::kappa(long a, double kappa) {
  if (a < 1) fail(ErrorCode::InvalidArgument, "cone needs a >= 1");
  if (!(kappa > 0.5 && kappa < 1.0)) fail(ErrorCode::InvalidArgument, "cone needs 1/2 < kappa < 1");
  return ConeSpec(Kappa{a, kappa});
}

bool is_resonant(const Mode& k, const Vec2& psi, double sigma) {
  return std::abs(psi[0] * double(k.k1) + psi[1] * double(k.k2)) <= sigma * k.norm1();
}

bool ConeSpec::inside(const Mode& k) const {
  if (is_far_resonant()) return is_resonant(k, far().psi, far().sigma);
  const Kappa& c = kappa_spec();
  return t_star(c.a, k).norm1() <= c.kappa * k.norm1();
}

FourierVectorField project(const FourierVectorField& x, const ConeSpec& cone, Side side) {
  FourierVectorField out(x.truncation(), x.width());
  const bool want_inside = side == Side::Inside;
  for (const auto& [k, f] : x.modes()) {
    if (cone.inside(k) == want_inside) out.set(k, f);
  }
  return out;
}

// ------------------------------------------------------------ winding

namespace {

class RealFieldRhs {
 public:
  explicit RealFieldRhs(const FourierVectorField& x) : n_(x.truncation()) {
    for (const auto& [k, f] : x.modes()) terms_.push_back({k, f});
    e1_.resize(2 * n_ + 1);
    e2_.resize(2 * n_ + 1);
  }

  void operator()(const Real2& theta, Real2& dtheta, double /*t*/) {
    powers(theta[0], e1_);
    powers(theta[1], e2_);
    Complex s0 = 0, s1 = 0;
    for (const auto& term : terms_) {
      Complex e = e1_[term.k.k1 + n_] * e2_[term.k.k2 + n_];
      s0 += term.f[0] * e;
      s1 += term.f[1] * e;
    }
    dtheta = {s0.real(), s1.real()};
  }

 private:
  struct Term {
    Mode k;
    Vec2 f;
  };

  void powers(double t, std::vector<Complex>& out) const {
    Complex z = std::polar(1.0, kTwoPi * (t - std::floor(t)));
    out[n_] = 1.0;
    for (int j = 1; j <= n_; ++j) {
      out[n_ + j] = out[n_ + j - 1] * z;
      out[n_ - j] = std::conj(out[n_ + j]);
    }
  }

  int n_;
  std::vector<Term> terms_;
  std::vector<Complex> e1_, e2_;
};

Real2 l1_unit(const Real2& v) {
  double n = norm1(v);
  return n > 0 ? Real2{v[0] / n, v[1] / n} : Real2{0, 0};
}

double l1_distance(const Real2& a, const Real2& b) {
  return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]);
}

WindingSample integrate_sample(const FourierVectorField& x, const Real2& start,
                               const WindingOptions& opt) {
  namespace ode = boost::numeric::odeint;
  RealFieldRhs rhs(x);
  auto stepper = ode::make_dense_output(opt.integrator_tol, opt.integrator_tol,
                                        ode::runge_kutta_dopri5<Real2>());
  stepper.initialize(start, 0.0, 1e-3);
  std::vector<std::pair<double, Real2>> history;
  WindingSample s;
  s.start = start;
  double threshold = opt.growth_threshold;
  while (stepper.current_time() < opt.horizon) {
    stepper.do_step(std::ref(rhs));
    const Real2& th = stepper.current_state();
    Real2 disp{th[0] - start[0], th[1] - start[1]};
    double t = stepper.current_time();
    history.push_back({t, disp});
    s.time = t;
    s.displacement = disp;
    if (norm1(disp) < threshold) continue;
    s.grew = true;
    Real2 dir = l1_unit(disp);
    double window_start = 0.9 * t;
    double worst = 0;
    for (auto it = history.rbegin(); it != history.rend() && it->first >= window_start; ++it) {
      worst = std::max(worst, l1_distance(l1_unit(it->second), dir));
    }
    s.direction = dir;
    if (worst <= opt.tol) {
      s.settled = true;
      break;
    }
    threshold *= 1.5;
  }
  return s;
}

}  // namespace

WindingReport winding_ratio(const FourierVectorField& x, const WindingOptions& options) {
  if (options.samples < 1) fail(ErrorCode::InvalidArgument, "winding_ratio needs samples >= 1");
  if (!x.is_real(1e-12)) fail(ErrorCode::InvalidArgument, "winding_ratio needs a real field");
  WindingReport report;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < options.samples; ++i) {
    Real2 start{(i + 0.5) / options.samples, std::fmod(0.25 + i * phi, 1.0)};
    report.samples.push_back(integrate_sample(x, start, options));
  }

  Real2 sum{0, 0};
  int grown = 0;
  for (const auto& s : report.samples) {
    Real2 d = s.grew ? s.direction : Real2{0, 0};
    if (s.grew && !s.settled) {
      fail(ErrorCode::Inconclusive, "winding direction did not settle within the horizon");
    }
    bool known = false;
    for (const auto& o : report.observed) known = known || l1_distance(o, d) <= options.tol;
    if (!known) report.observed.push_back(d);
    if (s.grew) {
      sum[0] += d[0];
      sum[1] += d[1];
      ++grown;
    }
  }
  if (grown == 0) fail(ErrorCode::Inconclusive, "no orbit reached the growth threshold");
  report.direction = l1_unit(sum);
  report.slope = report.direction[1] / report.direction[0];
  for (const auto& a : report.samples) {
    for (const auto& b : report.samples) {
      if (a.grew && b.grew) {
        report.spread = std::max(report.spread, l1_distance(a.direction, b.direction));
      }
    }
  }
  return report;
}

}  // namespace torusrg
