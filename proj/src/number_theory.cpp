#include "torusrg/number_theory.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <regex>
#include <sstream>
#include <utility>

#include "torusrg/error.hpp"

namespace torusrg {

namespace {

constexpr unsigned long kTrialDivisionBound = 1000000;

mpz_class floor_div(const mpz_class& n, const mpz_class& d) {
  mpz_class out;
  mpz_fdiv_q(out.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
  return out;
}

mpz_class floor_of(const mpq_class& x) {
  return floor_div(x.get_num(), x.get_den());
}

mpz_class isqrt(const mpz_class& n) {
  mpz_class out;
  mpz_sqrt(out.get_mpz_t(), n.get_mpz_t());
  return out;
}

// u + v*sqrt(d) evaluated without cancellation.
BigReal surd_numerator(const mpz_class& u, const mpz_class& v, const mpz_class& d,
                       mpfr_prec_t precision) {
  BigReal root = BigReal::sqrt(d, precision + 16);
  BigReal vroot = BigReal(v, precision + 16) * root;
  if (sgn(u) == 0 || sgn(u) == sgn(v)) return BigReal(u, precision + 16) + vroot;
  mpz_class norm = u * u - v * v * d;
  return BigReal(norm, precision + 16) / (BigReal(u, precision + 16) - vroot);
}

BigReal surd_value(const QuadraticSurd& s, mpfr_prec_t precision) {
  BigReal out = surd_numerator(s.u, s.v, s.d, precision) / BigReal(s.w, precision + 16);
  mpfr_prec_round(out.get(), precision, MPFR_RNDN);
  return out;
}

int surd_sign(const QuadraticSurd& s) {
  // w > 0, so the sign is that of u + v sqrt(d).
  if (sgn(s.u) == 0 || sgn(s.u) == sgn(s.v)) return sgn(s.v);
  mpz_class lhs = s.u * s.u;
  mpz_class rhs = s.v * s.v * s.d;
  return lhs > rhs ? sgn(s.u) : sgn(s.v);
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

mpz_class parse_integer(const std::string& text) {
  mpz_class out;
  std::string t = trim(text);
  if (!t.empty() && t[0] == '+') t.erase(0, 1);
  if (t.empty() || out.set_str(t, 10) != 0) {
    fail(ErrorCode::InvalidArgument, "not an integer: '" + text + "'");
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- Slope

Slope Slope::rational(const mpz_class& p, const mpz_class& q) {
  if (sgn(q) == 0) fail(ErrorCode::InvalidArgument, "rational slope with zero denominator");
  mpq_class value(p, q);
  value.canonicalize();
  return Slope(Rep(std::move(value)));
}

Slope Slope::rational(const mpq_class& value) {
  mpq_class v = value;
  v.canonicalize();
  return Slope(Rep(std::move(v)));
}

Slope Slope::quadratic(const mpz_class& u, const mpz_class& v, const mpz_class& d,
                       const mpz_class& w) {
  if (sgn(w) == 0) fail(ErrorCode::InvalidArgument, "quadratic slope with w = 0");
  if (sgn(d) <= 0) fail(ErrorCode::InvalidArgument, "quadratic slope needs d > 0");
  QuadraticSurd s{u, v, d, w};
  // Move square factors of d into v.
  for (unsigned long p = 2; p <= kTrialDivisionBound && mpz_class(p) * p <= s.d; ++p) {
    mpz_class p2 = mpz_class(p) * p;
    while (mpz_divisible_p(s.d.get_mpz_t(), p2.get_mpz_t())) {
      s.d /= p2;
      s.v *= p;
    }
  }
  if (mpz_perfect_square_p(s.d.get_mpz_t())) {
    return rational(s.u + s.v * isqrt(s.d), s.w);
  }
  if (sgn(s.v) == 0) return rational(s.u, s.w);
  if (sgn(s.w) < 0) {
    s.u = -s.u;
    s.v = -s.v;
    s.w = -s.w;
  }
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), s.u.get_mpz_t(), s.v.get_mpz_t());
  mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), s.w.get_mpz_t());
  if (g > 1) {
    s.u /= g;
    s.v /= g;
    s.w /= g;
  }
  return Slope(Rep(std::move(s)));
}

Slope Slope::real(RealInterval enclosure) {
  if (enclosure.hi < enclosure.lo) fail(ErrorCode::InvalidArgument, "empty interval");
  return Slope(Rep(std::move(enclosure)));
}

Slope Slope::decimal(const std::string& literal, mpfr_prec_t precision) {
  static const std::regex pattern(R"(^([+-]?)(\d*)(?:\.(\d*))?(?:[eE]([+-]?\d+))?$)");
  std::smatch m;
  std::string text = trim(literal);
  if (!std::regex_match(text, m, pattern) || (m[2].length() == 0 && m[3].length() == 0)) {
    fail(ErrorCode::InvalidArgument, "not a decimal literal: '" + literal + "'");
  }
  std::string digits = m[2].str() + m[3].str();
  long exponent = m[4].matched ? std::stol(m[4].str()) : 0;
  exponent -= static_cast<long>(m[3].length());
  mpz_class mantissa(digits.empty() ? "0" : digits, 10);
  if (m[1].str() == "-") mantissa = -mantissa;
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
  mpq_class value, ulp;
  if (exponent >= 0) {
    value = mpq_class(mantissa * scale);
    ulp = mpq_class(scale);
  } else {
    value = mpq_class(mantissa, scale);
    ulp = mpq_class(1, scale);
  }
  value.canonicalize();
  ulp.canonicalize();
  BigReal lo(mpq_class(value - ulp), precision, MPFR_RNDD);
  BigReal hi(mpq_class(value + ulp), precision, MPFR_RNDU);
  return real(RealInterval(std::move(lo), std::move(hi)));
}

Slope Slope::from_coefficients(const std::vector<mpz_class>& coefficients) {
  if (coefficients.empty()) fail(ErrorCode::InvalidArgument, "empty coefficient list");
  for (std::size_t i = 1; i < coefficients.size(); ++i) {
    if (coefficients[i] < 1) fail(ErrorCode::InvalidArgument, "a_n must be positive for n >= 1");
  }
  mpq_class x(coefficients.back());
  for (std::size_t i = coefficients.size() - 1; i-- > 0;) {
    x = mpq_class(coefficients[i]) + 1 / x;
    x.canonicalize();
  }
  return rational(x);
}

Slope Slope::golden() { return quadratic(1, 1, 5, 2); }
Slope Slope::sqrt2() { return quadratic(0, 1, 2, 1); }
Slope Slope::silver() { return quadratic(1, 1, 2, 1); }

Slope Slope::euler(mpfr_prec_t precision) {
  BigReal lo(precision), hi(precision);
  BigReal one(1.0, precision);
  mpfr_exp(lo.get(), one.get(), MPFR_RNDD);
  mpfr_exp(hi.get(), one.get(), MPFR_RNDU);
  return real(RealInterval(std::move(lo), std::move(hi)));
}

Slope Slope::parse(const std::string& raw, mpfr_prec_t precision) {
  std::string text = trim(raw);
  if (text == "golden") return golden();
  if (text == "sqrt2") return sqrt2();
  if (text == "silver") return silver();
  std::string body = text;
  if (auto at = text.find('@'); at != std::string::npos) {
    body = trim(text.substr(0, at));
    long bits = 0;
    try {
      bits = std::stol(text.substr(at + 1));
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "bad precision suffix in '" + raw + "'");
    }
    if (bits < 16) fail(ErrorCode::InvalidArgument, "precision must be at least 16 bits");
    precision = static_cast<mpfr_prec_t>(bits);
  }
  if (body == "e") return euler(precision);
  if (auto slash = body.find('/'); slash != std::string::npos) {
    return rational(parse_integer(body.substr(0, slash)), parse_integer(body.substr(slash + 1)));
  }
  if (body.find(',') != std::string::npos) {
    std::vector<mpz_class> parts;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(parse_integer(item));
    if (parts.size() != 4) {
      fail(ErrorCode::InvalidArgument, "quadratic slope needs u,v,d,w: '" + raw + "'");
    }
    return quadratic(parts[0], parts[1], parts[2], parts[3]);
  }
  if (body.find_first_of(".eE") == std::string::npos) {
    return rational(parse_integer(body), 1);
  }
  return decimal(body, precision);
}

Slope::Kind Slope::kind() const { return static_cast<Kind>(rep_.index()); }

const mpq_class& Slope::as_rational() const {
  if (kind() != Kind::Rational) fail(ErrorCode::InvalidArgument, "slope is not rational");
  return std::get<mpq_class>(rep_);
}

const QuadraticSurd& Slope::as_quadratic() const {
  if (kind() != Kind::Quadratic) fail(ErrorCode::InvalidArgument, "slope is not quadratic");
  return std::get<QuadraticSurd>(rep_);
}

const RealInterval& Slope::as_real() const {
  if (kind() != Kind::Real) fail(ErrorCode::InvalidArgument, "slope is not an interval");
  return std::get<RealInterval>(rep_);
}

BigReal Slope::value(mpfr_prec_t precision) const {
  switch (kind()) {
    case Kind::Rational: return BigReal(std::get<mpq_class>(rep_), precision);
    case Kind::Quadratic: return surd_value(std::get<QuadraticSurd>(rep_), precision);
    case Kind::Real: {
      BigReal mid = std::get<RealInterval>(rep_).mid();
      mpfr_prec_round(mid.get(), precision, MPFR_RNDN);
      return mid;
    }
  }
  fail(ErrorCode::Internal, "unreachable");
}

int Slope::sign() const {
  switch (kind()) {
    case Kind::Rational: return sgn(std::get<mpq_class>(rep_));
    case Kind::Quadratic: return surd_sign(std::get<QuadraticSurd>(rep_));
    case Kind::Real: {
      const auto& iv = std::get<RealInterval>(rep_);
      if (iv.lo.sign() > 0) return 1;
      if (iv.hi.sign() < 0) return -1;
      return 0;
    }
  }
  return 0;
}

std::string Slope::describe() const {
  std::ostringstream os;
  switch (kind()) {
    case Kind::Rational: os << std::get<mpq_class>(rep_).get_str(); break;
    case Kind::Quadratic: {
      const auto& s = std::get<QuadraticSurd>(rep_);
      os << "(" << s.u.get_str() << (sgn(s.v) < 0 ? "-" : "+") << mpz_class(abs(s.v)).get_str()
         << "*sqrt(" << s.d.get_str() << "))/" << s.w.get_str();
      break;
    }
    case Kind::Real: {
      const auto& iv = std::get<RealInterval>(rep_);
      os << "[" << iv.lo.to_string(25) << ", " << iv.hi.to_string(25) << "]@" << iv.precision();
      break;
    }
  }
  return os.str();
}

// ------------------------------------------------------------ GL2ZMatrix

GL2ZMatrix::GL2ZMatrix(mpz_class a, mpz_class b, mpz_class c, mpz_class d)
    : m_{std::move(a), std::move(b), std::move(c), std::move(d)} {
  mpz_class det = this->det();
  if (det != 1 && det != -1) {
    fail(ErrorCode::InvalidArgument, "GL(2,Z) matrix needs determinant +-1, got " + det.get_str());
  }
}

GL2ZMatrix GL2ZMatrix::identity() { return {1, 0, 0, 1}; }
GL2ZMatrix GL2ZMatrix::D() { return {1, 0, 1, 1}; }
GL2ZMatrix GL2ZMatrix::S() { return {0, 1, 1, 0}; }
GL2ZMatrix GL2ZMatrix::V() { return {-1, 0, 0, 1}; }
GL2ZMatrix GL2ZMatrix::T(const mpz_class& a) { return {0, 1, 1, a}; }

GL2ZMatrix GL2ZMatrix::inverse() const {
  mpz_class det = this->det();
  return {det * m_[3], -det * m_[1], -det * m_[2], det * m_[0]};
}

GL2ZMatrix GL2ZMatrix::transpose() const { return {m_[0], m_[2], m_[1], m_[3]}; }

std::array<double, 4> GL2ZMatrix::to_double() const {
  return {m_[0].get_d(), m_[1].get_d(), m_[2].get_d(), m_[3].get_d()};
}

std::string GL2ZMatrix::describe() const {
  return "[[" + m_[0].get_str() + "," + m_[1].get_str() + "],[" + m_[2].get_str() + "," +
         m_[3].get_str() + "]]";
}

GL2ZMatrix operator*(const GL2ZMatrix& x, const GL2ZMatrix& y) {
  return {x.a() * y.a() + x.b() * y.c(), x.a() * y.b() + x.b() * y.d(),
          x.c() * y.a() + x.d() * y.c(), x.c() * y.b() + x.d() * y.d()};
}

GL2ZMatrix t_matrix(long a) {
  if (a < 1) fail(ErrorCode::InvalidArgument, "t_matrix needs a >= 1");
  return GL2ZMatrix::T(a);
}

TMatrixEigen t_matrix_eigen(long a) {
  if (a < 1) fail(ErrorCode::InvalidArgument, "t_matrix needs a >= 1");
  double ad = static_cast<double>(a);
  double lambda = (ad + std::sqrt(ad * ad + 4.0)) / 2.0;
  return {lambda, -1.0 / lambda, {1.0, lambda}, {1.0, -1.0 / lambda}};
}

Slope act_on_slope(const GL2ZMatrix& m, const Slope& alpha) {
  switch (alpha.kind()) {
    case Slope::Kind::Rational: {
      const mpq_class& x = alpha.as_rational();
      mpq_class den = m.a() + m.b() * x;
      if (sgn(den) == 0) fail(ErrorCode::PoleAtInput, "a + b*alpha = 0");
      mpq_class out = (m.c() + m.d() * x) / den;
      return Slope::rational(out);
    }
    case Slope::Kind::Quadratic: {
      const QuadraticSurd& s = alpha.as_quadratic();
      mpz_class n1 = m.c() * s.w + m.d() * s.u, n2 = m.d() * s.v;
      mpz_class d1 = m.a() * s.w + m.b() * s.u, d2 = m.b() * s.v;
      mpz_class den = d1 * d1 - d2 * d2 * s.d;
      if (sgn(den) == 0) fail(ErrorCode::PoleAtInput, "a + b*alpha = 0");
      return Slope::quadratic(n1 * d1 - n2 * d2 * s.d, n2 * d1 - n1 * d2, s.d, den);
    }
    case Slope::Kind::Real:
      return Slope::real(mobius(m.a(), m.b(), m.c(), m.d(), alpha.as_real()));
  }
  fail(ErrorCode::Internal, "unreachable");
}

BigReal gauss_step(const BigReal& x) {
  if (x.sign() == 0) fail(ErrorCode::ZeroInput, "Gauss map at x = 0");
  if (x.sign() < 0) fail(ErrorCode::InvalidArgument, "Gauss map needs x > 0");
  BigReal inv = x.reciprocal();
  return inv - BigReal(inv.floor(), inv.precision());
}

mpq_class gauss_step(const mpq_class& x) {
  if (sgn(x) == 0) fail(ErrorCode::ZeroInput, "Gauss map at x = 0");
  if (sgn(x) < 0) fail(ErrorCode::InvalidArgument, "Gauss map needs x > 0");
  mpq_class inv = 1 / x;
  inv.canonicalize();
  mpq_class out = inv - mpq_class(floor_of(inv));
  out.canonicalize();
  return out;
}

// ----------------------------------------------------------- CFExpansion

const mpz_class& CFExpansion::a(std::size_t n) const {
  if (n >= a_.size()) fail(ErrorCode::IndexOutOfRange, "coefficient index " + std::to_string(n));
  return a_[n];
}

mpz_class CFExpansion::p(long n) const {
  if (n < -2 || n + 2 >= static_cast<long>(p_.size())) {
    fail(ErrorCode::IndexOutOfRange, "convergent index " + std::to_string(n));
  }
  return p_[static_cast<std::size_t>(n + 2)];
}

mpz_class CFExpansion::q(long n) const {
  if (n < -2 || n + 2 >= static_cast<long>(q_.size())) {
    fail(ErrorCode::IndexOutOfRange, "convergent index " + std::to_string(n));
  }
  return q_[static_cast<std::size_t>(n + 2)];
}

const BigReal& CFExpansion::tail(std::size_t n) const {
  if (n >= tails_.size()) fail(ErrorCode::IndexOutOfRange, "tail index " + std::to_string(n));
  return tails_[n];
}

Slope CFExpansion::tail_slope(std::size_t n) const {
  if (n >= tail_slopes_.size()) fail(ErrorCode::IndexOutOfRange, "tail index " + std::to_string(n));
  return tail_slopes_[n];
}

const BigReal& CFExpansion::remainder(std::size_t n) const {
  if (n >= remainders_.size()) {
    fail(ErrorCode::IndexOutOfRange, "remainder index " + std::to_string(n));
  }
  return remainders_[n];
}

const BigReal& CFExpansion::beta(long n) const {
  if (n == -1) return one_;
  if (n < 0 || n >= static_cast<long>(beta_.size())) {
    fail(ErrorCode::IndexOutOfRange, "beta index " + std::to_string(n));
  }
  return beta_[static_cast<std::size_t>(n)];
}

const BigReal& CFExpansion::beta_direct(long n) const {
  if (n == -1) return one_;
  if (n < 0 || n >= static_cast<long>(beta_direct_.size())) {
    fail(ErrorCode::IndexOutOfRange, "beta index " + std::to_string(n));
  }
  return beta_direct_[static_cast<std::size_t>(n)];
}

const BigReal& CFExpansion::atilde(long n) const {
  if (n == -1) return one_;
  if (n < 0 || n >= static_cast<long>(atilde_.size())) {
    fail(ErrorCode::IndexOutOfRange, "Atilde index " + std::to_string(n));
  }
  return atilde_[static_cast<std::size_t>(n)];
}

void CFExpansion::require(std::size_t n) const {
  if (size() >= n) return;
  std::string msg = "only " + std::to_string(size()) + " of " + std::to_string(n) +
                    " coefficients available for " + slope_.describe();
  if (rational_exhausted_) fail(ErrorCode::RationalExhausted, msg);
  fail(ErrorCode::PrecisionExhausted, msg);
}

CFExpansion cf_expand(const Slope& alpha, std::size_t n_terms, mpfr_prec_t precision) {
  if (n_terms < 1) fail(ErrorCode::InvalidArgument, "n_terms must be >= 1");
  CFExpansion cf(alpha, precision);
  cf.one_ = BigReal(1.0, precision);

  switch (alpha.kind()) {
    case Slope::Kind::Rational: {
      mpq_class x = alpha.as_rational();
      bool terminated = false;
      for (std::size_t n = 0; n < n_terms; ++n) {
        mpz_class a = floor_of(x);
        cf.a_.push_back(a);
        cf.tail_slopes_.push_back(Slope::rational(x));
        mpq_class frac = x - mpq_class(a);
        frac.canonicalize();
        cf.remainders_.emplace_back(frac, precision);
        if (sgn(frac) == 0) {
          terminated = true;
          cf.rational_exhausted_ = n + 1 < n_terms;
          break;
        }
        x = 1 / frac;
        x.canonicalize();
      }
      if (!terminated) cf.tail_slopes_.push_back(Slope::rational(x));
      for (const auto& t : cf.tail_slopes_) cf.tails_.push_back(t.value(precision));
      break;
    }
    case Slope::Kind::Quadratic: {
      const QuadraticSurd& s = alpha.as_quadratic();
      int sv = sgn(s.v);
      mpz_class root_coeff = abs(s.v) * s.w;  // D = root_coeff^2 * d
      mpz_class P = sv * s.u * s.w;
      mpz_class Q = sv * s.w * s.w;
      mpz_class D = root_coeff * root_coeff * s.d;
      mpz_class r = isqrt(D);
      std::map<std::pair<mpz_class, mpz_class>, std::size_t> seen;
      for (std::size_t n = 0; n <= n_terms; ++n) {
        cf.tail_slopes_.push_back(Slope::quadratic(P, root_coeff, s.d, Q));
        if (n == n_terms) break;
        if (!cf.period_) {
          auto [it, inserted] = seen.emplace(std::make_pair(P, Q), n);
          if (!inserted) cf.period_ = Period{it->second, n - it->second};
        }
        mpz_class a = sgn(Q) > 0 ? floor_div(P + r, Q) : floor_div(P + r + 1, Q);
        cf.a_.push_back(a);
        P = a * Q - P;
        Q = (D - P * P) / Q;
      }
      for (const auto& t : cf.tail_slopes_) cf.tails_.push_back(t.value(precision));
      // x_n = 1 / alpha_{n+1} avoids the cancellation in alpha_n - a_n.
      for (std::size_t n = 0; n < cf.a_.size(); ++n) {
        cf.remainders_.push_back(cf.tails_[n + 1].reciprocal());
      }
      break;
    }
    case Slope::Kind::Real: {
      RealInterval x = alpha.as_real();
      for (std::size_t n = 0; n < n_terms; ++n) {
        mpz_class lo_floor = x.lo.floor(), hi_floor = x.hi.floor();
        if (lo_floor != hi_floor) {
          cf.precision_exhausted_ = true;
          cf.tail_slopes_.push_back(Slope::real(x));
          break;
        }
        cf.a_.push_back(lo_floor);
        cf.tail_slopes_.push_back(Slope::real(x));
        RealInterval frac = x - lo_floor;
        cf.remainders_.push_back(frac.mid());
        if (frac.lo.sign() <= 0) {
          cf.precision_exhausted_ = n + 1 < n_terms;
          break;
        }
        x = reciprocal(frac);
        if (n + 1 == n_terms) cf.tail_slopes_.push_back(Slope::real(x));
      }
      for (const auto& t : cf.tail_slopes_) cf.tails_.push_back(t.value(precision));
      break;
    }
  }

  const std::size_t size = cf.a_.size();
  cf.p_ = {0, 1};
  cf.q_ = {1, 0};
  for (std::size_t n = 0; n < size; ++n) {
    cf.p_.push_back(cf.a_[n] * cf.p_[n + 1] + cf.p_[n]);
    cf.q_.push_back(cf.a_[n] * cf.q_[n + 1] + cf.q_[n]);
  }

  BigReal running_beta = cf.one_, running_atilde = cf.one_;
  for (std::size_t n = 0; n < size; ++n) {
    running_beta *= cf.remainders_[n];
    cf.beta_.push_back(running_beta);
    running_atilde *= cf.tails_[n];
    cf.atilde_.push_back(running_atilde);

    const mpz_class& pn = cf.p_[n + 2];
    const mpz_class& qn = cf.q_[n + 2];
    BigReal direct(precision);
    switch (alpha.kind()) {
      case Slope::Kind::Rational: {
        mpq_class v = alpha.as_rational() * qn - pn;
        direct = BigReal(v, precision);
        break;
      }
      case Slope::Kind::Quadratic: {
        const QuadraticSurd& s = alpha.as_quadratic();
        // (q u - p w + q v sqrt(d)) / w, evaluated through its conjugate.
        direct = surd_numerator(qn * s.u - pn * s.w, qn * s.v, s.d, precision) /
                 BigReal(s.w, precision + 16);
        mpfr_prec_round(direct.get(), precision, MPFR_RNDN);
        break;
      }
      case Slope::Kind::Real:
        direct = alpha.value(precision + 32) * BigReal(qn, precision + 32) -
                 BigReal(pn, precision + 32);
        mpfr_prec_round(direct.get(), precision, MPFR_RNDN);
        break;
    }
    if (n % 2 == 1) direct = -direct;
    cf.beta_direct_.push_back(direct);
  }
  // Atilde for the one extra tail past the last coefficient.
  if (cf.tails_.size() > size) cf.atilde_.push_back(running_atilde * cf.tails_[size]);
  return cf;
}

GL2ZMatrix convergent_matrix(const CFExpansion& cf, long n) {
  if (n < -1 || n >= static_cast<long>(cf.size())) {
    fail(ErrorCode::IndexOutOfRange, "convergent matrix index " + std::to_string(n));
  }
  return {cf.q(n - 1), cf.p(n - 1), cf.q(n), cf.p(n)};
}

DiophantineReport diophantine_probe(const CFExpansion& cf, double order, std::size_t n_max) {
  if (order < 0) fail(ErrorCode::InvalidArgument, "diophantine order must be >= 0");
  if (cf.size() < n_max + 2) {
    fail(ErrorCode::IndexOutOfRange, "probe up to n=" + std::to_string(n_max) + " needs " +
                                         std::to_string(n_max + 2) + " coefficients");
  }
  const mpfr_prec_t prec = cf.precision();
  const BigReal b(order, prec), one_plus_b(1.0 + order, prec), two(2.0, prec);
  auto ratio = [](const BigReal& num, const BigReal& den) {
    if (den.sign() == 0) return std::numeric_limits<double>::infinity();
    return (num / den).to_double();
  };

  DiophantineReport report;
  report.order = order;
  for (std::size_t n = 0; n <= n_max; ++n) {
    const long ln = static_cast<long>(n);
    BigReal qn(cf.q(ln), prec), qn1(cf.q(ln + 1), prec), an1(cf.a(n + 1), prec);
    DiophantineRow row{n, 0, 0, 0, 0};
    row.k_q = ratio(qn1, qn.pow(one_plus_b));
    row.k_a = ratio(an1, qn.pow(b));
    row.k_beta = ratio(cf.beta(ln).pow(one_plus_b), two * cf.beta(ln + 1));
    row.k_atilde = ratio(cf.atilde(ln + 1), two * cf.atilde(ln).pow(one_plus_b));
    report.k_q = std::max(report.k_q, row.k_q);
    report.k_a = std::max(report.k_a, row.k_a);
    report.k_beta = std::max(report.k_beta, row.k_beta);
    report.k_atilde = std::max(report.k_atilde, row.k_atilde);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace torusrg
