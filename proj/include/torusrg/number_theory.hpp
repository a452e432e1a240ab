#pragma once

#include <gmpxx.h>

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "torusrg/bigreal.hpp"

namespace torusrg {

// (u + v*sqrt(d)) / w with w > 0, v != 0, d > 1 squarefree (up to the
// trial-division bound used when canonicalising) and gcd(u, v, w) = 1.
struct QuadraticSurd {
  mpz_class u, v, d, w;

  friend bool operator==(const QuadraticSurd&, const QuadraticSurd&) = default;
};

class Slope {
 public:
  enum class Kind { Rational, Quadratic, Real };

  static Slope rational(const mpz_class& p, const mpz_class& q);
  static Slope rational(const mpq_class& value);
  // Returns a rational slope when v*sqrt(d) turns out to be rational.
  static Slope quadratic(const mpz_class& u, const mpz_class& v, const mpz_class& d,
                         const mpz_class& w);
  static Slope real(RealInterval enclosure);
  // A decimal literal taken to be exact up to one unit in its last digit.
  static Slope decimal(const std::string& literal, mpfr_prec_t precision);
  // Rational number [a_0; a_1, ..., a_N].
  static Slope from_coefficients(const std::vector<mpz_class>& coefficients);

  static Slope golden();
  static Slope sqrt2();
  static Slope silver();
  static Slope euler(mpfr_prec_t precision);

  // golden | sqrt2 | silver | e | p/q | u,v,d,w | decimal[@bits]
  static Slope parse(const std::string& text,
                     mpfr_prec_t precision = BigReal::kDefaultPrecision);

  Kind kind() const;
  const mpq_class& as_rational() const;
  const QuadraticSurd& as_quadratic() const;
  const RealInterval& as_real() const;

  // Midpoint for interval slopes.
  BigReal value(mpfr_prec_t precision = BigReal::kDefaultPrecision) const;
  double to_double() const { return value(128).to_double(); }
  int sign() const;
  std::string describe() const;

 private:
  using Rep = std::variant<mpq_class, QuadraticSurd, RealInterval>;
  explicit Slope(Rep rep) : rep_(std::move(rep)) {}
  Rep rep_;
};

class GL2ZMatrix {
 public:
  // [[a, b], [c, d]]; throws InvalidArgument unless the determinant is +-1.
  GL2ZMatrix(mpz_class a, mpz_class b, mpz_class c, mpz_class d);

  static GL2ZMatrix identity();
  static GL2ZMatrix D();
  static GL2ZMatrix S();
  static GL2ZMatrix V();
  static GL2ZMatrix T(const mpz_class& a);

  const mpz_class& a() const { return m_[0]; }
  const mpz_class& b() const { return m_[1]; }
  const mpz_class& c() const { return m_[2]; }
  const mpz_class& d() const { return m_[3]; }
  const mpz_class& operator()(int row, int col) const { return m_[2 * row + col]; }

  mpz_class det() const { return m_[0] * m_[3] - m_[1] * m_[2]; }
  GL2ZMatrix inverse() const;
  GL2ZMatrix transpose() const;
  std::array<double, 4> to_double() const;
  std::string describe() const;

  friend GL2ZMatrix operator*(const GL2ZMatrix& x, const GL2ZMatrix& y);
  friend bool operator==(const GL2ZMatrix& x, const GL2ZMatrix& y) { return x.m_ == y.m_; }

 private:
  std::array<mpz_class, 4> m_;
};

// [[0, 1], [1, a]] for a >= 1.
GL2ZMatrix t_matrix(long a);

struct TMatrixEigen {
  double lambda;         // (a + sqrt(a^2 + 4)) / 2
  double lambda_stable;  // -1 / lambda
  std::array<double, 2> unstable;  // (1, lambda)
  std::array<double, 2> stable;    // (1, -1/lambda)
};
TMatrixEigen t_matrix_eigen(long a);

// (c + d*alpha) / (a + b*alpha).
Slope act_on_slope(const GL2ZMatrix& m, const Slope& alpha);

// {1/x}; throws ZeroInput for x == 0 and InvalidArgument for x < 0.
BigReal gauss_step(const BigReal& x);
mpq_class gauss_step(const mpq_class& x);

struct Period {
  std::size_t start;
  std::size_t length;
};

class CFExpansion {
 public:
  const Slope& slope() const { return slope_; }
  mpfr_prec_t precision() const { return precision_; }

  // Number of certified coefficients a_0..a_{size-1}.
  std::size_t size() const { return a_.size(); }
  const std::vector<mpz_class>& coefficients() const { return a_; }

  const mpz_class& a(std::size_t n) const;
  // Convergents for n >= -2: p_{-1} = 1, q_{-1} = 0, p_{-2} = 0, q_{-2} = 1.
  mpz_class p(long n) const;
  mpz_class q(long n) const;

  // Tails alpha_n are available for n <= size (one past the last coefficient)
  // unless the expansion terminated.
  std::size_t tail_count() const { return tails_.size(); }
  const BigReal& tail(std::size_t n) const;
  Slope tail_slope(std::size_t n) const;
  // x_n = alpha_n - a_n, n < size.
  const BigReal& remainder(std::size_t n) const;
  // beta_n as the product of remainders, and as (-1)^n (alpha q_n - p_n).
  const BigReal& beta(long n) const;
  const BigReal& beta_direct(long n) const;
  // Atilde_n = alpha_0 ... alpha_n, Atilde_{-1} = 1.
  const BigReal& atilde(long n) const;

  bool rational_exhausted() const { return rational_exhausted_; }
  bool precision_exhausted() const { return precision_exhausted_; }
  const std::optional<Period>& period() const { return period_; }

  // Throws RationalExhausted / PrecisionExhausted when fewer than n
  // coefficients are certified.
  void require(std::size_t n) const;

 private:
  friend CFExpansion cf_expand(const Slope&, std::size_t, mpfr_prec_t);
  CFExpansion(Slope slope, mpfr_prec_t precision)
      : slope_(std::move(slope)), precision_(precision) {}

  Slope slope_;
  mpfr_prec_t precision_;
  std::vector<mpz_class> a_;
  std::vector<mpz_class> p_, q_;
  std::vector<BigReal> tails_;
  std::vector<Slope> tail_slopes_;
  std::vector<BigReal> remainders_;
  std::vector<BigReal> beta_, beta_direct_;
  std::vector<BigReal> atilde_;
  BigReal one_;
  bool rational_exhausted_ = false;
  bool precision_exhausted_ = false;
  std::optional<Period> period_;
};

CFExpansion cf_expand(const Slope& alpha, std::size_t n_terms,
                      mpfr_prec_t precision = BigReal::kDefaultPrecision);

// Rows (q_{n-1}, p_{n-1}) and (q_n, p_n); n = -1 gives the identity.
GL2ZMatrix convergent_matrix(const CFExpansion& cf, long n);

struct DiophantineRow {
  std::size_t n;
  double k_q;       // q_{n+1} / q_n^{1+beta}
  double k_a;       // a_{n+1} / q_n^beta
  double k_beta;    // beta_n^{1+beta} / (2 beta_{n+1})
  double k_atilde;  // Atilde_{n+1} / (2 Atilde_n^{1+beta})
};

struct DiophantineReport {
  double order;
  std::vector<DiophantineRow> rows;
  // Running suprema over the rows, i.e. the smallest admissible constants.
  double k_q = 0, k_a = 0, k_beta = 0, k_atilde = 0;
};

// Needs n_max + 2 certified coefficients.
DiophantineReport diophantine_probe(const CFExpansion& cf, double order, std::size_t n_max);

}  // namespace torusrg
