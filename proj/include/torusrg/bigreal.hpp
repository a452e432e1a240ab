#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <string>

namespace torusrg {

// Owning wrapper around mpfr_t. Binary operators round to nearest and take
// the larger of the operand precisions.
class BigReal {
 public:
  static constexpr mpfr_prec_t kDefaultPrecision = 256;

  explicit BigReal(mpfr_prec_t precision = kDefaultPrecision);
  BigReal(double value, mpfr_prec_t precision);
  BigReal(const mpz_class& value, mpfr_prec_t precision,
          mpfr_rnd_t rnd = MPFR_RNDN);
  BigReal(const mpq_class& value, mpfr_prec_t precision,
          mpfr_rnd_t rnd = MPFR_RNDN);
  BigReal(const BigReal& other);
  BigReal(BigReal&& other) noexcept;
  BigReal& operator=(const BigReal& other);
  BigReal& operator=(BigReal&& other) noexcept;
  ~BigReal();

  // Decimal or scientific notation, rounded with `rnd`.
  static BigReal parse(const std::string& text, mpfr_prec_t precision,
                       mpfr_rnd_t rnd = MPFR_RNDN);
  static BigReal sqrt(const mpz_class& n, mpfr_prec_t precision,
                      mpfr_rnd_t rnd = MPFR_RNDN);

  mpfr_prec_t precision() const { return mpfr_get_prec(value_); }
  mpfr_ptr get() { return value_; }
  mpfr_srcptr get() const { return value_; }

  double to_double() const { return mpfr_get_d(value_, MPFR_RNDN); }
  long double to_long_double() const { return mpfr_get_ld(value_, MPFR_RNDN); }
  std::string to_string(int digits = 20) const;
  mpz_class floor() const;
  int sign() const { return mpfr_sgn(value_); }

  BigReal abs() const;
  BigReal log() const;
  BigReal exp() const;
  BigReal pow(const BigReal& exponent) const;
  BigReal reciprocal() const;

  BigReal operator-() const;
  BigReal& operator+=(const BigReal& rhs);
  BigReal& operator-=(const BigReal& rhs);
  BigReal& operator*=(const BigReal& rhs);
  BigReal& operator/=(const BigReal& rhs);

  friend BigReal operator+(BigReal lhs, const BigReal& rhs) { return lhs += rhs; }
  friend BigReal operator-(BigReal lhs, const BigReal& rhs) { return lhs -= rhs; }
  friend BigReal operator*(BigReal lhs, const BigReal& rhs) { return lhs *= rhs; }
  friend BigReal operator/(BigReal lhs, const BigReal& rhs) { return lhs /= rhs; }

  friend int compare(const BigReal& a, const BigReal& b) {
    return mpfr_cmp(a.value_, b.value_);
  }
  friend bool operator<(const BigReal& a, const BigReal& b) { return compare(a, b) < 0; }
  friend bool operator>(const BigReal& a, const BigReal& b) { return compare(a, b) > 0; }
  friend bool operator<=(const BigReal& a, const BigReal& b) { return compare(a, b) <= 0; }
  friend bool operator>=(const BigReal& a, const BigReal& b) { return compare(a, b) >= 0; }
  friend bool operator==(const BigReal& a, const BigReal& b) { return compare(a, b) == 0; }

 private:
  mpfr_t value_;
};

// Closed interval with outward-rounded endpoints.
struct RealInterval {
  BigReal lo;
  BigReal hi;

  RealInterval(BigReal lo_, BigReal hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {}

  bool contains_zero() const { return lo.sign() <= 0 && hi.sign() >= 0; }
  BigReal mid() const;
  BigReal width() const;
  mpfr_prec_t precision() const { return lo.precision(); }
};

RealInterval operator-(const RealInterval& x, const mpz_class& n);
RealInterval reciprocal(const RealInterval& x);
// (c + d x) / (a + b x); the caller guarantees the denominator avoids zero.
RealInterval mobius(const mpz_class& a, const mpz_class& b, const mpz_class& c,
                    const mpz_class& d, const RealInterval& x);

}  // namespace torusrg
