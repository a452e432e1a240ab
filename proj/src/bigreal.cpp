#include "torusrg/bigreal.hpp"

#include <algorithm>
#include <memory>

#include "torusrg/error.hpp"

namespace torusrg {

namespace {

mpfr_prec_t max_prec(const BigReal& a, const BigReal& b) {
  return std::max(a.precision(), b.precision());
}

void widen(BigReal& target, mpfr_prec_t precision) {
  if (target.precision() < precision) mpfr_prec_round(target.get(), precision, MPFR_RNDN);
}

}  // namespace

BigReal::BigReal(mpfr_prec_t precision) {
  mpfr_init2(value_, precision);
  mpfr_set_zero(value_, 1);
}

BigReal::BigReal(double value, mpfr_prec_t precision) {
  mpfr_init2(value_, precision);
  mpfr_set_d(value_, value, MPFR_RNDN);
}

BigReal::BigReal(const mpz_class& value, mpfr_prec_t precision, mpfr_rnd_t rnd) {
  mpfr_init2(value_, precision);
  mpfr_set_z(value_, value.get_mpz_t(), rnd);
}

BigReal::BigReal(const mpq_class& value, mpfr_prec_t precision, mpfr_rnd_t rnd) {
  mpfr_init2(value_, precision);
  mpfr_set_q(value_, value.get_mpq_t(), rnd);
}

BigReal::BigReal(const BigReal& other) {
  mpfr_init2(value_, other.precision());
  mpfr_set(value_, other.value_, MPFR_RNDN);
}

BigReal::BigReal(BigReal&& other) noexcept {
  mpfr_init2(value_, MPFR_PREC_MIN);
  mpfr_swap(value_, other.value_);
}

BigReal& BigReal::operator=(const BigReal& other) {
  if (this != &other) {
    mpfr_set_prec(value_, other.precision());
    mpfr_set(value_, other.value_, MPFR_RNDN);
  }
  return *this;
}

BigReal& BigReal::operator=(BigReal&& other) noexcept {
  mpfr_swap(value_, other.value_);
  return *this;
}

BigReal::~BigReal() { mpfr_clear(value_); }

BigReal BigReal::parse(const std::string& text, mpfr_prec_t precision, mpfr_rnd_t rnd) {
  BigReal out(precision);
  char* end = nullptr;
  if (!text.empty()) mpfr_strtofr(out.value_, text.c_str(), &end, 10, rnd);
  if (end == nullptr || *end != '\0' || end == text.c_str()) {
    fail(ErrorCode::InvalidArgument, "not a decimal number: '" + text + "'");
  }
  return out;
}

BigReal BigReal::sqrt(const mpz_class& n, mpfr_prec_t precision, mpfr_rnd_t rnd) {
  BigReal out(precision);
  mpfr_set_z(out.value_, n.get_mpz_t(), rnd);
  mpfr_sqrt(out.value_, out.value_, rnd);
  return out;
}

std::string BigReal::to_string(int digits) const {
  char* raw = nullptr;
  mpfr_asprintf(&raw, "%.*Rg", digits, value_);
  std::unique_ptr<char, void (*)(char*)> guard(raw, [](char* p) { mpfr_free_str(p); });
  return std::string(raw);
}

mpz_class BigReal::floor() const {
  if (!mpfr_number_p(value_)) fail(ErrorCode::DomainError, "floor of non-finite value");
  mpz_class out;
  mpfr_get_z(out.get_mpz_t(), value_, MPFR_RNDD);
  return out;
}

BigReal BigReal::abs() const {
  BigReal out(precision());
  mpfr_abs(out.value_, value_, MPFR_RNDN);
  return out;
}

BigReal BigReal::log() const {
  BigReal out(precision());
  mpfr_log(out.value_, value_, MPFR_RNDN);
  return out;
}

BigReal BigReal::exp() const {
  BigReal out(precision());
  mpfr_exp(out.value_, value_, MPFR_RNDN);
  return out;
}

BigReal BigReal::pow(const BigReal& exponent) const {
  BigReal out(max_prec(*this, exponent));
  mpfr_pow(out.value_, value_, exponent.value_, MPFR_RNDN);
  return out;
}

BigReal BigReal::reciprocal() const {
  BigReal out(precision());
  mpfr_ui_div(out.value_, 1, value_, MPFR_RNDN);
  return out;
}

BigReal BigReal::operator-() const {
  BigReal out(precision());
  mpfr_neg(out.value_, value_, MPFR_RNDN);
  return out;
}

BigReal& BigReal::operator+=(const BigReal& rhs) {
  widen(*this, rhs.precision());
  mpfr_add(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator-=(const BigReal& rhs) {
  widen(*this, rhs.precision());
  mpfr_sub(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator*=(const BigReal& rhs) {
  widen(*this, rhs.precision());
  mpfr_mul(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

BigReal& BigReal::operator/=(const BigReal& rhs) {
  widen(*this, rhs.precision());
  mpfr_div(value_, value_, rhs.value_, MPFR_RNDN);
  return *this;
}

BigReal RealInterval::mid() const {
  BigReal out(precision() + 2);
  mpfr_add(out.get(), lo.get(), hi.get(), MPFR_RNDN);
  mpfr_div_2ui(out.get(), out.get(), 1, MPFR_RNDN);
  return out;
}

BigReal RealInterval::width() const {
  BigReal out(precision());
  mpfr_sub(out.get(), hi.get(), lo.get(), MPFR_RNDU);
  return out;
}

RealInterval operator-(const RealInterval& x, const mpz_class& n) {
  BigReal lo(x.precision()), hi(x.precision());
  mpfr_sub_z(lo.get(), x.lo.get(), n.get_mpz_t(), MPFR_RNDD);
  mpfr_sub_z(hi.get(), x.hi.get(), n.get_mpz_t(), MPFR_RNDU);
  return {std::move(lo), std::move(hi)};
}

RealInterval reciprocal(const RealInterval& x) {
  if (x.contains_zero()) fail(ErrorCode::ZeroInput, "reciprocal of an interval containing 0");
  BigReal lo(x.precision()), hi(x.precision());
  mpfr_ui_div(lo.get(), 1, x.hi.get(), MPFR_RNDD);
  mpfr_ui_div(hi.get(), 1, x.lo.get(), MPFR_RNDU);
  return {std::move(lo), std::move(hi)};
}

namespace {

// c + d*x over an interval, outward rounded.
RealInterval affine(const mpz_class& c, const mpz_class& d, const RealInterval& x) {
  mpfr_prec_t p = x.precision();
  BigReal lo(p), hi(p);
  const BigReal& from_lo = sgn(d) >= 0 ? x.lo : x.hi;
  const BigReal& from_hi = sgn(d) >= 0 ? x.hi : x.lo;
  mpfr_mul_z(lo.get(), from_lo.get(), d.get_mpz_t(), MPFR_RNDD);
  mpfr_add_z(lo.get(), lo.get(), c.get_mpz_t(), MPFR_RNDD);
  mpfr_mul_z(hi.get(), from_hi.get(), d.get_mpz_t(), MPFR_RNDU);
  mpfr_add_z(hi.get(), hi.get(), c.get_mpz_t(), MPFR_RNDU);
  return {std::move(lo), std::move(hi)};
}

}  // namespace

RealInterval mobius(const mpz_class& a, const mpz_class& b, const mpz_class& c,
                    const mpz_class& d, const RealInterval& x) {
  RealInterval num = affine(c, d, x);
  RealInterval den = affine(a, b, x);
  if (den.contains_zero()) fail(ErrorCode::PoleAtInput, "denominator interval contains 0");
  mpfr_prec_t p = x.precision();
  // Quotient of intervals: extremes are among the four endpoint ratios.
  BigReal cand_lo[4] = {BigReal(p), BigReal(p), BigReal(p), BigReal(p)};
  BigReal cand_hi[4] = {BigReal(p), BigReal(p), BigReal(p), BigReal(p)};
  const BigReal* ns[2] = {&num.lo, &num.hi};
  const BigReal* ds[2] = {&den.lo, &den.hi};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      mpfr_div(cand_lo[2 * i + j].get(), ns[i]->get(), ds[j]->get(), MPFR_RNDD);
      mpfr_div(cand_hi[2 * i + j].get(), ns[i]->get(), ds[j]->get(), MPFR_RNDU);
    }
  }
  BigReal lo = *std::min_element(std::begin(cand_lo), std::end(cand_lo));
  BigReal hi = *std::max_element(std::begin(cand_hi), std::end(cand_hi));
  return {std::move(lo), std::move(hi)};
}

}  // namespace torusrg
