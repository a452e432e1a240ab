#pragma once

#include <array>
#include <compare>
#include <complex>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace torusrg {

using Complex = std::complex<double>;
using Vec2 = std::array<Complex, 2>;
using Real2 = std::array<double, 2>;

struct Mode {
  int k1 = 0;
  int k2 = 0;

  int norm1() const { return std::abs(k1) + std::abs(k2); }
  Mode operator-() const { return {-k1, -k2}; }
  friend auto operator<=>(const Mode&, const Mode&) = default;
};

inline Vec2 to_vec2(const Real2& v) { return {Complex(v[0]), Complex(v[1])}; }
inline double norm1(const Vec2& v) { return std::abs(v[0]) + std::abs(v[1]); }
inline double norm1(const Real2& v) { return std::abs(v[0]) + std::abs(v[1]); }

// X(theta) = sum_k f_k exp(2 pi i k.theta), modes restricted to |k|_1 <= truncation.
class FourierVectorField {
 public:
  explicit FourierVectorField(int truncation = 32, double width = 1.0);

  static FourierVectorField constant(const Vec2& value, int truncation = 32, double width = 1.0);
  static FourierVectorField constant(const Real2& value, int truncation = 32, double width = 1.0) {
    return constant(to_vec2(value), truncation, width);
  }

  int truncation() const { return truncation_; }
  double width() const { return width_; }
  void set_width(double width);

  const std::map<Mode, Vec2>& modes() const { return modes_; }
  std::size_t size() const { return modes_.size(); }
  bool empty() const { return modes_.empty(); }
  bool admits(const Mode& k) const { return k.norm1() <= truncation_; }

  Vec2 coefficient(const Mode& k) const;
  // Modes beyond the truncation are dropped and counted in discarded_mass().
  void set(const Mode& k, const Vec2& value);
  void add(const Mode& k, const Vec2& value);
  void erase(const Mode& k) { modes_.erase(k); }
  // Removes exact zeros.
  void prune();

  // Weighted l1 mass sum |f_k|_1 e^{width |k|} of everything dropped so far.
  double discarded_mass() const { return discarded_; }
  void add_discarded(double mass) { discarded_ += mass; }

  // f_{-k} == conj(f_k) within tol.
  bool is_real(double tol = 0.0) const;

  FourierVectorField& operator+=(const FourierVectorField& rhs);
  FourierVectorField& operator-=(const FourierVectorField& rhs);
  FourierVectorField& operator*=(Complex s);
  friend FourierVectorField operator+(FourierVectorField a, const FourierVectorField& b) {
    return a += b;
  }
  friend FourierVectorField operator-(FourierVectorField a, const FourierVectorField& b) {
    return a -= b;
  }
  friend FourierVectorField operator*(Complex s, FourierVectorField a) { return a *= s; }

  // Evaluate at a (possibly complex) point.
  Vec2 evaluate(Complex theta1, Complex theta2) const;

  std::string to_json(const std::string& kind = "vector_field") const;
  static FourierVectorField from_json(const std::string& text);

 private:
  int truncation_;
  double width_;
  double discarded_ = 0.0;
  std::map<Mode, Vec2> modes_;
};

double norm_r(const FourierVectorField& x, double r);
double norm_prime_r(const FourierVectorField& x, double r);
Vec2 average(const FourierVectorField& x);
// Field without its k = 0 mode.
FourierVectorField oscillatory_part(const FourierVectorField& x);

struct FarResonant {
  Vec2 psi;
  double sigma;
};

struct Kappa {
  long a;
  double kappa;
};

class ConeSpec {
 public:
  // Validates sigma < |psi|_1 and 1/2 < kappa < 1.
  static ConeSpec far_resonant(const Vec2& psi, double sigma);
  static ConeSpec far_resonant(const Real2& psi, double sigma) {
    return far_resonant(to_vec2(psi), sigma);
  }
  static ConeSpec kappa(long a, double kappa);

  bool is_far_resonant() const { return std::holds_alternative<FarResonant>(rep_); }
  const FarResonant& far() const { return std::get<FarResonant>(rep_); }
  const Kappa& kappa_spec() const { return std::get<Kappa>(rep_); }

  // Membership in the "inside" set: I+ for FarResonant, I^kappa_a for Kappa.
  bool inside(const Mode& k) const;

 private:
  explicit ConeSpec(std::variant<FarResonant, Kappa> rep) : rep_(rep) {}
  std::variant<FarResonant, Kappa> rep_;
};

// T_a^* k = (k2, k1 + a k2).
inline Mode t_star(long a, const Mode& k) {
  return {k.k2, static_cast<int>(k.k1 + a * k.k2)};
}
inline Mode t_star_inverse(long a, const Mode& k) {
  return {static_cast<int>(k.k2 - a * k.k1), k.k1};
}

bool is_resonant(const Mode& k, const Vec2& psi, double sigma);

enum class Side { Inside, Outside };
FourierVectorField project(const FourierVectorField& x, const ConeSpec& cone, Side side);

struct WindingSample {
  Real2 start;
  Real2 displacement;  // Phi_T(theta0) - theta0
  double time = 0;
  bool grew = false;   // reached the growth threshold
  bool settled = false;
  Real2 direction{0, 0};  // l1-normalised displacement
};

struct WindingReport {
  Real2 direction{0, 0};
  double slope = 0;
  double spread = 0;  // max l1 distance between sample directions
  // Distinct limiting directions seen across samples, up to tol; a bounded
  // orbit contributes the zero vector.
  std::vector<Real2> observed;
  std::vector<WindingSample> samples;
};

struct WindingOptions {
  double horizon = 5000.0;
  double tol = 1e-3;
  double growth_threshold = 1e3;
  double integrator_tol = 1e-11;
  int samples = 4;
};

// Throws Inconclusive when no sample grows past the threshold within the
// horizon or the direction has not settled.
WindingReport winding_ratio(const FourierVectorField& x, const WindingOptions& options = {});

}  // namespace torusrg
