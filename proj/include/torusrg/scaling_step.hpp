#pragma once

#include <cstddef>
#include <optional>

#include "torusrg/fourier_field.hpp"

namespace torusrg {

struct Widths {
  double rho = 1.0;
  double rho_prime = 0.9;
  double kappa = 1.0 - (1.0 - 3.0 * 0.1) / 3.0;
};

// kappa = 1 - (1 - 3 sigma) / 3, the sufficient choice for omega = (1, alpha), alpha > 1.
double default_kappa(double sigma);

// 6 pi a / (rho' - kappa rho) + 3 a; DomainError unless kappa rho < rho'.
double operator_norm_bound(long a, double rho, double rho_prime, double kappa);

// Shift used by the derivative estimates, delta = kappa (rho' - kappa rho).
double derivative_shift(double rho, double rho_prime, double kappa);

// Modes k -> T_a^* k, coefficients f_k -> T_a^{-1} f_k, output width rho.
// ConeViolation if a nonzero mode has |T_a^* k| > kappa |k|.
FourierVectorField scale_step(const FourierVectorField& x, long a, const Widths& w);

struct ConeCertificate {
  bool pass = true;
  std::optional<Mode> witness;
  std::size_t checked = 0;
  // Boundary slopes of I+_sigma(omega) (m, l) and of I^kappa_a (s, r).
  double m = 0, l = 0, s = 0, r = 0;
  bool ordering = false;  // r <= l <= m <= s
  // Smallest kappa admitted by the general sufficient condition.
  double kappa_lower_bound = 0;
};

ConeCertificate cone_containment_certificate(const Real2& omega, double sigma, long a,
                                             double kappa, int k_max);

}  // namespace torusrg
