#include "torusrg/scaling_step.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "torusrg/error.hpp"

namespace torusrg {

double default_kappa(double sigma) { return 1.0 - (1.0 - 3.0 * sigma) / 3.0; }

double operator_norm_bound(long a, double rho, double rho_prime, double kappa) {
  if (!(kappa * rho < rho_prime)) {
    fail(ErrorCode::DomainError, "operator norm bound needs kappa*rho < rho'");
  }
  const double ad = static_cast<double>(a);
  return 6.0 * std::numbers::pi * ad / (rho_prime - kappa * rho) + 3.0 * ad;
}

double derivative_shift(double rho, double rho_prime, double kappa) {
  return kappa * (rho_prime - kappa * rho);
}

FourierVectorField scale_step(const FourierVectorField& x, long a, const Widths& w) {
  if (a < 1) fail(ErrorCode::InvalidArgument, "scale_step needs a >= 1");
  if (!(w.kappa * w.rho < w.rho_prime)) {
    fail(ErrorCode::DomainError, "scale_step needs kappa*rho < rho'");
  }
  FourierVectorField out(x.truncation(), w.rho);
  for (const auto& [k, f] : x.modes()) {
    Mode image = t_star(a, k);
    if (image.norm1() > w.kappa * k.norm1()) {
      fail(ErrorCode::ConeViolation,
           "mode (" + std::to_string(k.k1) + "," + std::to_string(k.k2) +
               ") is not contracted by T_" + std::to_string(a) + "^*");
    }
    out.set(image, {-static_cast<double>(a) * f[0] + f[1], f[0]});
  }
  return out;
}

ConeCertificate cone_containment_certificate(const Real2& omega, double sigma, long a,
                                             double kappa, int k_max) {
  const double w1 = omega[0], w2 = omega[1];
  const double ad = static_cast<double>(a);
  ConeCertificate c;
  c.m = -(w1 - sigma) / (w2 + sigma);
  c.l = -(w1 + sigma) / (w2 - sigma);
  c.s = -(1 - kappa) / (ad - 1 + kappa);
  c.r = -(1 + kappa) / (ad + 1 - kappa);
  c.ordering = c.r <= c.l && c.l <= c.m && c.m <= c.s;
  c.kappa_lower_bound =
      1.0 - std::min(ad * (w1 - sigma), 2.0 * (w2 - sigma) - ad * (w1 + sigma)) /
                (std::abs(w1) + std::abs(w2));

  const Vec2 psi = to_vec2(omega);
  for (int k1 = -k_max; k1 <= k_max; ++k1) {
    for (int k2 = -k_max; k2 <= k_max; ++k2) {
      Mode k{k1, k2};
      if (k.norm1() > k_max || k.norm1() == 0 || !is_resonant(k, psi, sigma)) continue;
      ++c.checked;
      if (t_star(a, k).norm1() > kappa * k.norm1()) {
        c.pass = false;
        if (!c.witness || k.norm1() < c.witness->norm1()) c.witness = k;
      }
    }
  }
  return c;
}

}  // namespace torusrg
