#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "torusrg/error.hpp"
#include "torusrg/fourier_field.hpp"
#include "torusrg/normalization_step.hpp"
#include "torusrg/number_theory.hpp"

namespace torusrg {

struct RenormParams {
  double sigma = 0.1;
  double rho = 1.0;
  double rho_prime = 0.9;
  double kappa = 0;  // 0 selects default_kappa(sigma)
  // Domain radius zeta_n = c_prime / (alpha_n alpha_{n+1}).
  double c_prime = 1e-2;
  // Far residual accepted by the elimination: min(tol, relative_tol * |g|).
  double tol = 1e-12;
  double relative_tol = 1e-10;
  int max_iter = 12;
  bool check_domain = true;
  GridOptions grid;

  double resolved_kappa() const;
};

// Data of step n taken from the continued fraction of alpha_0.
struct Frequency {
  std::size_t n = 0;
  long a = 0;
  double alpha = 0;       // alpha_n
  double alpha_next = 0;  // alpha_{n+1}
  double frac = 0;        // {alpha_n} = 1 / alpha_{n+1}
};

// Needs n + 1 certified coefficients.
Frequency frequency_at(const CFExpansion& cf, std::size_t n);

inline Real2 omega_of(double alpha) { return {1.0, alpha}; }
inline Real2 big_omega_of(double alpha) { return {1.0, -1.0 / alpha}; }

struct StateNorms {
  double total = 0;          // |X_n - omega_n|_rho'
  double osc = 0;            // |(I - E)(X_n - omega_n)|_rho'
  double const_omega = 0;    // l1 size of the component of E(X_n) - omega_n along omega_n
  double const_Omega = 0;    // ... and along Omega_n
  double far_residual = 0;   // far-from-resonance part w.r.t. (omega_n, sigma)
};

// E f = c_omega omega + c_Omega Omega (Euclidean decomposition).
std::array<Complex, 2> constant_coordinates(const Vec2& c, double alpha);

StateNorms measure(const FourierVectorField& f, double alpha, double sigma, double rho_prime);

// X_n = omega_n + f with omega_n = (1, alpha_n).
struct RenormState {
  std::size_t n = 0;
  double alpha = 0;
  FourierVectorField f;
  double zeta = 0;
  StateNorms norms;

  Real2 omega() const { return omega_of(alpha); }
  FourierVectorField field() const;
};

struct StepReport {
  Frequency frequency;
  double input_norm = 0;
  double zeta = 0;
  double dropped_far = 0;  // far part of the input removed before scaling
  double scaled_norm_prime = 0;
  int newton_sweeps = 0;
  int gmres_iterations = 0;
  double far_residual = 0;
  double elimination_tol = 0;
  double eps_hat = 0;
  bool inside_ball = false;
  double contraction_bound = 0;
  bool contraction_ok = true;
  int taylor_order = 0;
  double aliasing = 0;
  double normalization = 0;   // |alpha' z - 1|
  double omega_cleanup = 0;   // round-off removed from the omega' component of E f'
  double frequency_defect = 0;  // |alpha' T^{-1} omega_n - omega_{n+1}|_1
};

RenormState one_step(const RenormState& state, const Frequency& freq, const RenormParams& params,
                     StepReport* report = nullptr);

// alpha_{n+1} (I - P_{n+1} E) I+_sigma(omega_{n+1}) T_{a_n} f, the derivative of
// one_step at omega_n.
FourierVectorField linear_step(const FourierVectorField& f, const Frequency& freq,
                               const RenormParams& params);

struct ConstantBlock {
  std::array<double, 4> g{};  // row major
  double nu = 0;              // trace, the nonzero eigenvalue
  Real2 kernel{};             // omega_n
  Real2 unstable{};           // Omega_{n+1}
  // Multiplier of the Omega coefficient: G Omega_n = mu Omega_{n+1}.
  double mu = 0;
};

// alpha > 1; frac = {alpha} (computed from alpha when omitted).
ConstantBlock constant_block(double alpha, std::optional<double> frac = std::nullopt);

struct WindingConeCheck {
  bool pass = false;
  double lhs = 0;  // |(I - P_n) E X_n|_1
  double rhs = 0;  // |(I - E) X_n|_rho'
};
WindingConeCheck winding_cone_check(const RenormState& state, double rho_prime);

struct TransientResult {
  Slope slope;  // slope of the returned frequency, > 1
  FourierVectorField f;
  std::vector<std::string> applied;  // "V", "S", "scale", "eliminate"
  double scale = 1;                  // first component of the frequency before rescaling
  int newton_sweeps = 0;
};

// Brings omega_0 = (1, alpha_0) to slope > 1 with V then S, rescales the
// frequency to (1, alpha) and removes far modes. ZeroSlope for alpha_0 = 0.
TransientResult transient_step(const FourierVectorField& f, const Slope& alpha0,
                               const RenormParams& params);

enum class StableManifold { Auto, On, Off };

struct OrbitOptions {
  std::size_t steps = 8;
  // Auto: on when the initial perturbation has no constant part.
  StableManifold stable_manifold = StableManifold::Auto;
  // Shooting stops once every Omega correction is below shooting_tol times the
  // oscillatory norm of its state, or after shooting_passes reruns.
  int shooting_passes = 16;
  double shooting_tol = 1e-6;
  mpfr_prec_t precision = BigReal::kDefaultPrecision;
};

struct OrbitFailure {
  std::size_t step = 0;
  ErrorCode code = ErrorCode::Internal;
  std::string message;
};

struct OrbitResult {
  std::string slope;  // after the transient
  std::vector<std::string> transient;
  std::vector<RenormState> states;  // X_0 .. X_m
  std::vector<StepReport> steps;    // steps[n] produced states[n + 1]
  std::vector<std::optional<double>> theta_running;
  std::optional<double> theta_hat;  // least squares on log norms over n = 2..m
  bool monotone_from_2 = false;
  std::optional<OrbitFailure> failure;
  bool stable_manifold = false;
  double initial_adjustment = 0;   // |c*_0| |Omega_0|_1
  double max_shadow_correction = 0;  // max_n |c_n - c*_n| |Omega_n|_1 / |f_{n-1}|, n >= 1
  int passes = 0;
  bool shooting_converged = false;
};

// f0 = X_0 - (1, alpha_0).
OrbitResult renorm_orbit(const FourierVectorField& f0, const Slope& alpha0,
                         const RenormParams& params, const OrbitOptions& options = {});

// Geometric rate from least squares on log(norms[first..]).
std::optional<double> fit_theta(const std::vector<double>& norms, std::size_t first);

// [Atilde_{n+1} Atilde_n / (sigma Atilde_{j-1}^{2+beta})]^{1/(2+beta)}.
double lambda_jn(const CFExpansion& cf, double sigma, double beta, long j, long n);

struct DecayRow {
  long j = 0;
  double norm = 0;       // |L_n ... L_j (I - E)| on modes |k|_1 <= truncation
  double log_ratio = 0;  // log(|L_n ... L_{j+1}| / |L_n ... L_j|), empty product = 1
  double lambda = 0;     // Lambda_{j,n}
};

struct DecayProbe {
  long n = 0;
  int truncation = 0;
  std::vector<DecayRow> rows;  // j = n, n-1, ..., 0
  bool log_ratio_increasing = false;
};

// Operator norms of the truncated compositions on the weighted l1 space of
// width rho', computed exactly as column suprema.
DecayProbe stable_decay_probe(const CFExpansion& cf, const RenormParams& params, int truncation,
                              long n, double beta = 0.0);

struct RemainderSample {
  double norm = 0;
  double remainder = 0;
  double bound = 0;  // |f|^2 / (zeta (zeta - |f|))
};

struct RemainderProbe {
  double zeta = 0;
  std::vector<RemainderSample> samples;
  double exponent = 0;  // slope of log remainder against log |f|
};

// Taylor remainder of one_step at omega_n along direction f, sampled at the
// given fractions of zeta.
RemainderProbe remainder_probe(const FourierVectorField& direction, const Frequency& freq,
                               const RenormParams& params,
                               const std::vector<double>& fractions = {0.1, 0.01});

// Halves c_prime from its initial value until one_step is defined on the
// probe fields scaled to 0.99 zeta_0.
double calibrate_c_prime(const std::vector<FourierVectorField>& directions, const Frequency& freq,
                         RenormParams params, int max_halvings = 20);

}  // namespace torusrg
