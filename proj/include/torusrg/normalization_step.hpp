#pragma once

#include <string>
#include <vector>

#include "torusrg/fourier_field.hpp"

namespace torusrg {

// U(theta) = theta + u(theta); u carries no k = 0 mode.
struct TorusMap {
  FourierVectorField u;

  TorusMap() = default;
  explicit TorusMap(FourierVectorField displacement);
  static TorusMap identity(int truncation, double width = 1.0);

  bool is_identity() const { return u.empty(); }
  std::string to_json() const { return u.to_json("torus_map"); }
  static TorusMap from_json(const std::string& text);
};

struct GridOptions {
  // Points per axis; 0 picks the smallest 2,3,5-smooth size >= 2 (N_X + N_u) + 1.
  int size = 0;
  // Imaginary offset of the collocation grids, in units of the exponential
  // weight (0 gives the plain real grid).
  double shift = 0.9;
  int max_taylor_order = 60;
  // Relative size of the last Taylor order kept.
  double taylor_tol = 1e-18;
};

struct PullbackResult {
  FourierVectorField field;
  int grid_size = 0;
  int taylor_order = 0;
  // Weighted mass resolved by the grid but beyond the truncation (dropped),
  // and in the outer eighth of the grid spectrum (aliasing proxy).
  double discarded = 0;
  double aliasing = 0;
  double max_jacobian = 0;  // sup of |Du| (l1 operator norm) over the grid
};

// (DU)^{-1} X o U sampled on the collocation grids and refitted to the
// truncation of X.
PullbackResult compose_pullback(const FourierVectorField& x, const TorusMap& map,
                                const GridOptions& grid = {});

struct EliminationOptions {
  double sigma = 0.1;
  double rho = 1.0;        // width of the input norm
  double rho_prime = 0.9;  // width of the output norm
  double tol = 1e-12;
  int max_iter = 12;
  int max_halvings = 8;
  bool strict_ball = false;  // raise OutsideBall when the input is outside the theorem's ball
  GridOptions grid;
};

struct EliminationResult {
  TorusMap map;
  // Pulled-back field X' (eliminate_far) or X' - psi (eliminate_far_perturbation).
  FourierVectorField field;
  std::vector<double> residuals;  // far residual before each sweep and at the end
  int sweeps = 0;
  double far_residual = 0;
  double eps_hat = 0;
  double input_norm_prime = 0;  // |X - psi|'_rho
  bool inside_ball = false;
  double contraction_bound = 0;
  double output_norm = 0;  // |X' - psi|_rho'
  bool contraction_ok = true;
  int grid_size = 0;
  int taylor_order = 0;
  double aliasing = 0;
  double discarded = 0;
  int gmres_iterations = 0;
};

double eps_hat_radius(double sigma, double rho, double rho_prime, double psi_norm);
double elimination_contraction_factor(double sigma, double psi_norm);

// Finds U with [I-_sigma(psi)] (DU)^{-1} X o U = 0 by Newton iteration.
EliminationResult eliminate_far(const FourierVectorField& x, const Vec2& psi,
                                const EliminationOptions& options);

// Same, given g = X - psi directly; the returned field is X' - psi.
EliminationResult eliminate_far_perturbation(const FourierVectorField& g, const Vec2& psi,
                                             const EliminationOptions& options);

}  // namespace torusrg
