#include "torusrg/normalization_step.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numbers>

#include "collocation.hpp"
#include "gmres.hpp"
#include "torusrg/error.hpp"

namespace torusrg {

using detail::Collocation;
using detail::GridBuffer;
using detail::ModeList;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sup_abs(const GridBuffer& b) {
  double s = 0;
  for (std::size_t i = 0; i < b.size(); ++i) s = std::max(s, std::abs(b[i]));
  return s;
}

using Spectra = std::array<std::vector<GridBuffer>, 2>;

struct QuadrantData {
  std::array<GridBuffer, 4> w;  // (I + Du)^{-1}, row major
  std::array<GridBuffer, 2> y;  // psi + H
  std::array<GridBuffer, 2> g1;  // (d1 g) o U
  std::array<GridBuffer, 2> g2;  // (d2 g) o U
};

struct Evaluation {
  Spectra spectra;
  std::vector<QuadrantData> quad;
  int taylor_order = 0;
  double max_jacobian = 0;
};

// Evaluates H(u) = (I + Du)^{-1} (g o U - Du psi) and its derivative in u on
// the collocation grids.
class Engine {
 public:
  Engine(const FourierVectorField& g, const Vec2& psi, int grid_size, const GridOptions& options,
         bool real)
      : g_(ModeList::from(g)), psi_(psi), col_(grid_size, options.shift, real), opt_(options) {}

  const Collocation& grid() const { return col_; }

  Evaluation evaluate(const ModeList& u, bool jacobian) const {
    Evaluation ev;
    const std::size_t n = col_.points();
    for (int i = 0; i < 2; ++i) ev.spectra[i].assign(col_.quadrants(), GridBuffer(n));
    if (jacobian) ev.quad.resize(col_.quadrants());

    for (int q = 0; q < col_.quadrants(); ++q) {
      std::array<GridBuffer, 2> uu{GridBuffer(n), GridBuffer(n)};
      std::array<GridBuffer, 4> du{GridBuffer(n), GridBuffer(n), GridBuffer(n), GridBuffer(n)};
      for (int i = 0; i < 2; ++i) {
        col_.synthesize(u.modes, u.coeffs[i], 0, 0, q, uu[i]);
        col_.synthesize(u.modes, u.coeffs[i], 1, 0, q, du[2 * i]);
        col_.synthesize(u.modes, u.coeffs[i], 0, 1, q, du[2 * i + 1]);
      }

      std::array<GridBuffer, 4> w{GridBuffer(n), GridBuffer(n), GridBuffer(n), GridBuffer(n)};
      for (std::size_t p = 0; p < n; ++p) {
        Complex a = 1.0 + du[0][p], b = du[1][p], c = du[2][p], d = 1.0 + du[3][p];
        Complex det = a * d - b * c;
        if (std::abs(det) < 1e-8) {
          fail(ErrorCode::SingularJacobian, "det DU vanishes on the collocation grid");
        }
        w[0][p] = d / det;
        w[1][p] = -b / det;
        w[2][p] = -c / det;
        w[3][p] = a / det;
        ev.max_jacobian = std::max(ev.max_jacobian, std::max(std::abs(du[0][p]) + std::abs(du[2][p]),
                                                             std::abs(du[1][p]) + std::abs(du[3][p])));
      }

      std::array<GridBuffer, 2> gu{GridBuffer(n), GridBuffer(n)};
      std::array<GridBuffer, 2> g1{GridBuffer(n), GridBuffer(n)};
      std::array<GridBuffer, 2> g2{GridBuffer(n), GridBuffer(n)};
      int order = compose(uu, q, jacobian, gu, g1, g2);
      ev.taylor_order = std::max(ev.taylor_order, order);

      std::array<GridBuffer, 2> h{GridBuffer(n), GridBuffer(n)};
      for (std::size_t p = 0; p < n; ++p) {
        Complex r0 = gu[0][p] - (du[0][p] * psi_[0] + du[1][p] * psi_[1]);
        Complex r1 = gu[1][p] - (du[2][p] * psi_[0] + du[3][p] * psi_[1]);
        h[0][p] = w[0][p] * r0 + w[1][p] * r1;
        h[1][p] = w[2][p] * r0 + w[3][p] * r1;
      }
      if (jacobian) {
        QuadrantData& qd = ev.quad[q];
        for (int i = 0; i < 2; ++i) {
          qd.y[i] = h[i];
          for (std::size_t p = 0; p < n; ++p) qd.y[i][p] += psi_[i];
        }
        qd.w = std::move(w);
        qd.g1 = std::move(g1);
        qd.g2 = std::move(g2);
      }
      for (int i = 0; i < 2; ++i) {
        col_.analyze(h[i]);
        ev.spectra[i][q] = std::move(h[i]);
      }
    }
    return ev;
  }

  // DH(u) v = W [ (Dg o U) v - (Dv)(psi + H) ].
  Spectra apply_jacobian(const Evaluation& ev, const ModeList& v) const {
    const std::size_t n = col_.points();
    Spectra out;
    for (int i = 0; i < 2; ++i) out[i].assign(col_.quadrants(), GridBuffer(n));
    GridBuffer v1(n), v2(n);
    std::array<GridBuffer, 4> dv{GridBuffer(n), GridBuffer(n), GridBuffer(n), GridBuffer(n)};
    for (int q = 0; q < col_.quadrants(); ++q) {
      const QuadrantData& qd = ev.quad[q];
      col_.synthesize(v.modes, v.coeffs[0], 0, 0, q, v1);
      col_.synthesize(v.modes, v.coeffs[1], 0, 0, q, v2);
      for (int i = 0; i < 2; ++i) {
        col_.synthesize(v.modes, v.coeffs[i], 1, 0, q, dv[2 * i]);
        col_.synthesize(v.modes, v.coeffs[i], 0, 1, q, dv[2 * i + 1]);
      }
      GridBuffer& o0 = out[0][q];
      GridBuffer& o1 = out[1][q];
      for (std::size_t p = 0; p < n; ++p) {
        Complex r[2];
        for (int j = 0; j < 2; ++j) {
          r[j] = qd.g1[j][p] * v1[p] + qd.g2[j][p] * v2[p] -
                 (dv[2 * j][p] * qd.y[0][p] + dv[2 * j + 1][p] * qd.y[1][p]);
        }
        o0[p] = qd.w[0][p] * r[0] + qd.w[1][p] * r[1];
        o1[p] = qd.w[2][p] * r[0] + qd.w[3][p] * r[1];
      }
      col_.analyze(o0);
      col_.analyze(o1);
    }
    return out;
  }

  Vec2 coefficient(const Spectra& s, const Mode& k) const {
    return {col_.coefficient(s[0], k), col_.coefficient(s[1], k)};
  }

  // Field on |k|_1 <= truncation, with the weighted mass the grid resolves
  // beyond it (discarded) and in its outer band (aliasing proxy).
  FourierVectorField extract(const Spectra& s, int truncation, double width, double& discarded,
                             double& aliasing) const {
    FourierVectorField out(truncation, width);
    discarded = 0;
    aliasing = 0;
    const int half = (col_.size() - 1) / 2;
    const double band = 3.0 * col_.size() / 8.0;
    for (int k1 = -half; k1 <= half; ++k1) {
      for (int k2 = -half; k2 <= half; ++k2) {
        Mode k{k1, k2};
        Vec2 c = coefficient(s, k);
        if (k.norm1() <= truncation) {
          if (c[0] != Complex(0) || c[1] != Complex(0)) out.set(k, c);
          continue;
        }
        double mass = norm1(c) * std::exp(width * k.norm1());
        discarded += mass;
        if (std::max(std::abs(k1), std::abs(k2)) >= band) aliasing += mass;
      }
    }
    out.add_discarded(discarded);
    return out;
  }

 private:
  // Taylor expansion g o U = sum u1^a u2^b / (a! b!) d^{a,b} g, stopped once
  // a whole degree falls below taylor_tol relative to the sum. With jacobian
  // set, the first derivatives of g are composed to the same order.
  int compose(const std::array<GridBuffer, 2>& uu, int q, bool jacobian,
              std::array<GridBuffer, 2>& gu, std::array<GridBuffer, 2>& g1,
              std::array<GridBuffer, 2>& g2) const {
    const std::size_t n = col_.points();
    std::vector<GridBuffer> p1, p2;
    p1.emplace_back(n);
    p2.emplace_back(n);
    for (std::size_t p = 0; p < n; ++p) p1[0][p] = p2[0][p] = 1.0;
    GridBuffer field(n), term(n);
    bool value_done = false;
    int order = 0;
    for (int d = 0;; ++d) {
      if (d > opt_.max_taylor_order + 1) {
        fail(ErrorCode::NoConvergence, "Taylor composition did not converge");
      }
      if (d > 0) {
        p1.emplace_back(n);
        p2.emplace_back(n);
        for (std::size_t p = 0; p < n; ++p) {
          p1[d][p] = p1[d - 1][p] * uu[0][p] / double(d);
          p2[d][p] = p2[d - 1][p] * uu[1][p] / double(d);
        }
      }
      double contribution = 0;
      for (int i = 0; i < 2; ++i) {
        term.zero();
        for (int a = 0; a <= d; ++a) {
          int b = d - a;
          col_.synthesize(g_.modes, g_.coeffs[i], a, b, q, field);
          for (std::size_t p = 0; p < n; ++p) {
            if (!value_done) term[p] += p1[a][p] * p2[b][p] * field[p];
            if (jacobian && a >= 1) g1[i][p] += p1[a - 1][p] * p2[b][p] * field[p];
            if (jacobian && b >= 1) g2[i][p] += p1[a][p] * p2[b - 1][p] * field[p];
          }
        }
        if (!value_done) {
          for (std::size_t p = 0; p < n; ++p) gu[i][p] += term[p];
          contribution = std::max(contribution, sup_abs(term));
        }
      }
      if (value_done) return order;
      order = d;
      double scale = std::max(sup_abs(gu[0]), sup_abs(gu[1]));
      if (d >= 1 && contribution <= opt_.taylor_tol * scale) {
        value_done = true;
        if (!jacobian) return order;
      }
      if (d >= opt_.max_taylor_order && !value_done) {
        fail(ErrorCode::NoConvergence, "Taylor composition did not converge");
      }
    }
  }

  ModeList g_;
  Vec2 psi_;
  Collocation col_;
  GridOptions opt_;
};

int resolve_grid(const GridOptions& grid, int n_x, int n_u) {
  int needed = 2 * (n_x + n_u) + 1;
  if (grid.size == 0) return detail::smooth_size(needed);
  if (grid.size < needed) {
    fail(ErrorCode::InvalidArgument,
         "collocation grid must have at least 2 (N_X + N_u) + 1 = " + std::to_string(needed) +
             " points per axis");
  }
  return grid.size;
}

void validate_grid(const GridOptions& grid) {
  if (grid.size < 0) fail(ErrorCode::InvalidArgument, "grid size must be >= 0");
  if (!(grid.shift >= 0)) fail(ErrorCode::InvalidArgument, "grid shift must be >= 0");
  if (grid.max_taylor_order < 1) fail(ErrorCode::InvalidArgument, "max_taylor_order must be >= 1");
  if (!(grid.taylor_tol > 0)) fail(ErrorCode::InvalidArgument, "taylor_tol must be > 0");
}

bool all_zero(const FourierVectorField& x) {
  for (const auto& [k, f] : x.modes()) {
    if (f[0] != Complex(0) || f[1] != Complex(0)) return false;
  }
  return true;
}

}  // namespace

TorusMap::TorusMap(FourierVectorField displacement) : u(std::move(displacement)) {
  Vec2 c = u.coefficient({0, 0});
  if (c[0] != Complex(0) || c[1] != Complex(0)) {
    fail(ErrorCode::InvalidArgument, "torus map displacement must have zero average");
  }
  u.erase({0, 0});
  u.prune();
}

TorusMap TorusMap::identity(int truncation, double width) {
  return TorusMap(FourierVectorField(truncation, width));
}

TorusMap TorusMap::from_json(const std::string& text) {
  std::string kind;
  try {
    kind = nlohmann::json::parse(text).value("kind", "");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("torus map JSON: ") + e.what());
  }
  if (kind != "torus_map") fail(ErrorCode::InvalidArgument, "JSON is not a torus_map");
  return TorusMap(FourierVectorField::from_json(text));
}

PullbackResult compose_pullback(const FourierVectorField& x, const TorusMap& map,
                                const GridOptions& grid) {
  validate_grid(grid);
  PullbackResult out;
  if (map.is_identity()) {
    out.field = x;
    return out;
  }
  Vec2 psi = average(x);
  FourierVectorField g = oscillatory_part(x);
  bool real = x.is_real(0.0) && map.u.is_real(0.0);
  int m = resolve_grid(grid, x.truncation(), map.u.truncation());
  Engine engine(g, psi, m, grid, real);
  Evaluation ev = engine.evaluate(ModeList::from(map.u), false);
  out.field = engine.extract(ev.spectra, x.truncation(), x.width(), out.discarded, out.aliasing);
  out.field.add({0, 0}, psi);
  out.grid_size = m;
  out.taylor_order = ev.taylor_order;
  out.max_jacobian = ev.max_jacobian;
  return out;
}

double eps_hat_radius(double sigma, double rho, double rho_prime, double psi_norm) {
  const double s6 = std::sqrt(6.0);
  return (s6 - 2.0) / 12.0 * sigma *
         std::min((rho - rho_prime) / (2.0 * kTwoPi), (3.0 - s6) / 6.0 * sigma / psi_norm);
}

double elimination_contraction_factor(double sigma, double psi_norm) {
  const double s6 = std::sqrt(6.0);
  return 2.0 * (1.0 + std::max(2.0 / 3.0 * (3.0 - s6), 6.0 * (s6 + 2.0) * psi_norm / sigma));
}

EliminationResult eliminate_far_perturbation(const FourierVectorField& g, const Vec2& psi,
                                             const EliminationOptions& opt) {
  ConeSpec cone = ConeSpec::far_resonant(psi, opt.sigma);
  if (!(opt.rho > opt.rho_prime && opt.rho_prime > 0)) {
    fail(ErrorCode::InvalidArgument, "elimination needs rho > rho' > 0");
  }
  if (!(opt.tol > 0)) fail(ErrorCode::InvalidArgument, "tolerance must be > 0");
  if (opt.max_iter < 0 || opt.max_halvings < 0) {
    fail(ErrorCode::InvalidArgument, "iteration limits must be >= 0");
  }
  validate_grid(opt.grid);

  const int n_trunc = g.truncation();
  const double psi_norm = norm1(psi);
  EliminationResult res;
  res.eps_hat = eps_hat_radius(opt.sigma, opt.rho, opt.rho_prime, psi_norm);
  res.input_norm_prime = norm_prime_r(g, opt.rho);
  res.inside_ball = res.input_norm_prime < res.eps_hat;
  if (opt.strict_ball && !res.inside_ball) {
    fail(ErrorCode::OutsideBall, "perturbation lies outside the elimination ball");
  }
  res.contraction_bound =
      elimination_contraction_factor(opt.sigma, psi_norm) * res.input_norm_prime;

  FourierVectorField far = project(g, cone, Side::Outside);
  if (all_zero(far)) {
    res.map = TorusMap::identity(n_trunc, opt.rho_prime);
    res.field = g;
    res.field.set_width(opt.rho_prime);
    res.residuals = {0.0};
    res.output_norm = norm_r(res.field, opt.rho_prime);
    res.contraction_ok = res.output_norm <= res.contraction_bound;
    return res;
  }

  const bool real = g.is_real(0.0);
  const int m = resolve_grid(opt.grid, n_trunc, n_trunc);
  Engine engine(g, psi, m, opt.grid, real);
  const Collocation& col = engine.grid();

  std::vector<Mode> far_modes, unknowns;
  for (int k1 = -n_trunc; k1 <= n_trunc; ++k1) {
    int r = n_trunc - std::abs(k1);
    for (int k2 = -r; k2 <= r; ++k2) {
      Mode k{k1, k2};
      if (cone.inside(k)) continue;
      far_modes.push_back(k);
      if (col.read_directly(k)) unknowns.push_back(k);
    }
  }
  std::vector<double> weight(unknowns.size());
  std::vector<Complex> symbol(unknowns.size());
  for (std::size_t j = 0; j < unknowns.size(); ++j) {
    const Mode& k = unknowns[j];
    weight[j] = std::exp(opt.rho_prime * k.norm1());
    symbol[j] = Complex(0, -kTwoPi) * (psi[0] * double(k.k1) + psi[1] * double(k.k2));
  }

  auto far_part = [&](const Spectra& s) {
    FourierVectorField f(n_trunc, opt.rho_prime);
    for (const Mode& k : far_modes) f.set(k, engine.coefficient(s, k));
    return f;
  };
  auto pack = [&](const Spectra& s, std::vector<double>& x) {
    x.resize(4 * unknowns.size());
    for (std::size_t j = 0; j < unknowns.size(); ++j) {
      Vec2 c = engine.coefficient(s, unknowns[j]);
      for (int i = 0; i < 2; ++i) {
        x[4 * j + 2 * i] = c[i].real() * weight[j];
        x[4 * j + 2 * i + 1] = c[i].imag() * weight[j];
      }
    }
  };
  // Scaled, preconditioned real unknowns -> displacement modes.
  auto unpack = [&](const std::vector<double>& x, double scale) {
    ModeList v;
    for (std::size_t j = 0; j < unknowns.size(); ++j) {
      Vec2 c;
      for (int i = 0; i < 2; ++i) {
        c[i] = scale * Complex(x[4 * j + 2 * i], x[4 * j + 2 * i + 1]) / (weight[j] * symbol[j]);
      }
      const Mode& k = unknowns[j];
      v.modes.push_back(k);
      v.coeffs[0].push_back(c[0]);
      v.coeffs[1].push_back(c[1]);
      if (real) {
        v.modes.push_back(-k);
        v.coeffs[0].push_back(std::conj(c[0]));
        v.coeffs[1].push_back(std::conj(c[1]));
      }
    }
    return v;
  };
  auto add_lists = [](const ModeList& a, const ModeList& b) {
    if (a.modes.empty()) return b;
    ModeList out = a;
    for (std::size_t j = 0; j < b.modes.size(); ++j) {
      out.coeffs[0][j] += b.coeffs[0][j];
      out.coeffs[1][j] += b.coeffs[1][j];
    }
    return out;
  };

  ModeList u;
  Evaluation current = engine.evaluate(u, true);
  FourierVectorField residual = far;  // exact at u = 0
  for (;;) {
    double r = norm_r(residual, opt.rho_prime);
    res.residuals.push_back(r);
    if (r <= opt.tol) break;
    if (res.sweeps >= opt.max_iter) {
      fail(ErrorCode::NoConvergence, "far residual " + std::to_string(r) + " above tolerance after " +
                                         std::to_string(res.sweeps) + " sweeps");
    }

    std::vector<double> rhs;
    Spectra rs;
    {
      FourierVectorField neg = residual;
      neg *= -1.0;
      rhs.resize(4 * unknowns.size());
      for (std::size_t j = 0; j < unknowns.size(); ++j) {
        Vec2 c = neg.coefficient(unknowns[j]);
        for (int i = 0; i < 2; ++i) {
          rhs[4 * j + 2 * i] = c[i].real() * weight[j];
          rhs[4 * j + 2 * i + 1] = c[i].imag() * weight[j];
        }
      }
    }
    detail::LinearOperator op = [&](const std::vector<double>& x, std::vector<double>& y) {
      Spectra s = engine.apply_jacobian(current, unpack(x, 1.0));
      pack(s, y);
    };
    double eta = std::clamp(r, 1e-14, 1e-2);
    detail::GmresResult lin = detail::gmres(op, rhs, eta, 60, 3);
    res.gmres_iterations += lin.iterations;

    bool accepted = false;
    double t = 1.0;
    for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
      ModeList candidate = add_lists(u, unpack(lin.x, t));
      try {
        Evaluation ev = engine.evaluate(candidate, true);
        FourierVectorField f = far_part(ev.spectra);
        if (norm_r(f, opt.rho_prime) < r) {
          u = std::move(candidate);
          current = std::move(ev);
          residual = std::move(f);
          accepted = true;
          break;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularJacobian && e.code() != ErrorCode::NoConvergence) throw;
      }
    }
    if (!accepted) {
      fail(ErrorCode::NoConvergence,
           "Newton step stalled at far residual " + std::to_string(r));
    }
    ++res.sweeps;
  }

  FourierVectorField disp(n_trunc, opt.rho_prime);
  for (std::size_t j = 0; j < u.modes.size(); ++j) {
    disp.set(u.modes[j], {u.coeffs[0][j], u.coeffs[1][j]});
  }
  res.map = TorusMap(std::move(disp));
  if (res.sweeps == 0) {
    res.field = g;
    res.field.set_width(opt.rho_prime);
  } else {
    res.field = engine.extract(current.spectra, n_trunc, opt.rho_prime, res.discarded, res.aliasing);
  }
  res.far_residual = res.residuals.back();
  res.grid_size = m;
  res.taylor_order = current.taylor_order;
  res.output_norm = norm_r(res.field, opt.rho_prime);
  res.contraction_ok = res.output_norm <= res.contraction_bound;
  return res;
}

EliminationResult eliminate_far(const FourierVectorField& x, const Vec2& psi,
                                const EliminationOptions& options) {
  FourierVectorField g = x;
  g.add({0, 0}, {-psi[0], -psi[1]});
  g.prune();
  EliminationResult res = eliminate_far_perturbation(g, psi, options);
  res.field.add({0, 0}, psi);
  return res;
}

}  // namespace torusrg
