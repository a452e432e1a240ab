#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace torusrg::detail {

struct GmresResult {
  std::vector<double> x;
  double relative_residual = 0;
  int iterations = 0;
  bool converged = false;
};

using LinearOperator = std::function<void(const std::vector<double>&, std::vector<double>&)>;

// Restarted GMRES with modified Gram-Schmidt and Givens rotations, x0 = 0.
inline GmresResult gmres(const LinearOperator& apply, const std::vector<double>& b, double rtol,
                         int restart, int max_restarts) {
  const std::size_t n = b.size();
  auto dot = [](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
  };
  GmresResult out;
  out.x.assign(n, 0.0);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0) {
    out.converged = true;
    return out;
  }
  std::vector<double> r = b, w(n);
  for (int cycle = 0; cycle <= max_restarts; ++cycle) {
    if (cycle > 0) {
      apply(out.x, w);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    }
    double beta = std::sqrt(dot(r, r));
    out.relative_residual = beta / bnorm;
    if (out.relative_residual <= rtol) {
      out.converged = true;
      return out;
    }
    std::vector<std::vector<double>> v{r};
    for (double& e : v[0]) e /= beta;
    std::vector<std::vector<double>> h;
    std::vector<double> cs, sn, g{beta};
    int k = 0;
    for (; k < restart; ++k) {
      apply(v[k], w);
      std::vector<double> col(k + 2, 0.0);
      for (int j = 0; j <= k; ++j) {
        col[j] = dot(w, v[j]);
        for (std::size_t i = 0; i < n; ++i) w[i] -= col[j] * v[j][i];
      }
      col[k + 1] = std::sqrt(dot(w, w));
      for (int j = 0; j < k; ++j) {
        double t = cs[j] * col[j] + sn[j] * col[j + 1];
        col[j + 1] = -sn[j] * col[j] + cs[j] * col[j + 1];
        col[j] = t;
      }
      double rho = std::hypot(col[k], col[k + 1]);
      double c = rho == 0 ? 1.0 : col[k] / rho;
      double s = rho == 0 ? 0.0 : col[k + 1] / rho;
      cs.push_back(c);
      sn.push_back(s);
      double hk1 = col[k + 1];
      col[k] = rho;
      col[k + 1] = 0;
      g.push_back(-s * g[k]);
      g[k] *= c;
      h.push_back(col);
      ++out.iterations;
      out.relative_residual = std::abs(g[k + 1]) / bnorm;
      if (out.relative_residual <= rtol || hk1 == 0) {
        ++k;
        break;
      }
      std::vector<double> next = w;
      for (double& e : next) e /= hk1;
      v.push_back(std::move(next));
    }
    std::vector<double> y(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= h[j][i] * y[j];
      y[i] = s / h[i][i];
    }
    for (int j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < n; ++i) out.x[i] += y[j] * v[j][i];
    }
    if (out.relative_residual <= rtol) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace torusrg::detail
