#include "regrom/quadrature.hpp"

#include <cmath>

namespace regrom {

namespace {

// Legendre P_n(x) and P_n'(x) on [-1,1] by recurrence.
void legendre(int n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

}  // namespace

Quadrature1d gauss_legendre(int n) {
  if (n < 1) throw InputError("gauss_legendre: n must be >= 1");
  Quadrature1d q;
  q.points.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev initial guess, Newton refinement
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p, dp;
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, p, dp);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    legendre(n, x, p, dp);
    q.points[n - 1 - i] = 0.5 * (x + 1.0);
    q.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return q;
}

VectorXd gauss_lobatto_points(int n) {
  if (n < 2) throw InputError("gauss_lobatto: n must be >= 2");
  VectorXd x(n);
  x[0] = -1.0;
  x[n - 1] = 1.0;
  // interior points are roots of P'_{n-1}
  for (int i = 1; i < n - 1; ++i) {
    double xi = std::cos(M_PI * (n - 1 - i) / (n - 1));  // ascending guess
    for (int it = 0; it < 100; ++it) {
      double p, dp;
      legendre(n - 1, xi, p, dp);
      // Newton on f = dp; f' from Legendre ODE: (1-x^2) p'' - 2x p' + n(n+1) p = 0
      double ddp = (2.0 * xi * dp - (n - 1) * n * p) / (1.0 - xi * xi);
      double dx = dp / ddp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    x[i] = xi;
  }
  VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = 0.5 * (x[i] + 1.0);
  // symmetrize to kill roundoff drift
  for (int i = 0; i < n / 2; ++i) {
    double a = 0.5 * (out[i] + (1.0 - out[n - 1 - i]));
    out[i] = a;
    out[n - 1 - i] = 1.0 - a;
  }
  if (n % 2 == 1) out[n / 2] = 0.5;
  return out;
}

Quadrature1d gauss_lobatto(int n) {
  Quadrature1d q;
  q.points = gauss_lobatto_points(n);
  q.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double xi = 2.0 * q.points[i] - 1.0;
    double p, dp;
    legendre(n - 1, xi, p, dp);
    q.weights[i] = 1.0 / (n * (n - 1) * p * p);
  }
  return q;
}

Quadrature2d tensor_gauss(int n) {
  Quadrature1d g = gauss_legendre(n);
  Quadrature2d q;
  q.points.resize(n * n, 2);
  q.weights.resize(n * n);
  int m = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i, ++m) {
      q.points(m, 0) = g.points[i];
      q.points(m, 1) = g.points[j];
      q.weights[m] = g.weights[i] * g.weights[j];
    }
  return q;
}

Quadrature2d triangle_rule(int deg) {
  // Duffy collapse: X = (xi (1-eta), eta), weight (1-eta).
  int nx = (deg + 2) / 2;
  int ny = (deg + 3) / 2;
  Quadrature1d gx = gauss_legendre(std::max(nx, 1));
  Quadrature1d gy = gauss_legendre(std::max(ny, 1));
  Quadrature2d q;
  int n = static_cast<int>(gx.points.size() * gy.points.size());
  q.points.resize(n, 2);
  q.weights.resize(n);
  int m = 0;
  for (int j = 0; j < gy.points.size(); ++j)
    for (int i = 0; i < gx.points.size(); ++i, ++m) {
      double xi = gx.points[i], eta = gy.points[j];
      q.points(m, 0) = xi * (1.0 - eta);
      q.points(m, 1) = eta;
      q.weights[m] = gx.weights[i] * gy.weights[j] * (1.0 - eta);
    }
  return q;
}

}  // namespace regrom
