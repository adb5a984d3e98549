#include "regrom/lagrange.hpp"

#include <cmath>

namespace regrom {

Lagrange1d::Lagrange1d(VectorXd nodes) : nodes_(std::move(nodes)) {
  const int n = size();
  bary_.resize(n);
  for (int j = 0; j < n; ++j) {
    double w = 1.0;
    for (int k = 0; k < n; ++k)
      if (k != j) w *= nodes_[j] - nodes_[k];
    bary_[j] = 1.0 / w;
  }
  diff_.setZero(n, n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      diff_(i, j) = (bary_[j] / bary_[i]) / (nodes_[i] - nodes_[j]);
      s += diff_(i, j);
    }
    diff_(i, i) = -s;
  }
  diff2_ = diff_ * diff_;
}

void Lagrange1d::eval(double x, VectorXd* v, VectorXd* d1, VectorXd* d2) const {
  const int n = size();
  // at-node branch
  for (int i = 0; i < n; ++i) {
    if (std::abs(x - nodes_[i]) < 1e-13) {
      if (v) {
        v->setZero(n);
        (*v)[i] = 1.0;
      }
      if (d1) *d1 = diff_.row(i).transpose();
      if (d2) *d2 = diff2_.row(i).transpose();
      return;
    }
  }
  double L = 1.0;
  for (int k = 0; k < n; ++k) L *= x - nodes_[k];
  if (v) v->resize(n);
  if (d1) d1->resize(n);
  if (d2) d2->resize(n);
  double S0 = 0.0, S0sq = 0.0;
  for (int k = 0; k < n; ++k) {
    double inv = 1.0 / (x - nodes_[k]);
    S0 += inv;
    S0sq += inv * inv;
  }
  for (int j = 0; j < n; ++j) {
    double inv = 1.0 / (x - nodes_[j]);
    double lj = L * bary_[j] * inv;
    double Sj = S0 - inv;
    double Sj2 = S0sq - inv * inv;
    if (v) (*v)[j] = lj;
    if (d1) (*d1)[j] = lj * Sj;
    if (d2) (*d2)[j] = lj * (Sj * Sj - Sj2);
  }
}

VectorXd Lagrange1d::values(double x) const {
  VectorXd v;
  eval(x, &v, nullptr, nullptr);
  return v;
}

VectorXd Lagrange1d::derivs(double x) const {
  VectorXd d;
  eval(x, nullptr, &d, nullptr);
  return d;
}

VectorXd Lagrange1d::derivs2(double x) const {
  VectorXd d;
  eval(x, nullptr, nullptr, &d);
  return d;
}

TriangleBasis::TriangleBasis(int degree) : p_(degree) {
  if (degree < 1) throw InputError("TriangleBasis: degree must be >= 1");
  const int n = (degree + 1) * (degree + 2) / 2;
  nodes_.resize(n, 2);
  powers_.clear();
  int m = 0;
  for (int j = 0; j <= degree; ++j)
    for (int i = 0; i + j <= degree; ++i, ++m) {
      nodes_(m, 0) = static_cast<double>(i) / degree;
      nodes_(m, 1) = static_cast<double>(j) / degree;
      powers_.emplace_back(i, j);
    }
  MatrixXd V(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      V(r, c) = std::pow(nodes_(r, 0), powers_[c].first) *
                std::pow(nodes_(r, 1), powers_[c].second);
  coef_ = V.partialPivLu().solve(MatrixXd::Identity(n, n));
}

int TriangleBasis::vertex_index(int v) const {
  switch (v) {
    case 0:
      return 0;  // (0,0)
    case 1:
      return p_;  // (1,0)
    case 2:
      return size() - 1;  // (0,1)
    default:
      throw InputError("TriangleBasis::vertex_index: v must be 0,1,2");
  }
}

VectorXd TriangleBasis::values(const Vector2d& X) const {
  const int n = size();
  VectorXd mono(n);
  for (int c = 0; c < n; ++c)
    mono[c] = std::pow(X[0], powers_[c].first) * std::pow(X[1], powers_[c].second);
  return coef_.transpose() * mono;
}

MatrixX2d TriangleBasis::gradients(const Vector2d& X) const {
  const int n = size();
  VectorXd dx(n), dy(n);
  for (int c = 0; c < n; ++c) {
    auto [a, b] = powers_[c];
    dx[c] = a == 0 ? 0.0 : a * std::pow(X[0], a - 1) * std::pow(X[1], b);
    dy[c] = b == 0 ? 0.0 : b * std::pow(X[0], a) * std::pow(X[1], b - 1);
  }
  MatrixX2d g(n, 2);
  g.col(0) = coef_.transpose() * dx;
  g.col(1) = coef_.transpose() * dy;
  return g;
}

}  // namespace regrom
