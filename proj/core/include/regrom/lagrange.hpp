#pragma once

#include <vector>

#include "regrom/common.hpp"

namespace regrom {

/// 1D Lagrange basis on a fixed node set (typically Gauss-Lobatto points).
/// Evaluation is stable at and away from the nodes.
class Lagrange1d {
 public:
  Lagrange1d() = default;
  explicit Lagrange1d(VectorXd nodes);

  int size() const { return static_cast<int>(nodes_.size()); }
  const VectorXd& nodes() const { return nodes_; }

  /// Basis values l_j(x).
  VectorXd values(double x) const;
  /// First derivatives l_j'(x).
  VectorXd derivs(double x) const;
  /// Second derivatives l_j''(x).
  VectorXd derivs2(double x) const;

  /// Differentiation matrix D with D(i,j) = l_j'(t_i).
  const MatrixXd& diff_matrix() const { return diff_; }

 private:
  void eval(double x, VectorXd* v, VectorXd* d1, VectorXd* d2) const;

  VectorXd nodes_;
  VectorXd bary_;  // barycentric weights
  MatrixXd diff_;
  MatrixXd diff2_;
};

/// Lagrange basis on the unit triangle {X1,X2 >= 0, X1+X2 <= 1} of total
/// degree p, on the lattice nodes (i/p, j/p). Node order is lexicographic in
/// (j,i); the three vertices sit at local indices 0, p and n_lp-1.
class TriangleBasis {
 public:
  TriangleBasis() = default;
  explicit TriangleBasis(int degree);

  int degree() const { return p_; }
  int size() const { return static_cast<int>(nodes_.rows()); }  // n_lp
  const MatrixX2d& nodes() const { return nodes_; }
  int vertex_index(int v) const;  // v in {0,1,2}

  VectorXd values(const Vector2d& X) const;
  /// Gradients, one row per basis function: (d l_i/dX1, d l_i/dX2).
  MatrixX2d gradients(const Vector2d& X) const;

 private:
  int p_ = 0;
  MatrixX2d nodes_;
  MatrixXd coef_;  // monomial coefficients, column i = basis function i
  std::vector<std::pair<int, int>> powers_;
};

}  // namespace regrom
