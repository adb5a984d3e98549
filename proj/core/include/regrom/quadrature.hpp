#pragma once

#include <vector>

#include "regrom/common.hpp"

namespace regrom {

struct Quadrature1d {
  VectorXd points;   // in [0,1]
  VectorXd weights;  // sum to 1
};

struct Quadrature2d {
  MatrixX2d points;
  VectorXd weights;
};

/// n-point Gauss-Legendre rule on [0,1]; exact for degree 2n-1.
Quadrature1d gauss_legendre(int n);

/// n-point Gauss-Lobatto rule on [0,1] (endpoints included); n >= 2.
Quadrature1d gauss_lobatto(int n);

/// Gauss-Lobatto points only (the spectral element nodes for degree J use J+1 points).
VectorXd gauss_lobatto_points(int n);

/// Tensor rule on the unit square from an n-point 1D Gauss rule per direction.
Quadrature2d tensor_gauss(int n);

/// Rule on the unit triangle {X1,X2>0, X1+X2<1}, exact for polynomials of
/// total degree <= deg. Built by collapsing a tensor Gauss rule.
Quadrature2d triangle_rule(int deg);

}  // namespace regrom
