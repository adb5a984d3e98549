#pragma once

#include <string>
#include <vector>

#include "regrom/geometry.hpp"
#include "regrom/lagrange.hpp"

namespace regrom {

enum class SpaceKind { Rect, Polar, DD };

/// Tensor Lagrange basis on Gauss-Lobatto points (the Q_J spectral basis).
struct TensorPolyBasis {
  explicit TensorPolyBasis(int J);
  int degree;
  Lagrange1d line;  // shared 1D factor
  /// value of l_{i,j} at X, flattened loc = i + j*(J+1)
  VectorXd values(const Vector2d& X) const;
};

/// Fourier basis {1, cos(2 pi k x).., sin(2 pi k x)..} on (-1/2,1/2).
struct FourierBasis {
  explicit FourierBasis(int Jf);
  int order;                       // J_f
  int size() const { return 2 * order + 1; }
  VectorXd values(double x) const;
  VectorXd derivs(double x) const;
  VectorXd derivs2(double x) const;
};

/// Per-point local tensor factors for one element-component block.
struct LocalEval {
  VectorXd v, dx, dy;        // values, first derivatives
  VectorXd dxx, dxy, dyy;    // second derivatives (filled on request)
};

/// Linear operator W_M from coefficient vectors to piecewise-polynomial
/// displacement fields, with a Gramian realizing the mapping norm
/// |||phi|||^2 = sum_q |Omega_q| ||phi_q||_{H2}^2 and the stabilization
/// matrix of the H2 seminorm. The stored basis is Gramian-orthonormal, so
/// W_M is an isometry: |||W_M a||| = ||a||_2.
class DisplacementSpace {
 public:
  SpaceKind kind = SpaceKind::Rect;
  int J = 0;            // tensor degree (rect/dd)
  int Jr = 0, Jf = 0;   // polar degrees
  int n_dd = 1;
  bool modified_norm = false;

  int raw_dim() const { return static_cast<int>(G.rows()); }
  int dim() const { return static_cast<int>(basis.cols()); }  // M
  int full_dim = 0;  // M_hf, dimension of the constrained ambient space

  MatrixXd basis;   // raw_dim x M, G-orthonormal columns
  MatrixXd G;       // raw Gramian of the mapping inner product
  MatrixXd A_stab;  // M x M  H2-seminorm matrix
  VectorXd areas;   // |Omega_q|

  bool periodic() const { return kind == SpaceKind::Polar; }

  // local tensor block machinery -------------------------------------------
  int local_size() const;                  // block size per (q, d)
  int raw_index(int q, int d, int loc) const;
  LocalEval local_eval(const Vector2d& X, bool second = false) const;

  // evaluation ---------------------------------------------------------------
  VectorXd to_raw(const VectorXd& a) const { return basis * a; }
  Vector2d eval_raw(const VectorXd& raw, int q, const Vector2d& X) const;
  Matrix2d eval_raw_gradient(const VectorXd& raw, int q, const Vector2d& X) const;
  Vector2d eval(const VectorXd& a, int q, const Vector2d& X) const;
  Matrix2d eval_gradient(const VectorXd& a, int q, const Vector2d& X) const;

  /// Mapping inner product ((phi1, phi2)) of raw coefficient vectors.
  double inner_raw(const VectorXd& r1, const VectorXd& r2) const {
    return r2.dot(G * r1);
  }
  double norm_raw(const VectorXd& r) const {
    return std::sqrt(std::max(0.0, inner_raw(r, r)));
  }

  /// Restriction to the span of reduced columns Z (M x M'), preserving the
  /// isometry when Z has orthonormal columns.
  DisplacementSpace restricted(const MatrixXd& Z) const;

  void save(const std::string& path) const;
  static DisplacementSpace load(const std::string& path);

  // internal factors, exposed for precomputations
  Lagrange1d lag1;   // x1 factor
  Lagrange1d lag2;   // x2 factor (rect/dd)
  FourierBasis fourier{0};
};

/// [Q_J]^2 on the unit square with vanishing normal boundary component.
DisplacementSpace build_rect_space(int J);

/// Polar ambient space: radial component vanishing at x1 = 0,1; both
/// components tensor polynomial x Fourier.
DisplacementSpace build_polar_space(int Jr, int Jf);

/// Spectral-element space on a partition: per-element [Q_J]^2 with zero
/// normal trace on every element edge and vector continuity across interior
/// facets (sign-reversed for opposite orientation). Basis = SVD null space
/// of the constraint matrix, Gram-orthonormalized.
DisplacementSpace build_dd_space(const Partition& partition, int J,
                                 bool modified_norm = false);

/// Closed-form ambient dimension count of the paper's formula
/// (2(J+1)^2 - 4(J+1)) N_dd - (J-1) N_int, for comparison reports.
long dd_dimension_formula(int J, int n_dd, int n_int);

/// The constraint matrix rows used by the builders (exposed for rank tests).
MatrixXd dd_constraint_matrix(const Partition& partition, int J);

}  // namespace regrom
