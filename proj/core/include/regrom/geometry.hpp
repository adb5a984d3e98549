#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "regrom/common.hpp"
#include "regrom/lagrange.hpp"

namespace regrom {

/// Annular reference chart. Forward map takes (rho, theta) in
/// [0,1] x R (theta 1-periodic, fundamental domain (-1/2, 1/2]) to the
/// annulus r <= |p| <= R.
class PolarChart {
 public:
  PolarChart(double inner_radius, double outer_radius);

  double inner_radius() const { return r_; }
  double outer_radius() const { return R_; }

  Vector2d forward(const Vector2d& x) const;
  Matrix2d jacobian(const Vector2d& x) const;
  /// Inverse with theta normalized to (-1/2, 1/2].
  Vector2d inverse(const Vector2d& p, double tol = 1e-9) const;

 private:
  double r_, R_;
};

/// Parameterized boundary curve t in [0,1] -> R^2. Lines and circular arcs
/// are evaluated exactly; general curves are stored either as a polynomial
/// through Gauss-Lobatto samples or as a piecewise-linear point table.
class CurveParam {
 public:
  static CurveParam line(const Vector2d& a, const Vector2d& b);
  static CurveParam arc(const Vector2d& center, double radius, double theta0,
                        double theta1);
  /// Degree-J polynomial sampled at the J+1 Gauss-Lobatto parameters.
  static CurveParam sampled(const std::function<Vector2d(double)>& f,
                            int degree = 10);
  static CurveParam from_points(MatrixX2d gl_samples);  // values at GL nodes
  static CurveParam polyline(MatrixX2d pts);            // equispaced params

  Vector2d eval(double t) const;
  Vector2d deriv(double t) const;
  Vector2d operator()(double t) const { return eval(t); }

  /// Copy traversed in the opposite direction (orientation flag flipped).
  CurveParam reversed() const;
  bool reversed_orientation() const { return reversed_; }

  std::string describe() const;
  void write(std::ostream& os) const;

 private:
  struct Line {
    Vector2d a, b;
  };
  struct Arc {
    Vector2d c;
    double r, th0, th1;
  };
  struct Poly {
    Lagrange1d basis;
    MatrixX2d pts;
  };
  struct Polyline {
    MatrixX2d pts;
  };
  std::variant<Line, Arc, Poly, Polyline> rep_;
  bool reversed_ = false;

  double param(double t) const { return reversed_ ? 1.0 - t : t; }
  double dparam() const { return reversed_ ? -1.0 : 1.0; }
};

/// Bijective map from the unit square (or polar rectangle) onto one element
/// of the partition. Immutable and safe for concurrent reads.
class ElementMap {
 public:
  virtual ~ElementMap() = default;
  virtual Vector2d forward(const Vector2d& X) const = 0;
  virtual Matrix2d jacobian(const Vector2d& X) const = 0;
  /// Unclamped preimage; false when the solve does not converge. The result
  /// may fall outside the reference square (analytic continuation), which is
  /// how containment queries reject exterior points.
  virtual bool try_inverse(const Vector2d& p, Vector2d* X) const = 0;
  /// Preimage clamped to the reference square; throws InversionError when no
  /// preimage is found and DomainError when p lies outside the element by
  /// more than 1e-8 in reference coordinates.
  Vector2d inverse(const Vector2d& p) const;
  /// True if the second reference coordinate is 1-periodic (annulus chart).
  virtual bool periodic_theta() const { return false; }
  double area() const;  // |Omega_q| by quadrature of |det grad|
};

/// Transfinite (Gordon-Hall) interpolation of four boundary curves.
/// Facet convention: l=1 west (t -> (0,t)), l=2 east (t -> (1,t)),
/// l=3 south (t -> (t,0)), l=4 north (t -> (t,1)).
class GordonHallMap : public ElementMap {
 public:
  GordonHallMap(CurveParam west, CurveParam east, CurveParam south,
                CurveParam north, double corner_tol = 1e-12);

  Vector2d forward(const Vector2d& X) const override;
  Matrix2d jacobian(const Vector2d& X) const override;
  /// Newton iteration with multi-start seeds (center + quadrants).
  bool try_inverse(const Vector2d& p, Vector2d* X) const override;

  const CurveParam& edge(int l) const;  // l in 1..4
  const std::array<Vector2d, 4>& corners() const { return c_; }

 private:
  CurveParam west_, east_, south_, north_;
  std::array<Vector2d, 4> c_;  // c00, c10, c11, c01
};

/// Annulus as a single partition element through the polar chart.
class PolarAnnulusMap : public ElementMap {
 public:
  explicit PolarAnnulusMap(PolarChart chart) : chart_(chart) {}
  Vector2d forward(const Vector2d& X) const override { return chart_.forward(X); }
  Matrix2d jacobian(const Vector2d& X) const override { return chart_.jacobian(X); }
  bool try_inverse(const Vector2d& p, Vector2d* X) const override;
  bool periodic_theta() const override { return true; }
  const PolarChart& chart() const { return chart_; }

 private:
  PolarChart chart_;
};

/// Reference facet parameterization gamma_hat_l, l in 1..4 (west/east/south/north).
Vector2d facet_point(int l, double t);
/// Unit tangent of gamma_hat_l (constant per facet).
Vector2d facet_tangent(int l);

/// Coarse quadrilateral decomposition with connectivity tables. Tables are
/// 4 x N_dd with rows indexed by facet l and columns by element q; -1 marks a
/// boundary facet. orif(l,q)=1 when paired facets share the parameter
/// direction, 0 when one runs in reverse.
class Partition {
 public:
  Partition() = default;
  Partition(std::vector<std::shared_ptr<const ElementMap>> elems, MatrixXi qext,
            MatrixXi ell_ext, MatrixXi orif);

  int size() const { return static_cast<int>(elems_.size()); }  // N_dd
  int interior_facets() const { return n_int_; }
  const ElementMap& element(int q) const { return *elems_.at(q); }
  std::shared_ptr<const ElementMap> element_ptr(int q) const { return elems_.at(q); }
  const MatrixXi& qext() const { return qext_; }
  const MatrixXi& ell_ext() const { return ell_ext_; }
  const MatrixXi& orif() const { return orif_; }

  /// List of interior facets, each reported once as (q, l, q', l', orif).
  struct Facet {
    int q, l, qp, lp, orif;
  };
  std::vector<Facet> facets() const;

  /// Containing element of p (0-based), with the reference coordinates
  /// written to xref. Ties at facets go to the lowest element index.
  /// Returns -1 if p lies in no element (within tol of [0,1]^2).
  int locate(const Vector2d& p, Vector2d* xref, double tol = 1e-8) const;

  void save(const std::string& path) const;
  static Partition load(const std::string& path);

  /// Single identity unit-square element (rectangular problems).
  static Partition unit_square();
  /// Annulus r < |x| < R as one polar element.
  static Partition annulus(double r, double R);

 private:
  void validate() const;

  std::vector<std::shared_ptr<const ElementMap>> elems_;
  MatrixXi qext_, ell_ext_, orif_;
  int n_int_ = 0;
};

/// Purely geometric map Psi_{q,mu} o Lambda_{q,mubar} between two partitions
/// with identical connectivity (Phi_q = id).
Vector2d geometric_map(const Partition& at_mu, const Partition& at_mubar,
                       const Vector2d& p);

}  // namespace regrom
