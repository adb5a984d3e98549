#pragma once

#include <Eigen/SparseCore>
#include <memory>
#include <string>
#include <vector>

#include "regrom/femesh.hpp"
#include "regrom/geometry.hpp"

namespace regrom {

/// Structured tensor-product FE grid on the unit square used to carry
/// sensor fields. Periodic grids identify the top and bottom rows (annular
/// reference domain, second coordinate = theta + 1/2).
class SensorGrid {
 public:
  SensorGrid(int degree, int cells, bool periodic_y);

  int degree() const { return degree_; }
  int cells() const { return cells_; }
  bool periodic_y() const { return periodic_; }
  int nx() const { return cells_ * degree_ + 1; }
  int ny() const { return periodic_ ? cells_ * degree_ : cells_ * degree_ + 1; }
  int n_nodes() const { return nx() * ny(); }
  Vector2d node_coord(int idx) const;

  double eval(const VectorXd& vals, const Vector2d& x) const;
  Vector2d gradient(const VectorXd& vals, const Vector2d& x) const;
  /// Sparse interpolation row: value(x) = sum_k w_k vals[idx_k].
  void eval_row(const Vector2d& x,
                std::vector<std::pair<int, double>>* out) const;
  Eigen::SparseMatrix<double> stiffness() const;

 private:
  /// Locates the cell and local coordinates; wraps/clamps the input.
  void locate(const Vector2d& x, int* cx, int* cy, Vector2d* loc) const;
  int node_index(int gi, int gj) const;

  int degree_, cells_;
  bool periodic_;
  Lagrange1d local_;  // equispaced nodes on [0,1]
};

/// Per-partition-element scalar field on the sensor grid, with gradient
/// access and a rescaling record. Used both for registration sensors and for
/// template-space members.
class SensorField {
 public:
  SensorField() = default;
  SensorField(std::shared_ptr<const SensorGrid> grid, MatrixXd values);

  const SensorGrid& grid() const { return *grid_; }
  std::shared_ptr<const SensorGrid> grid_ptr() const { return grid_; }
  int n_dd() const { return static_cast<int>(values_.cols()); }
  const MatrixXd& values() const { return values_; }
  MatrixXd& values() { return values_; }

  double eval(int q, const Vector2d& X) const;
  Vector2d gradient(int q, const Vector2d& X) const;

  /// Rescale all elements jointly so inf -> 0, sup -> 1; no-op on constant
  /// fields. Returns the recorded (min, max).
  std::pair<double, double> rescale();
  bool rescaled() const { return rescaled_; }
  std::pair<double, double> rescale_record() const { return {min_, max_}; }

 private:
  std::shared_ptr<const SensorGrid> grid_;
  MatrixXd values_;  // n_nodes x N_dd
  bool rescaled_ = false;
  double min_ = 0.0, max_ = 1.0;
};

/// Periodic extension s(x1, mod(x2 + 1/2, 1) - 1/2) of an annular sensor.
double periodic_extend(const SensorField& s, const Vector2d& x);

/// Grid smoothing fit: per element, minimizes
/// xi_s ||grad phi||^2_{L2} + sum_{j in element} (phi(xref_j) - u_j)^2.
SensorField sensor_from_grid_fit(const ReferenceMesh& mesh, const VectorXd& u,
                                 double xi_s,
                                 std::shared_ptr<const SensorGrid> grid,
                                 int n_dd);

/// H1 smoothing on the P1 vertex sub-mesh with the Dirichlet trace fixed to
/// the raw data; returns nodal values ordered like mesh.vertex_nodes().
VectorXd p1_smooth(const ReferenceMesh& mesh, const VectorXd& u, double xi_s);

/// Physical-domain smoothing: p1_smooth, then sampling at Psi_q(grid nodes).
SensorField sensor_from_physical_smoothing(const ReferenceMesh& mesh,
                                           const VectorXd& u, double xi_s,
                                           const Partition& partition,
                                           std::shared_ptr<const SensorGrid> grid);

/// Binary cache: one matrix (grid nodes x N_dd) per snapshot + rescale record.
void save_sensors(const std::string& path, const std::vector<SensorField>& s);
std::vector<SensorField> load_sensors(const std::string& path,
                                      std::shared_ptr<const SensorGrid> grid);

}  // namespace regrom
