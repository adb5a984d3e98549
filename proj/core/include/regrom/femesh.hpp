#pragma once

#include <Eigen/SparseCore>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "regrom/geometry.hpp"
#include "regrom/lagrange.hpp"

namespace regrom {

/// High-order triangular FE mesh: nodes without repetition plus an
/// n_lp x N_e connectivity table (0-based in memory, 1-based in files).
/// Partition labels and reference coordinates realize the fast node
/// deformation x_j -> Psi_label(xref_j + displacement).
class ReferenceMesh {
 public:
  ReferenceMesh() = default;
  ReferenceMesh(int degree, MatrixX2d nodes, MatrixXi conn);

  int degree() const { return degree_; }
  int n_nodes() const { return static_cast<int>(nodes_.rows()); }
  int n_elements() const { return static_cast<int>(conn_.cols()); }
  int nodes_per_element() const { return static_cast<int>(conn_.rows()); }
  const MatrixX2d& nodes() const { return nodes_; }
  const MatrixXi& connectivity() const { return conn_; }
  const TriangleBasis& basis() const { return basis_; }

  /// Vertex (p=1) local indices within an element's node list.
  std::array<int, 3> vertex_local() const;
  /// Global vertex node indices of element k.
  std::array<int, 3> element_vertices(int k) const;
  /// Sorted list of all nodes that are vertices of some element.
  const std::vector<int>& vertex_nodes() const { return vertex_nodes_; }

  /// Partition labels (0-based element of the partition) and reference
  /// coordinates per node; set either at construction time by the mesh
  /// builder or recovered through Partition::locate.
  bool has_reference_coordinates() const { return label_.size() == n_nodes(); }
  const VectorXi& labels() const { return label_; }
  const MatrixX2d& reference_coordinates() const { return ref_; }
  void set_reference_coordinates(VectorXi labels, MatrixX2d ref);
  void compute_reference_coordinates(const Partition& partition,
                                     double tol = 1e-8);

  void save(const std::string& path) const;
  static ReferenceMesh load(const std::string& path);

 private:
  int degree_ = 0;
  MatrixX2d nodes_;
  MatrixXi conn_;
  TriangleBasis basis_;
  VectorXi label_;
  MatrixX2d ref_;
  std::vector<int> vertex_nodes_;
};

/// Elemental map evaluation Psi_k(X) = sum_i x_{i,k} l_i(X); when mapped
/// node coordinates are supplied it realizes Psi_{k,Phi}.
Vector2d elemental_map_eval(const ReferenceMesh& mesh, int k, const Vector2d& X,
                            const MatrixX2d* node_override = nullptr);
Matrix2d elemental_map_jacobian(const ReferenceMesh& mesh, int k,
                                const Vector2d& X,
                                const MatrixX2d* node_override = nullptr);

/// Evaluates Phi(x_j) for every node through the reference-coordinate route.
/// The evaluator receives (partition label, reference coordinates).
using NodeDeformer = std::function<Vector2d(int q, const Vector2d& xref)>;
MatrixX2d map_mesh(const ReferenceMesh& mesh, const NodeDeformer& phi);

struct BijectivityReport {
  bool pass = false;
  double min_det = 0.0;
  std::vector<int> offending;  // sorted element indices with nonpositive det
};

/// Jacobian positivity of every mapped elemental map, sampled at an
/// order-2p Gauss rule plus all Lagrange nodes.
BijectivityReport discrete_bijectivity_check(const ReferenceMesh& mesh,
                                             const MatrixX2d& mapped_nodes);

/// Distortion of element k of the mapped mesh relative to the original mesh:
/// f = 0.5 ||F||_F^2 / |det F| with F the composite p=1 gradient. Identity
/// maps give exactly 1; returns +inf when |det| < 1e-14.
double mesh_distortion(const ReferenceMesh& mesh, const MatrixX2d& mapped_nodes,
                       int k);

/// 2 * inradius / circumradius of the vertex triangle of mapped element k;
/// 1 for equilateral, 0 for degenerate.
double radius_ratio(const ReferenceMesh& mesh, const MatrixX2d& mapped_nodes,
                    int k);
double min_radius_ratio(const ReferenceMesh& mesh, const MatrixX2d& mapped_nodes);

/// Area of the p=1 vertex triangle of element k (signed positive for
/// correctly oriented elements).
double element_area_p1(const ReferenceMesh& mesh, const MatrixX2d& nodes, int k);

enum class NormKind { L2, H1 };

/// Sparse symmetric Gram matrix of the L2 or H1 inner product on the mesh.
struct InnerProductMatrix {
  Eigen::SparseMatrix<double> X;
  NormKind kind = NormKind::L2;

  double dot(const VectorXd& u, const VectorXd& v) const {
    return v.dot(X * u);
  }
  double norm(const VectorXd& u) const { return std::sqrt(std::max(0.0, dot(u, u))); }
};

InnerProductMatrix assemble_inner_product(const ReferenceMesh& mesh,
                                          NormKind kind);

/// Point location on the p=1 vertex triangles with barycentric output.
/// Returns element index or -1; clamped barycentric coordinates give the
/// reference point used for FE interpolation.
class MeshLocator {
 public:
  explicit MeshLocator(const ReferenceMesh& mesh, int bins_hint = 64);
  /// Tolerances are barycentric violations (dimensionless). Curved-boundary
  /// meshes need a chord-sag allowance when locating points that sit on the
  /// true boundary but outside the P1 hull.
  int locate(const Vector2d& p, Vector2d* Xref,
             double rel_tol = 1e-6) const;
  /// FE interpolation of coefficient vector u at physical point p.
  double interpolate(const VectorXd& u, const Vector2d& p,
                     double rel_tol = 1e-6) const;

 private:
  const ReferenceMesh& mesh_;
  double x0_, y0_, hx_, hy_;
  int nx_, ny_;
  std::vector<std::vector<int>> bins_;
  double diam_;
};

/// Snapshot matrix (one column per snapshot) text I/O.
void save_snapshots(const std::string& path, const MatrixXd& snaps);
MatrixXd load_snapshots(const std::string& path);

}  // namespace regrom
