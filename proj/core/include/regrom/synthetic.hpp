#pragma once

#include <string>

#include "regrom/femesh.hpp"
#include "regrom/geometry.hpp"

namespace regrom {

/// Analytic snapshot-manifold generators standing in for PDE solvers at desk
/// scale, on the three geometric settings of the toolkit.
enum class ManifoldKind { SquareFront, AnnulusGaussian, PartitionedFront };

struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::SquareFront;
  MatrixXd param_box;  // P x 2, [lo, hi] per row
  int n_train = 20;
  int n_test = 10;
  uint64_t seed = 0;
  // mesh resolution knobs
  int mesh_cells = 10;  // cells per direction (per element for partitions)
  int degree = 3;

  void validate() const;
  int n_params() const { return static_cast<int>(param_box.rows()); }
};

ManifoldSpec default_manifold_spec(ManifoldKind kind);

/// Structured degree-p mesh of the unit square (2 n^2 triangles); reference
/// coordinates are the node coordinates themselves.
ReferenceMesh make_square_mesh(int cells, int degree);

/// Structured degree-p mesh of the annulus r < |x| < R built on the polar
/// rectangle, periodic in theta. Labels/reference coordinates attached.
ReferenceMesh make_annulus_mesh(int rho_cells, int theta_cells, int degree,
                                double r, double R);

/// Structured degree-p mesh of a Gordon-Hall partition, cells^2 quads split
/// into triangles per element, interface nodes merged (lowest element label
/// wins). Reference coordinates attached exactly from construction.
ReferenceMesh make_partition_mesh(const Partition& partition, int cells,
                                  int degree);

/// The four-quadrilateral demonstration partition whose connectivity tables
/// match the spectral-element example (5 interior facets, one
/// opposite-orientation pair).
Partition make_fig_partition();
/// Variant with every corner scaled by `scale` about the origin.
Partition make_fig_partition_scaled(double scale);

/// Deterministic parameter samples: Latin-ish uniform draws from the box.
MatrixXd sample_parameters(const ManifoldSpec& spec, int count, uint64_t stream);

/// Field evaluators (exact formulas, usable as oracles).
double square_front_value(const VectorXd& mu, const Vector2d& x);
double annulus_gaussian_value(const VectorXd& mu, const Vector2d& x);
double partitioned_front_value(const VectorXd& mu, const Vector2d& x);

struct SyntheticData {
  ReferenceMesh mesh;
  Partition partition;
  MatrixXd train_snapshots;  // N_hf x n_train
  MatrixXd test_snapshots;
  MatrixXd train_params;     // n_train x P
  MatrixXd test_params;
};

/// Generates mesh, partition, parameters and snapshots for the spec.
SyntheticData generate(const ManifoldSpec& spec);

/// Evaluates the analytic field of `kind` at arbitrary points (snapshot
/// transfer oracle for the synthetic manifolds).
VectorXd evaluate_field(ManifoldKind kind, const VectorXd& mu,
                        const MatrixX2d& points);

}  // namespace regrom
