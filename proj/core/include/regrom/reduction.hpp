#pragma once

#include <optional>
#include <string>
#include <vector>

#include "regrom/binio.hpp"
#include "regrom/femesh.hpp"
#include "regrom/registration.hpp"
#include "regrom/spaces.hpp"

namespace regrom {

struct PODBasis {
  MatrixXd Z;          // N_hf x N, X-orthonormal
  VectorXd eigenvalues;  // all retained lambda_n, descending
  MatrixXd coefficients;  // N x n_train, alpha^k = Z' X u^k
};

/// Method of snapshots in the X inner product; truncation by the energy rule
/// (tol > 0) or a fixed mode count (fixed_n > 0).
PODBasis pod(const MatrixXd& snapshots, const InnerProductMatrix& X, double tol,
             int fixed_n = 0);

/// Per-coordinate thin-plate-spline interpolant with a linear polynomial
/// tail over min-max normalized parameters, with leave-one-out R^2 gating.
class RbfRegressor {
 public:
  RbfRegressor() = default;
  /// targets: n_train x n_out. Coordinates with LOO R^2 <= r2_threshold are
  /// deactivated; gated coordinates predict `fallback` (0 for mapping
  /// coefficients, the training mean for solution coefficients).
  enum class GateFallback { Zero, Mean };
  RbfRegressor(const MatrixXd& params, const MatrixXd& targets,
               double r2_threshold, GateFallback fallback);

  VectorXd predict(const VectorXd& mu) const;
  const VectorXd& r2() const { return r2_; }
  const std::vector<char>& active() const { return active_; }
  int n_outputs() const { return static_cast<int>(active_.size()); }
  int n_params() const { return static_cast<int>(lo_.size()); }

  void write(BinWriter& w) const;
  static RbfRegressor read(BinReader& r);

 private:
  VectorXd normalize(const VectorXd& mu) const;
  static MatrixXd system_matrix(const MatrixXd& centers);

  MatrixXd centers_;   // n x P (normalized)
  MatrixXd weights_;   // (n + P + 1) x n_out, kernel weights + linear tail
  VectorXd lo_, hi_;   // parameter box
  VectorXd r2_;
  std::vector<char> active_;
  VectorXd fallback_;
};

/// Everything the online stage needs: the mapping space and its regressor,
/// the POD basis and its regressor, and the training parameter box.
struct ReducedModel {
  DisplacementSpace mapping_space;  // W_M (reduced)
  RbfRegressor map_regressor;
  PODBasis pod_basis;
  RbfRegressor field_regressor;
  MatrixXd train_params;  // n_train x P
  uint64_t fingerprint = 0;

  void save(const std::string& path) const;
  static ReducedModel load(const std::string& path);

  /// True when mu falls outside the training parameter box.
  bool out_of_sample_box(const VectorXd& mu) const;
};

struct MapPrediction {
  VectorXd a;            // predicted mapping coefficients
  MatrixX2d nodes;       // deformed mesh nodes
  BijectivityReport bijectivity;
  double min_radius_ratio = 0.0;
};

/// Deforms the mesh for parameter mu and attaches the quality report.
MapPrediction predict_map(const ReducedModel& model, const ReferenceMesh& mesh,
                          const Partition& partition, const VectorXd& mu);

struct FieldPrediction {
  MapPrediction map;
  VectorXd alpha;
  VectorXd field;  // u_hat = Z_N alpha_hat
};

FieldPrediction predict_field(const ReducedModel& model,
                              const ReferenceMesh& mesh,
                              const Partition& partition, const VectorXd& mu,
                              std::optional<int> n_modes = std::nullopt);

struct ErrorMetrics {
  double e_avg = 0.0;
  VectorXd per_sample;   // relative X-norm errors (excluded entries = -1)
  std::vector<int> excluded;  // zero-norm truths
};

ErrorMetrics error_metrics(const MatrixXd& truth, const MatrixXd& predictions,
                           const InnerProductMatrix& X);

/// Transfers a FE field onto new evaluation points by mesh interpolation
/// (barycentric location on the source mesh).
VectorXd transfer_field(const ReferenceMesh& source_mesh, const MeshLocator& loc,
                        const VectorXd& u, const MatrixX2d& points);

}  // namespace regrom
