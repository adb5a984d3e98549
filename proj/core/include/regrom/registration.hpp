#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "regrom/femesh.hpp"
#include "regrom/sensor.hpp"
#include "regrom/spaces.hpp"

namespace regrom {

/// Linearly independent fields on the per-element grids against which mapped
/// sensors are projected.
class TemplateSpace {
 public:
  TemplateSpace() = default;
  explicit TemplateSpace(std::vector<SensorField> members);

  int size() const { return static_cast<int>(members_.size()); }
  const SensorField& member(int n) const { return members_.at(n); }
  const std::vector<SensorField>& members() const { return members_; }

  /// Appends a member; returns false (and leaves the space unchanged) if the
  /// normalized Gram determinant would drop below 1e-12.
  bool try_append(SensorField field);

 private:
  std::vector<SensorField> members_;
};

struct RegistrationConfig {
  double xi = 1e-4;           // stabilization weight
  double xi_msh = 1e-6;       // mesh penalty weight
  double eps = 0.1;           // bijectivity constant epsilon
  double c_exp_factor = 0.025;  // C_exp = factor * eps
  double delta = 1.0;
  double f_msh_max = 10.0;
  double tol = 1e-4;          // greedy stop on max_k f*
  double tol_pod = 1e-3;
  int n_max = 5;              // greedy template budget N_max
  int quad_order = 0;         // points per direction; 0 -> J + 3
  int max_iter = 500;
  double grad_tol = 1e-7;
  double penalty_rho = 1.0;   // initial quadratic penalty weight on C
  int workers = 0;            // 0 -> hardware concurrency
  // After each POD pass the mapping space is reassigned to the POD span, so
  // later registrations search the reduced space. Searching the full ambient
  // space every iteration instead lets snapshots hop between equivalent
  // optima and produces coefficient families that are not smooth in mu.
  bool reduce_search_space = true;

  double c_exp() const { return c_exp_factor * eps; }
};

/// Precomputed registration problem for one (mesh, partition, space) triple.
/// Immutable after construction; evaluations are thread-safe.
class RegistrationProblem {
 public:
  RegistrationProblem(const ReferenceMesh& mesh, const Partition& partition,
                      const DisplacementSpace& space,
                      const RegistrationConfig& config);

  const DisplacementSpace& space() const { return *space_; }
  const ReferenceMesh& mesh() const { return *mesh_; }
  const Partition& partition() const { return *partition_; }
  const RegistrationConfig& config() const { return cfg_; }
  int dim() const { return static_cast<int>(basis_cols_); }

  /// Projection residual f(a) of the mapped sensor onto the template space;
  /// grad may be null. Throws DomainError if a quadrature point escapes.
  double proximity(const VectorXd& a, const SensorField& sensor,
                   const TemplateSpace& templates, VectorXd* grad) const;

  /// Bijectivity margin C(a); negative certifies bijectivity.
  double constraint_C(const VectorXd& a, VectorXd* grad) const;

  /// Mesh-quality penalty R_msh(a).
  double mesh_penalty(const VectorXd& a, VectorXd* grad) const;

  /// Full objective f + xi a'A a + xi_msh R + rho max(C,0)^2 with gradient.
  /// Returns nullopt when the trial point is not evaluable (escaped map).
  std::optional<double> objective(const VectorXd& a, const SensorField& sensor,
                                  const TemplateSpace& templates, double rho,
                                  VectorXd* grad) const;

  /// Deforms all mesh nodes by Psi_q(xref + phi_q(xref)) (a in space coords).
  MatrixX2d deform_mesh(const VectorXd& a) const;

  /// Evaluates the mapped sensor (s o Phi(.; a)) on the sensor grid nodes,
  /// producing a template-space candidate.
  SensorField mapped_sensor(const SensorField& sensor, const VectorXd& a) const;

 private:
  struct ElementTables {
    MatrixX2d quad_pts;
    VectorXd w;        // quadrature weights times geometry |det grad Psi_q|
    MatrixXd v1, v2;   // basis component values at quad points (n_q x M)
    MatrixXd g11, g12, g21, g22;  // basis gradients at quad points
  };
  struct VertexTables {
    MatrixXd w1, w2;  // basis values at vertex reference points (n_v x M)
  };
  struct NodeTables {
    MatrixXd w1, w2;  // basis values at every mesh node (N_hf x M)
  };

  const ReferenceMesh* mesh_;
  const Partition* partition_;
  const DisplacementSpace* space_;
  RegistrationConfig cfg_;
  long basis_cols_;
  std::vector<ElementTables> elem_;
  VectorXd plain_w_;  // reference-domain quadrature weights
  VertexTables vert_;
  NodeTables node_;   // escape guard over every node, not just vertices
  std::vector<Matrix2d> a0_inv_;  // inverse p=1 gradients of the source mesh
  std::vector<int> vert_nodes_;    // vertex node ids
  std::vector<int> vert_label_;    // partition label per vertex node
  MatrixX2d vert_ref_;             // reference coords per vertex node
  std::vector<std::array<int, 3>> elem_vert_slot_;  // vertex slots per element
  VectorXd area_p1_;               // |D_k|
  double domain_area_ = 0.0;
  double escape_tol_ = 1e-6;
};

struct RegistrationResult {
  bool success = false;
  VectorXd a;          // optimum in space coordinates
  double f_star = 0.0; // proximity at the optimum
  double objective = 0.0;
  double constraint = 0.0;
  int iterations = 0;
  int penalty_escalations = 0;
  std::string message;
};

/// Single-target registration: penalized BFGS descent from a_init with
/// adaptive escalation of the constraint penalty until C(a*) <= 0.
RegistrationResult register_one(const RegistrationProblem& problem,
                                const SensorField& sensor,
                                const TemplateSpace& templates,
                                const VectorXd& a_init);

struct GreedyReport {
  std::vector<double> max_f_per_iteration;
  std::vector<int> enriched_snapshot;  // k* per iteration (-1 if none)
  std::vector<double> wall_seconds;
  int final_N = 0;
  int final_M = 0;
  std::vector<int> failed_snapshots;
};

struct GreedyResult {
  TemplateSpace templates;
  DisplacementSpace reduced_space;  // W_M
  MatrixXd coefficients;            // M x n_train, a^k columns
  GreedyReport report;
};

/// Parametric registration: registers every snapshot against the current
/// template space (warm-started), PODs the optimal displacements in the
/// mapping norm, and enriches the template space with the worst mapped
/// sensor until max_k f* < tol or the template budget is exhausted.
GreedyResult greedy_registration(const RegistrationProblem& problem,
                                 const std::vector<SensorField>& sensors,
                                 TemplateSpace initial_templates);

/// POD truncation rule: smallest M' with sum_{m<=M'} lambda_m >=
/// (1 - tol) * sum lambda. tol <= 0 keeps every mode above relative 1e-12.
int pod_truncation_rank(const VectorXd& eigenvalues_desc, double tol);

}  // namespace regrom
