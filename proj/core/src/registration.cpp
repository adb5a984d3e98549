#include "regrom/registration.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "regrom/quadrature.hpp"

namespace regrom {

namespace {

constexpr double kExpClamp = 690.0;
constexpr double kHugePenalty = 1e30;

double safe_exp(double x) { return std::exp(std::min(x, kExpClamp)); }

}  // namespace

TemplateSpace::TemplateSpace(std::vector<SensorField> members)
    : members_(std::move(members)) {
  if (!members_.empty()) {
    std::vector<SensorField> tmp;
    tmp.swap(members_);
    for (auto& m : tmp)
      if (!try_append(std::move(m)))
        throw InputError("TemplateSpace: members not linearly independent");
  }
}

bool TemplateSpace::try_append(SensorField field) {
  std::vector<const SensorField*> all;
  for (const auto& m : members_) all.push_back(&m);
  all.push_back(&field);
  const int n = static_cast<int>(all.size());
  MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double dot = (all[i]->values().array() * all[j]->values().array()).sum();
      gram(i, j) = gram(j, i) = dot;
    }
  for (int i = 0; i < n; ++i) {
    double d = std::sqrt(std::max(gram(i, i), 0.0));
    if (d < 1e-150) return false;
    gram.row(i) /= d;
    gram.col(i) /= d;
  }
  if (gram.determinant() <= 1e-12) return false;
  members_.push_back(std::move(field));
  return true;
}

RegistrationProblem::RegistrationProblem(const ReferenceMesh& mesh,
                                         const Partition& partition,
                                         const DisplacementSpace& space,
                                         const RegistrationConfig& config)
    : mesh_(&mesh), partition_(&partition), space_(&space), cfg_(config) {
  if (!mesh.has_reference_coordinates())
    throw InputError("RegistrationProblem: mesh lacks reference coordinates");
  const int M = space.dim();
  basis_cols_ = M;
  const bool polar = space.periodic();
  const int deg = polar ? space.Jr : space.J;
  const int nq1 = cfg_.quad_order > 0 ? cfg_.quad_order : deg + 3;
  Quadrature2d quad = tensor_gauss(nq1);
  const int nq = static_cast<int>(quad.weights.size());
  const int ls = space.local_size();

  elem_.resize(partition.size());
  for (int q = 0; q < partition.size(); ++q) {
    ElementTables& T = elem_[q];
    T.quad_pts.resize(nq, 2);
    T.w.resize(nq);
    MatrixXd lv(nq, ls), ldx(nq, ls), ldy(nq, ls);
    for (int i = 0; i < nq; ++i) {
      Vector2d X = quad.points.row(i).transpose();
      if (polar) X[1] -= 0.5;  // reference domain (0,1) x (-1/2,1/2)
      T.quad_pts.row(i) = X.transpose();
      double g = std::abs(partition.element(q).jacobian(X).determinant());
      T.w[i] = quad.weights[i] * g;
      LocalEval e = space.local_eval(X);
      lv.row(i) = e.v.transpose();
      ldx.row(i) = e.dx.transpose();
      ldy.row(i) = e.dy.transpose();
    }
    auto block = [&](int d) {
      return space.basis.block(space.raw_index(q, d, 0), 0, ls, M);
    };
    T.v1.noalias() = lv * block(0);
    T.v2.noalias() = lv * block(1);
    T.g11.noalias() = ldx * block(0);
    T.g12.noalias() = ldy * block(0);
    T.g21.noalias() = ldx * block(1);
    T.g22.noalias() = ldy * block(1);
  }

  // plain quadrature weights for reference-domain integrals (constraint C)
  // are recovered as T.w / g; store them by regenerating
  // (kept simple: same rule, no geometry factor)
  // -- handled in constraint_C via quad weights captured here:
  plain_w_ = tensor_gauss(nq1).weights;

  // vertex tables for the mesh penalty
  vert_nodes_ = mesh.vertex_nodes();
  const int nv = static_cast<int>(vert_nodes_.size());
  vert_label_.resize(nv);
  vert_ref_.resize(nv, 2);
  vert_.w1.resize(nv, M);
  vert_.w2.resize(nv, M);
  std::vector<int> node_to_slot(mesh.n_nodes(), -1);
  for (int v = 0; v < nv; ++v) {
    int j = vert_nodes_[v];
    node_to_slot[j] = v;
    int q = mesh.labels()[j];
    Vector2d X = mesh.reference_coordinates().row(j).transpose();
    vert_label_[v] = q;
    vert_ref_.row(v) = X.transpose();
    LocalEval e = space.local_eval(X);
    const int base0 = space.raw_index(q, 0, 0);
    const int base1 = space.raw_index(q, 1, 0);
    vert_.w1.row(v) =
        e.v.transpose() * space.basis.block(base0, 0, space.local_size(), M);
    vert_.w2.row(v) =
        e.v.transpose() * space.basis.block(base1, 0, space.local_size(), M);
  }
  // escape-guard tables over every node: higher-order edge and interior
  // nodes can leave the reference square even when the vertices stay inside
  node_.w1.resize(mesh.n_nodes(), M);
  node_.w2.resize(mesh.n_nodes(), M);
  for (int j = 0; j < mesh.n_nodes(); ++j) {
    int q = mesh.labels()[j];
    LocalEval e = space.local_eval(mesh.reference_coordinates().row(j).transpose());
    node_.w1.row(j) = e.v.transpose() * space.basis.block(space.raw_index(q, 0, 0),
                                                          0, space.local_size(), M);
    node_.w2.row(j) = e.v.transpose() * space.basis.block(space.raw_index(q, 1, 0),
                                                          0, space.local_size(), M);
  }

  elem_vert_slot_.resize(mesh.n_elements());
  area_p1_.resize(mesh.n_elements());
  a0_inv_.resize(mesh.n_elements());
  for (int k = 0; k < mesh.n_elements(); ++k) {
    auto vv = mesh.element_vertices(k);
    for (int i = 0; i < 3; ++i) elem_vert_slot_[k][i] = node_to_slot[vv[i]];
    Vector2d a = mesh.nodes().row(vv[0]).transpose();
    Vector2d b = mesh.nodes().row(vv[1]).transpose();
    Vector2d c = mesh.nodes().row(vv[2]).transpose();
    Matrix2d A0;
    A0.col(0) = b - a;
    A0.col(1) = c - a;
    double det = A0.determinant();
    if (std::abs(det) < 1e-14)
      throw ConstructionError("RegistrationProblem: degenerate mesh element");
    area_p1_[k] = 0.5 * std::abs(det);
    a0_inv_[k] = A0.inverse();
    domain_area_ += area_p1_[k];
  }
}

double RegistrationProblem::proximity(const VectorXd& a, const SensorField& sensor,
                                      const TemplateSpace& templates,
                                      VectorXd* grad) const {
  const int N = templates.size();
  if (N == 0) throw InputError("proximity: empty template space");
  const int M = dim();
  const bool polar = space_->periodic();

  // accumulate weighted normal equations of the projection
  MatrixXd A = MatrixXd::Zero(N, N);
  VectorXd b = VectorXd::Zero(N);
  struct Cache {
    VectorXd sval;
    MatrixXd tval;
    MatrixX2d sgrad;
    MatrixX2d pts;
  };
  std::vector<Cache> caches(elem_.size());

  for (size_t q = 0; q < elem_.size(); ++q) {
    const ElementTables& T = elem_[q];
    const int nq = static_cast<int>(T.w.size());
    Cache& C = caches[q];
    C.pts.resize(nq, 2);
    C.sval.resize(nq);
    C.tval.resize(nq, N);
    if (grad) C.sgrad.resize(nq, 2);
    VectorXd p1 = T.quad_pts.col(0) + T.v1 * a;
    VectorXd p2 = T.quad_pts.col(1) + T.v2 * a;
    for (int i = 0; i < nq; ++i) {
      if (p1[i] < -escape_tol_ || p1[i] > 1.0 + escape_tol_ ||
          (!polar && (p2[i] < -escape_tol_ || p2[i] > 1.0 + escape_tol_)))
        throw DomainError("proximity: mapped quadrature point escaped element");
      Vector2d P(p1[i], p2[i]);
      C.pts.row(i) = P.transpose();
      C.sval[i] = sensor.eval(static_cast<int>(q), P);
      if (grad)
        C.sgrad.row(i) = sensor.gradient(static_cast<int>(q), P).transpose();
      for (int n = 0; n < N; ++n)
        C.tval(i, n) =
            templates.member(n).eval(static_cast<int>(q),
                                     T.quad_pts.row(i).transpose());
    }
    A.noalias() += C.tval.transpose() * T.w.asDiagonal() * C.tval;
    b.noalias() += C.tval.transpose() * (T.w.asDiagonal() * C.sval);
  }
  VectorXd beta = A.ldlt().solve(b);

  double f = 0.0;
  if (grad) grad->setZero(M);
  for (size_t q = 0; q < elem_.size(); ++q) {
    const ElementTables& T = elem_[q];
    const Cache& C = caches[q];
    VectorXd r = C.sval - C.tval * beta;
    f += (T.w.array() * r.array().square()).sum();
    if (grad) {
      // envelope theorem: beta held fixed
      VectorXd wr = (T.w.array() * r.array()).matrix();
      grad->noalias() +=
          2.0 * T.v1.transpose() * (wr.array() * C.sgrad.col(0).array()).matrix();
      grad->noalias() +=
          2.0 * T.v2.transpose() * (wr.array() * C.sgrad.col(1).array()).matrix();
    }
  }
  return f;
}

double RegistrationProblem::constraint_C(const VectorXd& a, VectorXd* grad) const {
  const double eps = cfg_.eps;
  const double cexp = cfg_.c_exp();
  const int M = dim();
  double total = 0.0;
  if (grad) grad->setZero(M);
  for (const ElementTables& T : elem_) {
    const int nq = static_cast<int>(plain_w_.size());
    VectorXd f11 = T.g11 * a, f12 = T.g12 * a, f21 = T.g21 * a, f22 = T.g22 * a;
    for (int i = 0; i < nq; ++i) {
      double F11 = 1.0 + f11[i], F12 = f12[i], F21 = f21[i], F22 = 1.0 + f22[i];
      double g = F11 * F22 - F12 * F21;
      double e1 = safe_exp((eps - g) / cexp);
      double e2 = safe_exp((g - 1.0 / eps) / cexp);
      total += plain_w_[i] * (e1 + e2);
      if (grad) {
        double dconst = plain_w_[i] * (e2 - e1) / cexp;
        if (dconst != 0.0) {
          // d(det)/da_m = F22 dF11 - F12 dF21 - F21 dF12 + F11 dF22
          grad->noalias() +=
              dconst * (F22 * T.g11.row(i) - F12 * T.g21.row(i) -
                        F21 * T.g12.row(i) + F11 * T.g22.row(i))
                           .transpose();
        }
      }
    }
  }
  return total - cfg_.delta * partition_->size();
}

double RegistrationProblem::mesh_penalty(const VectorXd& a, VectorXd* grad) const {
  const int nv = static_cast<int>(vert_nodes_.size());
  const int M = dim();
  const bool polar = space_->periodic();
  const double fmax = cfg_.f_msh_max;

  // escape guard over every node of the mesh
  {
    VectorXd n1 = mesh_->reference_coordinates().col(0) + node_.w1 * a;
    if (n1.minCoeff() < -1e-8 || n1.maxCoeff() > 1.0 + 1e-8)
      throw DomainError("mesh_penalty: displaced reference coordinate escaped");
    if (!polar) {
      VectorXd n2 = mesh_->reference_coordinates().col(1) + node_.w2 * a;
      if (n2.minCoeff() < -1e-8 || n2.maxCoeff() > 1.0 + 1e-8)
        throw DomainError("mesh_penalty: displaced reference coordinate escaped");
    }
  }

  VectorXd d1 = vert_.w1 * a, d2 = vert_.w2 * a;
  MatrixX2d pos(nv, 2);
  std::vector<Matrix2d> jac;
  if (grad) jac.resize(nv);
  for (int v = 0; v < nv; ++v) {
    Vector2d X(vert_ref_(v, 0) + d1[v], vert_ref_(v, 1) + d2[v]);
    const ElementMap& em = partition_->element(vert_label_[v]);
    pos.row(v) = em.forward(X).transpose();
    if (grad) jac[v] = em.jacobian(X);
  }

  double total = 0.0;
  if (grad) grad->setZero(M);
  for (int k = 0; k < mesh_->n_elements(); ++k) {
    const auto& slot = elem_vert_slot_[k];
    Vector2d p0 = pos.row(slot[0]).transpose();
    Vector2d p1 = pos.row(slot[1]).transpose();
    Vector2d p2 = pos.row(slot[2]).transpose();
    Matrix2d Aphi;
    Aphi.col(0) = p1 - p0;
    Aphi.col(1) = p2 - p0;
    Matrix2d F = Aphi * a0_inv_[k];
    double det = F.determinant();
    if (std::abs(det) < 1e-14) {
      total += kHugePenalty;
      continue;  // gradient undefined; the step will be rejected anyway
    }
    double fk = 0.5 * F.squaredNorm() / std::abs(det);
    double contrib = area_p1_[k] * safe_exp(fk - fmax);
    total += contrib;
    if (grad && contrib > 0.0) {
      double sgn = det > 0 ? 1.0 : -1.0;
      Matrix2d adjT;  // adj(F)^T = d(det)/dF
      adjT << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
      Matrix2d dfdF =
          F / std::abs(det) - (0.5 * F.squaredNorm() * sgn / (det * det)) * adjT;
      Matrix2d dfdA = dfdF * a0_inv_[k].transpose();
      // columns of dfdA act on p1-p0 and p2-p0
      std::array<Vector2d, 3> dfdp = {
          Vector2d(-dfdA.col(0) - dfdA.col(1)), Vector2d(dfdA.col(0)),
          Vector2d(dfdA.col(1))};
      for (int i = 0; i < 3; ++i) {
        int v = slot[i];
        Vector2d chain = jac[v].transpose() * dfdp[i];
        grad->noalias() += contrib *
                           (chain[0] * vert_.w1.row(v).transpose() +
                            chain[1] * vert_.w2.row(v).transpose());
      }
    }
  }
  return total;
}

std::optional<double> RegistrationProblem::objective(
    const VectorXd& a, const SensorField& sensor, const TemplateSpace& templates,
    double rho, VectorXd* grad) const {
  try {
    VectorXd gf, gc, gm;
    double f = proximity(a, sensor, templates, grad ? &gf : nullptr);
    double c = constraint_C(a, grad ? &gc : nullptr);
    double m = mesh_penalty(a, grad ? &gm : nullptr);
    VectorXd Aa = space_->A_stab * a;
    double total = f + cfg_.xi * a.dot(Aa) + cfg_.xi_msh * m;
    double viol = std::max(c, 0.0);
    total += rho * viol * viol;
    if (!std::isfinite(total)) return std::nullopt;
    if (grad) {
      *grad = gf + 2.0 * cfg_.xi * Aa + cfg_.xi_msh * gm;
      if (viol > 0.0) grad->noalias() += 2.0 * rho * viol * gc;
      if (!grad->allFinite()) return std::nullopt;
    }
    return total;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

MatrixX2d RegistrationProblem::deform_mesh(const VectorXd& a) const {
  VectorXd raw = space_->to_raw(a);
  const bool polar = space_->periodic();
  return map_mesh(*mesh_, [&](int q, const Vector2d& xref) {
    Vector2d X = xref + space_->eval_raw(raw, q, xref);
    if (X[0] < -1e-8 || X[0] > 1.0 + 1e-8 ||
        (!polar && (X[1] < -1e-8 || X[1] > 1.0 + 1e-8)))
      throw DomainError("deform_mesh: displaced reference coordinate escaped");
    X[0] = std::min(1.0, std::max(0.0, X[0]));
    if (!polar) X[1] = std::min(1.0, std::max(0.0, X[1]));
    return partition_->element(q).forward(X);
  });
}

SensorField RegistrationProblem::mapped_sensor(const SensorField& sensor,
                                               const VectorXd& a) const {
  VectorXd raw = space_->to_raw(a);
  const bool polar = space_->periodic();
  auto grid = sensor.grid_ptr();
  MatrixXd vals(grid->n_nodes(), sensor.n_dd());
  for (int q = 0; q < sensor.n_dd(); ++q)
    for (int g = 0; g < grid->n_nodes(); ++g) {
      Vector2d X = grid->node_coord(g);
      if (polar) X[1] -= 0.5;
      Vector2d P = X + space_->eval_raw(raw, q, X);
      vals(g, q) = sensor.eval(q, P);
    }
  return SensorField(grid, std::move(vals));
}

namespace {

struct BfgsOutcome {
  VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool gradient_converged = false;
};

BfgsOutcome bfgs_minimize(
    const std::function<std::optional<double>(const VectorXd&, VectorXd*)>& fg,
    const VectorXd& x0, int max_iter, double grad_tol) {
  const int n = static_cast<int>(x0.size());
  BfgsOutcome out;
  out.x = x0;
  VectorXd g(n);
  auto fx = fg(out.x, &g);
  if (!fx) throw NumericalError("bfgs: objective not evaluable at start point");
  out.f = *fx;
  MatrixXd H = MatrixXd::Identity(n, n);
  bool have_pair = false;

  for (int it = 0; it < max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= grad_tol * (1.0 + std::abs(out.f))) {
      out.gradient_converged = true;
      out.iterations = it;
      return out;
    }
    VectorXd d = -(H * g);
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      H.setIdentity();
      have_pair = false;
      d = -g;
      slope = g.dot(d);
      if (!(slope < 0.0)) break;
    }
    double t = 1.0;
    double fnew = 0.0;
    VectorXd gnew(n), xnew(n);
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      xnew = out.x + t * d;
      auto val = fg(xnew, &gnew);
      if (val && *val <= out.f + 1e-4 * t * slope) {
        fnew = *val;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      out.iterations = it;
      return out;  // descent stalled; current point is the answer
    }
    VectorXd s = xnew - out.x;
    VectorXd y = gnew - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!have_pair) {
        H = (sy / y.squaredNorm()) * MatrixXd::Identity(n, n);
        have_pair = true;
      }
      VectorXd Hy = H * y;
      double yHy = y.dot(Hy);
      double rho = 1.0 / sy;
      H.noalias() -= rho * (Hy * s.transpose() + s * Hy.transpose());
      H.noalias() += (rho * rho * yHy + rho) * (s * s.transpose());
    }
    out.x = xnew;
    out.f = fnew;
    g = gnew;
    out.iterations = it + 1;
  }
  return out;
}

}  // namespace

RegistrationResult register_one(const RegistrationProblem& problem,
                                const SensorField& sensor,
                                const TemplateSpace& templates,
                                const VectorXd& a_init) {
  const RegistrationConfig& cfg = problem.config();
  RegistrationResult res;
  VectorXd x = a_init.size() ? a_init : VectorXd::Zero(problem.dim());
  if (x.size() != problem.dim())
    throw InputError("register_one: a_init dimension mismatch");
  double c0 = problem.constraint_C(x, nullptr);
  if (c0 > 0.0) throw InputError("register_one: infeasible initial point");

  double rho = cfg.penalty_rho;
  int escalations = 0;
  BfgsOutcome opt;
  for (;;) {
    auto fg = [&](const VectorXd& a, VectorXd* grad) {
      return problem.objective(a, sensor, templates, rho, grad);
    };
    opt = bfgs_minimize(fg, x, cfg.max_iter, cfg.grad_tol);
    x = opt.x;
    res.iterations += opt.iterations;
    double c = problem.constraint_C(x, nullptr);
    if (c <= 0.0) {
      res.constraint = c;
      break;
    }
    if (escalations >= 5) {
      res.success = false;
      res.a = x;
      res.constraint = c;
      res.message = "could not restore feasibility after 5 penalty escalations";
      return res;
    }
    rho *= 10.0;
    ++escalations;
  }
  res.penalty_escalations = escalations;
  res.a = x;
  res.objective = opt.f;
  res.f_star = problem.proximity(x, sensor, templates, nullptr);

  BijectivityReport rep =
      discrete_bijectivity_check(problem.mesh(), problem.deform_mesh(x));
  if (!rep.pass) {
    res.success = false;
    res.message = "mapped mesh failed the discrete bijectivity check";
    return res;
  }
  res.success = true;
  return res;
}

int pod_truncation_rank(const VectorXd& eigs, double tol) {
  const int n = static_cast<int>(eigs.size());
  if (n == 0) return 0;
  if (tol <= 0.0) {
    int m = 0;
    for (int i = 0; i < n; ++i)
      if (eigs[i] > 1e-12 * eigs[0]) ++m;
    return std::max(1, m);
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += eigs[i];
  double target = (1.0 - tol) * total;
  double cum = 0.0;
  for (int i = 0; i < n; ++i) {
    cum += eigs[i];
    if (cum >= target) return i + 1;
  }
  return n;
}

GreedyResult greedy_registration(const RegistrationProblem& problem,
                                 const std::vector<SensorField>& sensors,
                                 TemplateSpace initial_templates) {
  const RegistrationConfig& cfg = problem.config();
  const int n_train = static_cast<int>(sensors.size());
  if (n_train < 1) throw InputError("greedy_registration: no snapshots");
  if (initial_templates.size() < 1)
    throw InputError("greedy_registration: empty initial template space");

  GreedyResult out;
  out.templates = std::move(initial_templates);

  // after a POD pass the search continues in the reduced space; the stage
  // owns the space its problem points into
  struct Stage {
    DisplacementSpace space;
    std::unique_ptr<RegistrationProblem> prob;
  };
  std::unique_ptr<Stage> stage;

  std::vector<VectorXd> warm(n_train, VectorXd::Zero(problem.dim()));
  std::vector<RegistrationResult> results(n_train);

  int workers = cfg.workers > 0
                    ? cfg.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min(workers, n_train);

  bool done = false;
  for (int N = out.templates.size(); N <= cfg.n_max && !done; ++N) {
    const RegistrationProblem& P = stage ? *stage->prob : problem;
    auto t0 = std::chrono::steady_clock::now();

    // line 3: register all snapshots against the current template space
    std::atomic<int> next{0};
    auto work = [&]() {
      for (;;) {
        int k = next.fetch_add(1);
        if (k >= n_train) return;
        try {
          results[k] = register_one(P, sensors[k], out.templates, warm[k]);
        } catch (const Error& e) {
          results[k] = RegistrationResult{};
          results[k].message = e.what();
        }
      }
    };
    if (workers == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& th : pool) th.join();
    }

    std::vector<int> ok;
    for (int k = 0; k < n_train; ++k) {
      if (results[k].success) {
        ok.push_back(k);
        warm[k] = results[k].a;
      }
    }
    if (ok.empty())
      throw NumericalError("greedy_registration: every registration failed");

    // line 4: POD of the optimal displacements in the mapping norm; the
    // space coordinates are isometric, so the Gramian is a plain dot product
    const int dim = P.dim();
    const int n_ok = static_cast<int>(ok.size());
    MatrixXd A(dim, n_ok);
    for (int i = 0; i < n_ok; ++i) A.col(i) = warm[ok[i]];
    MatrixXd C = A.transpose() * A;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(C);
    VectorXd eigs(n_ok);
    for (int i = 0; i < n_ok; ++i)
      eigs[i] = std::max(0.0, es.eigenvalues()[n_ok - 1 - i]);
    int M = std::min(pod_truncation_rank(eigs, cfg.tol_pod), n_ok);
    MatrixXd modes(dim, M);
    for (int m = 0; m < M; ++m) {
      double lam = eigs[m];
      if (lam <= 1e-28) {
        M = m;
        modes.conservativeResize(dim, M);
        break;
      }
      modes.col(m) = A * es.eigenvectors().col(n_ok - 1 - m) / std::sqrt(lam);
    }
    if (M == 0) {  // all optimal maps vanish: keep one direction, zero coeffs
      M = 1;
      modes = MatrixXd::Zero(dim, 1);
      modes(0, 0) = 1.0;
    }
    // deterministic signs
    for (int m = 0; m < M; ++m) {
      int idx = 0;
      modes.col(m).cwiseAbs().maxCoeff(&idx);
      if (modes(idx, m) < 0) modes.col(m) = -modes.col(m);
    }

    double max_f = -1.0;
    int k_star = -1;
    for (int k = 0; k < n_train; ++k) {
      if (!results[k].success) continue;
      if (results[k].f_star > max_f) {
        max_f = results[k].f_star;
        k_star = k;
      }
    }
    auto t1 = std::chrono::steady_clock::now();
    out.report.max_f_per_iteration.push_back(max_f);
    out.report.wall_seconds.push_back(
        std::chrono::duration<double>(t1 - t0).count());

    bool last = max_f < cfg.tol || N >= cfg.n_max;
    if (!last) {
      // line 7: enrich with the worst mapped sensor (the pre-POD map)
      SensorField candidate = P.mapped_sensor(sensors[k_star], warm[k_star]);
      if (out.templates.try_append(std::move(candidate))) {
        out.report.enriched_snapshot.push_back(k_star);
      } else {
        out.report.enriched_snapshot.push_back(-1);
        last = true;  // dependent candidate: the template space is saturated
      }
    } else {
      out.report.enriched_snapshot.push_back(-1);
    }

    if (last) {
      out.reduced_space = P.space().restricted(modes);
      out.coefficients.resize(M, n_train);
      for (int k = 0; k < n_train; ++k)
        out.coefficients.col(k) = modes.transpose() * warm[k];
      done = true;
      continue;
    }
    if (!cfg.reduce_search_space) continue;  // keep the full-space optima

    // line 4 (tail): W_M = W_M(R^M) — continue the search in the POD span
    auto next_stage = std::make_unique<Stage>();
    next_stage->space = P.space().restricted(modes);
    next_stage->prob = std::make_unique<RegistrationProblem>(
        problem.mesh(), problem.partition(), next_stage->space, cfg);
    for (int k = 0; k < n_train; ++k) {
      warm[k] = (modes.transpose() * warm[k]).eval();
      // restore feasibility lost to the projection (0 is always feasible)
      int guard = 0;
      while (next_stage->prob->constraint_C(warm[k], nullptr) > 0.0 &&
             guard++ < 60)
        warm[k] *= 0.5;
      if (guard >= 60) warm[k].setZero();
    }
    stage = std::move(next_stage);
  }

  for (int k = 0; k < n_train; ++k)
    if (!results[k].success) out.report.failed_snapshots.push_back(k);

  out.report.final_N = out.templates.size();
  out.report.final_M = static_cast<int>(out.coefficients.rows());
  return out;
}

}  // namespace regrom
