#include "regrom/reduction.hpp"

#include <cmath>

#include "regrom/quadrature.hpp"

namespace regrom {

PODBasis pod(const MatrixXd& snapshots, const InnerProductMatrix& X, double tol,
             int fixed_n) {
  if (snapshots.cols() < 1) throw InputError("pod: need at least one snapshot");
  if (!snapshots.allFinite()) throw InputError("pod: non-finite snapshot entries");
  const int n = static_cast<int>(snapshots.cols());

  MatrixXd XU = X.X * snapshots;
  MatrixXd C = snapshots.transpose() * XU;
  C = 0.5 * (C + C.transpose().eval());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(C);

  VectorXd eigs(n);
  for (int i = 0; i < n; ++i) eigs[i] = std::max(0.0, es.eigenvalues()[n - 1 - i]);

  int N = fixed_n > 0 ? std::min(fixed_n, n) : pod_truncation_rank(eigs, tol);
  // never keep numerically-zero modes
  while (N > 1 && eigs[N - 1] <= 1e-14 * std::max(eigs[0], 0.0)) --N;

  PODBasis out;
  out.eigenvalues = eigs;
  out.Z.resize(snapshots.rows(), N);
  for (int m = 0; m < N; ++m)
    out.Z.col(m) =
        snapshots * es.eigenvectors().col(n - 1 - m) / std::sqrt(eigs[m]);
  for (int m = 0; m < N; ++m) {
    int idx = 0;
    out.Z.col(m).cwiseAbs().maxCoeff(&idx);
    if (out.Z(idx, m) < 0) out.Z.col(m) = -out.Z.col(m);
  }
  out.coefficients = out.Z.transpose() * XU;
  return out;
}

namespace {

double tps_kernel(double r) { return r <= 0.0 ? 0.0 : r * r * std::log(r); }

}  // namespace

MatrixXd RbfRegressor::system_matrix(const MatrixXd& centers) {
  const int n = static_cast<int>(centers.rows());
  const int P = static_cast<int>(centers.cols());
  MatrixXd A = MatrixXd::Zero(n + P + 1, n + P + 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      A(i, j) = tps_kernel((centers.row(i) - centers.row(j)).norm());
  for (int i = 0; i < n; ++i) {
    A(i, n) = A(n, i) = 1.0;
    for (int p = 0; p < P; ++p)
      A(i, n + 1 + p) = A(n + 1 + p, i) = centers(i, p);
  }
  return A;
}

RbfRegressor::RbfRegressor(const MatrixXd& params, const MatrixXd& targets,
                           double r2_threshold, GateFallback fallback) {
  const int n = static_cast<int>(params.rows());
  const int P = static_cast<int>(params.cols());
  const int n_out = static_cast<int>(targets.cols());
  if (targets.rows() != n) throw InputError("rbf_fit: row mismatch");
  if (n < P + 2) throw InputError("rbf_fit: need n_train >= P + 2");

  lo_.resize(P);
  hi_.resize(P);
  for (int p = 0; p < P; ++p) {
    lo_[p] = params.col(p).minCoeff();
    hi_[p] = params.col(p).maxCoeff();
  }
  centers_.resize(n, P);
  for (int i = 0; i < n; ++i)
    centers_.row(i) = normalize(params.row(i).transpose()).transpose();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((centers_.row(i) - centers_.row(j)).norm() < 1e-12)
        throw InputError("rbf_fit: duplicate training parameters");

  MatrixXd A = system_matrix(centers_);
  Eigen::PartialPivLU<MatrixXd> lu(A);
  {
    // singularity guard: reconstruct a random rhs
    VectorXd probe = VectorXd::LinSpaced(A.rows(), 0.3, 1.7);
    VectorXd sol = lu.solve(probe);
    if ((A * sol - probe).norm() > 1e-6 * probe.norm())
      throw NumericalError("rbf_fit: singular interpolation system");
  }
  MatrixXd rhs = MatrixXd::Zero(n + P + 1, n_out);
  rhs.topRows(n) = targets;
  weights_ = lu.solve(rhs);

  // leave-one-out R^2 per output coordinate
  r2_.resize(n_out);
  active_.assign(n_out, 1);
  fallback_.resize(n_out);
  MatrixXd loo_pred(n, n_out);
  for (int k = 0; k < n; ++k) {
    MatrixXd cent(n - 1, P);
    MatrixXd targ(n - 1, n_out);
    int r = 0;
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      cent.row(r) = centers_.row(i);
      targ.row(r) = targets.row(i);
      ++r;
    }
    MatrixXd Ak = system_matrix(cent);
    MatrixXd rk = MatrixXd::Zero(n - 1 + P + 1, n_out);
    rk.topRows(n - 1) = targ;
    MatrixXd wk = Ak.partialPivLu().solve(rk);
    // evaluate at the held-out parameter
    VectorXd mu = centers_.row(k).transpose();
    for (int c = 0; c < n_out; ++c) {
      double v = wk(n - 1, c);
      for (int p = 0; p < P; ++p) v += wk(n + p, c) * mu[p];
      for (int i = 0; i < n - 1; ++i)
        v += wk(i, c) * tps_kernel((cent.row(i).transpose() - mu).norm());
      loo_pred(k, c) = v;
    }
  }
  for (int c = 0; c < n_out; ++c) {
    double mean = targets.col(c).mean();
    fallback_[c] = fallback == GateFallback::Zero ? 0.0 : mean;
    double ss_tot = (targets.col(c).array() - mean).square().sum();
    double ss_res = (targets.col(c) - loo_pred.col(c)).squaredNorm();
    if (ss_tot < 1e-28) {
      r2_[c] = ss_res < 1e-20 ? 1.0 : 0.0;
    } else {
      r2_[c] = 1.0 - ss_res / ss_tot;
    }
    if (!(r2_[c] > r2_threshold)) active_[c] = 0;
  }
}

VectorXd RbfRegressor::normalize(const VectorXd& mu) const {
  VectorXd out(mu.size());
  for (int p = 0; p < mu.size(); ++p) {
    double range = hi_[p] - lo_[p];
    out[p] = range > 1e-300 ? (mu[p] - lo_[p]) / range : 0.5;
  }
  return out;
}

VectorXd RbfRegressor::predict(const VectorXd& mu) const {
  const int n = static_cast<int>(centers_.rows());
  const int P = static_cast<int>(centers_.cols());
  if (mu.size() != P) throw InputError("rbf predict: parameter dimension mismatch");
  const int n_out = n_outputs();
  VectorXd x = normalize(mu);
  VectorXd k(n);
  for (int i = 0; i < n; ++i)
    k[i] = tps_kernel((centers_.row(i).transpose() - x).norm());
  VectorXd out(n_out);
  for (int c = 0; c < n_out; ++c) {
    if (!active_[c]) {
      out[c] = fallback_[c];
      continue;
    }
    double v = weights_(n, c);
    for (int p = 0; p < P; ++p) v += weights_(n + 1 + p, c) * x[p];
    v += weights_.col(c).head(n).dot(k);
    out[c] = v;
  }
  return out;
}

void RbfRegressor::write(BinWriter& w) const {
  w.matrix(centers_);
  w.matrix(weights_);
  w.vector(lo_);
  w.vector(hi_);
  w.vector(r2_);
  w.vector(fallback_);
  VectorXi act(static_cast<int>(active_.size()));
  for (size_t i = 0; i < active_.size(); ++i) act[static_cast<int>(i)] = active_[i];
  w.ivector(act);
}

RbfRegressor RbfRegressor::read(BinReader& r) {
  RbfRegressor out;
  out.centers_ = r.matrix();
  out.weights_ = r.matrix();
  out.lo_ = r.vector();
  out.hi_ = r.vector();
  out.r2_ = r.vector();
  out.fallback_ = r.vector();
  VectorXi act = r.ivector();
  out.active_.resize(act.size());
  for (int i = 0; i < act.size(); ++i) out.active_[i] = static_cast<char>(act[i]);
  return out;
}

void ReducedModel::save(const std::string& path) const {
  BinWriter w(path);
  w.magic("RGMM");
  w.u32(1);
  w.u64(fingerprint);
  // inline the mapping space
  w.u32(static_cast<uint32_t>(mapping_space.kind));
  w.u32(mapping_space.J);
  w.u32(mapping_space.Jr);
  w.u32(mapping_space.Jf);
  w.u32(mapping_space.n_dd);
  w.u32(mapping_space.modified_norm ? 1 : 0);
  w.u32(mapping_space.full_dim);
  w.matrix(mapping_space.basis);
  w.matrix(mapping_space.G);
  w.matrix(mapping_space.A_stab);
  w.vector(mapping_space.areas);
  map_regressor.write(w);
  w.matrix(pod_basis.Z);
  w.vector(pod_basis.eigenvalues);
  w.matrix(pod_basis.coefficients);
  field_regressor.write(w);
  w.matrix(train_params);
}

ReducedModel ReducedModel::load(const std::string& path) {
  BinReader r(path);
  r.magic("RGMM");
  if (r.u32() != 1) throw InputError("model bundle: unsupported version");
  ReducedModel m;
  m.fingerprint = r.u64();
  m.mapping_space.kind = static_cast<SpaceKind>(r.u32());
  m.mapping_space.J = r.u32();
  m.mapping_space.Jr = r.u32();
  m.mapping_space.Jf = r.u32();
  m.mapping_space.n_dd = r.u32();
  m.mapping_space.modified_norm = r.u32() != 0;
  m.mapping_space.full_dim = r.u32();
  m.mapping_space.basis = r.matrix();
  m.mapping_space.G = r.matrix();
  m.mapping_space.A_stab = r.matrix();
  m.mapping_space.areas = r.vector();
  if (m.mapping_space.kind == SpaceKind::Polar) {
    m.mapping_space.lag1 = Lagrange1d(gauss_lobatto_points(m.mapping_space.Jr + 1));
    m.mapping_space.fourier = FourierBasis(m.mapping_space.Jf);
  } else {
    m.mapping_space.lag1 = Lagrange1d(gauss_lobatto_points(m.mapping_space.J + 1));
    m.mapping_space.lag2 = m.mapping_space.lag1;
  }
  m.map_regressor = RbfRegressor::read(r);
  m.pod_basis.Z = r.matrix();
  m.pod_basis.eigenvalues = r.vector();
  m.pod_basis.coefficients = r.matrix();
  m.field_regressor = RbfRegressor::read(r);
  m.train_params = r.matrix();
  return m;
}

bool ReducedModel::out_of_sample_box(const VectorXd& mu) const {
  for (int p = 0; p < train_params.cols(); ++p) {
    if (mu[p] < train_params.col(p).minCoeff() ||
        mu[p] > train_params.col(p).maxCoeff())
      return true;
  }
  return false;
}

MapPrediction predict_map(const ReducedModel& model, const ReferenceMesh& mesh,
                          const Partition& partition, const VectorXd& mu) {
  MapPrediction out;
  out.a = model.map_regressor.predict(mu);
  const DisplacementSpace& sp = model.mapping_space;
  VectorXd raw = sp.to_raw(out.a);
  const bool polar = sp.periodic();
  out.nodes = map_mesh(mesh, [&](int q, const Vector2d& xref) {
    Vector2d X = xref + sp.eval_raw(raw, q, xref);
    if (X[0] < -1e-8 || X[0] > 1.0 + 1e-8 ||
        (!polar && (X[1] < -1e-8 || X[1] > 1.0 + 1e-8)))
      throw DomainError("predict_map: displaced reference coordinate escaped");
    X[0] = std::min(1.0, std::max(0.0, X[0]));
    if (!polar) X[1] = std::min(1.0, std::max(0.0, X[1]));
    return partition.element(q).forward(X);
  });
  out.bijectivity = discrete_bijectivity_check(mesh, out.nodes);
  out.min_radius_ratio = min_radius_ratio(mesh, out.nodes);
  return out;
}

FieldPrediction predict_field(const ReducedModel& model,
                              const ReferenceMesh& mesh,
                              const Partition& partition, const VectorXd& mu,
                              std::optional<int> n_modes) {
  FieldPrediction out;
  out.map = predict_map(model, mesh, partition, mu);
  out.alpha = model.field_regressor.predict(mu);
  int N = static_cast<int>(model.pod_basis.Z.cols());
  if (n_modes) {
    if (*n_modes < 1) throw InputError("predict_field: n_modes must be >= 1");
    N = std::min(N, *n_modes);
  }
  out.field = model.pod_basis.Z.leftCols(N) * out.alpha.head(N);
  return out;
}

ErrorMetrics error_metrics(const MatrixXd& truth, const MatrixXd& predictions,
                           const InnerProductMatrix& X) {
  if (truth.rows() != predictions.rows() || truth.cols() != predictions.cols())
    throw InputError("error_metrics: shape mismatch");
  ErrorMetrics out;
  const int n = static_cast<int>(truth.cols());
  out.per_sample = VectorXd::Constant(n, -1.0);
  double sum = 0.0;
  int counted = 0;
  for (int k = 0; k < n; ++k) {
    double tn = X.norm(truth.col(k));
    if (tn < 1e-300) {
      out.excluded.push_back(k);
      continue;
    }
    double err = X.norm(truth.col(k) - predictions.col(k)) / tn;
    out.per_sample[k] = err;
    sum += err;
    ++counted;
  }
  if (counted == 0) throw InputError("error_metrics: all truths have zero norm");
  out.e_avg = sum / counted;
  return out;
}

VectorXd transfer_field(const ReferenceMesh& source_mesh, const MeshLocator& loc,
                        const VectorXd& u, const MatrixX2d& points) {
  (void)source_mesh;
  VectorXd out(points.rows());
  for (int i = 0; i < points.rows(); ++i)
    out[i] = loc.interpolate(u, points.row(i).transpose());
  return out;
}

}  // namespace regrom
