#include "regrom/femesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>

#include "regrom/quadrature.hpp"

namespace regrom {

ReferenceMesh::ReferenceMesh(int degree, MatrixX2d nodes, MatrixXi conn)
    : degree_(degree),
      nodes_(std::move(nodes)),
      conn_(std::move(conn)),
      basis_(degree) {
  const int nlp = (degree + 1) * (degree + 2) / 2;
  if (conn_.rows() != nlp)
    throw ConstructionError("ReferenceMesh: connectivity rows != n_lp");
  std::vector<char> seen(n_nodes(), 0);
  for (int k = 0; k < n_elements(); ++k)
    for (int i = 0; i < nlp; ++i) {
      int j = conn_(i, k);
      if (j < 0 || j >= n_nodes())
        throw ConstructionError("ReferenceMesh: connectivity entry out of range");
      seen[j] = 1;
    }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw ConstructionError("ReferenceMesh: unreferenced node");
  std::set<int> verts;
  for (int k = 0; k < n_elements(); ++k)
    for (int v : element_vertices(k)) verts.insert(v);
  vertex_nodes_.assign(verts.begin(), verts.end());
}

std::array<int, 3> ReferenceMesh::vertex_local() const {
  return {basis_.vertex_index(0), basis_.vertex_index(1), basis_.vertex_index(2)};
}

std::array<int, 3> ReferenceMesh::element_vertices(int k) const {
  auto vl = vertex_local();
  return {conn_(vl[0], k), conn_(vl[1], k), conn_(vl[2], k)};
}

void ReferenceMesh::set_reference_coordinates(VectorXi labels, MatrixX2d ref) {
  if (labels.size() != n_nodes() || ref.rows() != n_nodes())
    throw InputError("set_reference_coordinates: size mismatch");
  label_ = std::move(labels);
  ref_ = std::move(ref);
}

void ReferenceMesh::compute_reference_coordinates(const Partition& partition,
                                                  double tol) {
  label_.resize(n_nodes());
  ref_.resize(n_nodes(), 2);
  for (int j = 0; j < n_nodes(); ++j) {
    Vector2d xr;
    int q = partition.locate(nodes_.row(j).transpose(), &xr, tol);
    if (q < 0)
      throw DomainError("compute_reference_coordinates: node " +
                        std::to_string(j + 1) + " outside all elements");
    label_[j] = q;
    ref_.row(j) = xr.transpose();
  }
}

Vector2d elemental_map_eval(const ReferenceMesh& mesh, int k, const Vector2d& X,
                            const MatrixX2d* node_override) {
  const MatrixX2d& nd = node_override ? *node_override : mesh.nodes();
  VectorXd l = mesh.basis().values(X);
  Vector2d out = Vector2d::Zero();
  for (int i = 0; i < l.size(); ++i)
    out += l[i] * nd.row(mesh.connectivity()(i, k)).transpose();
  return out;
}

Matrix2d elemental_map_jacobian(const ReferenceMesh& mesh, int k,
                                const Vector2d& X,
                                const MatrixX2d* node_override) {
  const MatrixX2d& nd = node_override ? *node_override : mesh.nodes();
  MatrixX2d g = mesh.basis().gradients(X);
  Matrix2d J = Matrix2d::Zero();
  for (int i = 0; i < g.rows(); ++i) {
    Vector2d xi = nd.row(mesh.connectivity()(i, k)).transpose();
    J.col(0) += g(i, 0) * xi;
    J.col(1) += g(i, 1) * xi;
  }
  return J;
}

MatrixX2d map_mesh(const ReferenceMesh& mesh, const NodeDeformer& phi) {
  if (!mesh.has_reference_coordinates())
    throw InputError("map_mesh: reference coordinates not available");
  MatrixX2d out(mesh.n_nodes(), 2);
  for (int j = 0; j < mesh.n_nodes(); ++j)
    out.row(j) =
        phi(mesh.labels()[j], mesh.reference_coordinates().row(j).transpose())
            .transpose();
  return out;
}

BijectivityReport discrete_bijectivity_check(const ReferenceMesh& mesh,
                                             const MatrixX2d& mapped_nodes) {
  const int p = mesh.degree();
  Quadrature2d q = triangle_rule(2 * p);
  std::vector<Vector2d> samples;
  samples.reserve(q.points.rows() + mesh.basis().nodes().rows());
  for (int i = 0; i < q.points.rows(); ++i)
    samples.push_back(q.points.row(i).transpose());
  for (int i = 0; i < mesh.basis().nodes().rows(); ++i)
    samples.push_back(mesh.basis().nodes().row(i).transpose());

  BijectivityReport rep;
  rep.min_det = std::numeric_limits<double>::infinity();
  for (int k = 0; k < mesh.n_elements(); ++k) {
    double emin = std::numeric_limits<double>::infinity();
    for (const Vector2d& X : samples) {
      double det = elemental_map_jacobian(mesh, k, X, &mapped_nodes).determinant();
      emin = std::min(emin, det);
    }
    rep.min_det = std::min(rep.min_det, emin);
    if (emin <= 0.0) rep.offending.push_back(k);
  }
  rep.pass = rep.offending.empty();
  return rep;
}

namespace {

Matrix2d p1_gradient(const ReferenceMesh& mesh, const MatrixX2d& nodes, int k) {
  auto v = mesh.element_vertices(k);
  Vector2d a = nodes.row(v[0]).transpose();
  Vector2d b = nodes.row(v[1]).transpose();
  Vector2d c = nodes.row(v[2]).transpose();
  Matrix2d G;
  G.col(0) = b - a;
  G.col(1) = c - a;
  return G;
}

}  // namespace

double mesh_distortion(const ReferenceMesh& mesh, const MatrixX2d& mapped_nodes,
                       int k) {
  Matrix2d G0 = p1_gradient(mesh, mesh.nodes(), k);
  Matrix2d G1 = p1_gradient(mesh, mapped_nodes, k);
  double det0 = G0.determinant();
  if (std::abs(det0) < 1e-14)
    throw NumericalError("mesh_distortion: degenerate original element");
  Matrix2d F = G1 * G0.inverse();
  double det = F.determinant();
  if (std::abs(det) < 1e-14) return std::numeric_limits<double>::infinity();
  return 0.5 * F.squaredNorm() / std::abs(det);
}

double radius_ratio(const ReferenceMesh& mesh, const MatrixX2d& mapped_nodes,
                    int k) {
  auto v = mesh.element_vertices(k);
  Vector2d p0 = mapped_nodes.row(v[0]).transpose();
  Vector2d p1 = mapped_nodes.row(v[1]).transpose();
  Vector2d p2 = mapped_nodes.row(v[2]).transpose();
  double a = (p1 - p2).norm(), b = (p2 - p0).norm(), c = (p0 - p1).norm();
  double s = 0.5 * (a + b + c);
  double area2 = (p1 - p0)[0] * (p2 - p0)[1] - (p1 - p0)[1] * (p2 - p0)[0];
  double area = 0.5 * std::abs(area2);
  if (area < 1e-300 || s < 1e-300 || a * b * c < 1e-300) return 0.0;
  double rin = area / s;
  double rc = a * b * c / (4.0 * area);
  if (rc < 1e-300) return 0.0;
  return 2.0 * rin / rc;
}

double min_radius_ratio(const ReferenceMesh& mesh, const MatrixX2d& mapped_nodes) {
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k < mesh.n_elements(); ++k)
    m = std::min(m, radius_ratio(mesh, mapped_nodes, k));
  return m;
}

double element_area_p1(const ReferenceMesh& mesh, const MatrixX2d& nodes, int k) {
  return 0.5 * std::abs(p1_gradient(mesh, nodes, k).determinant());
}

InnerProductMatrix assemble_inner_product(const ReferenceMesh& mesh,
                                          NormKind kind) {
  const int p = mesh.degree();
  // straight p=1 elements get the exact-degree rule; curved ones extra points
  Quadrature2d q = triangle_rule(p == 1 ? 2 : 2 * p + 2);
  const int nlp = mesh.nodes_per_element();
  const int nq = static_cast<int>(q.points.rows());

  MatrixXd vals(nq, nlp);
  std::vector<MatrixX2d> grads(nq);
  for (int i = 0; i < nq; ++i) {
    Vector2d X = q.points.row(i).transpose();
    vals.row(i) = mesh.basis().values(X).transpose();
    grads[i] = mesh.basis().gradients(X);
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(mesh.n_elements()) * nlp * nlp);
  MatrixXd local(nlp, nlp);
  for (int k = 0; k < mesh.n_elements(); ++k) {
    local.setZero();
    for (int i = 0; i < nq; ++i) {
      Vector2d X = q.points.row(i).transpose();
      Matrix2d J = elemental_map_jacobian(mesh, k, X);
      double det = std::abs(J.determinant());
      double w = q.weights[i] * det;
      local.noalias() += w * vals.row(i).transpose() * vals.row(i);
      if (kind == NormKind::H1) {
        Matrix2d Jit = J.inverse().transpose();
        MatrixX2d gphys = grads[i] * Jit.transpose();
        local.noalias() += w * gphys * gphys.transpose();
      }
    }
    for (int a = 0; a < nlp; ++a)
      for (int b = 0; b < nlp; ++b)
        trip.emplace_back(mesh.connectivity()(a, k), mesh.connectivity()(b, k),
                          local(a, b));
  }
  InnerProductMatrix out;
  out.kind = kind;
  out.X.resize(mesh.n_nodes(), mesh.n_nodes());
  out.X.setFromTriplets(trip.begin(), trip.end());
  // exact symmetry
  Eigen::SparseMatrix<double> Xt = out.X.transpose();
  out.X = 0.5 * (out.X + Xt);
  return out;
}

MeshLocator::MeshLocator(const ReferenceMesh& mesh, int bins_hint)
    : mesh_(mesh) {
  double xmin = mesh.nodes().col(0).minCoeff();
  double xmax = mesh.nodes().col(0).maxCoeff();
  double ymin = mesh.nodes().col(1).minCoeff();
  double ymax = mesh.nodes().col(1).maxCoeff();
  diam_ = std::hypot(xmax - xmin, ymax - ymin);
  x0_ = xmin;
  y0_ = ymin;
  nx_ = std::max(1, bins_hint);
  ny_ = std::max(1, bins_hint);
  hx_ = (xmax - xmin) / nx_;
  hy_ = (ymax - ymin) / ny_;
  if (hx_ <= 0) hx_ = 1.0;
  if (hy_ <= 0) hy_ = 1.0;
  bins_.assign(static_cast<size_t>(nx_) * ny_, {});
  for (int k = 0; k < mesh.n_elements(); ++k) {
    auto v = mesh.element_vertices(k);
    double exmin = 1e300, exmax = -1e300, eymin = 1e300, eymax = -1e300;
    for (int j : v) {
      exmin = std::min(exmin, mesh.nodes()(j, 0));
      exmax = std::max(exmax, mesh.nodes()(j, 0));
      eymin = std::min(eymin, mesh.nodes()(j, 1));
      eymax = std::max(eymax, mesh.nodes()(j, 1));
    }
    int i0 = std::max(0, std::min(nx_ - 1, (int)((exmin - x0_) / hx_)));
    int i1 = std::max(0, std::min(nx_ - 1, (int)((exmax - x0_) / hx_)));
    int j0 = std::max(0, std::min(ny_ - 1, (int)((eymin - y0_) / hy_)));
    int j1 = std::max(0, std::min(ny_ - 1, (int)((eymax - y0_) / hy_)));
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j)
        bins_[static_cast<size_t>(j) * nx_ + i].push_back(k);
  }
}

int MeshLocator::locate(const Vector2d& p, Vector2d* Xref, double rel_tol) const {
  int bi = std::max(0, std::min(nx_ - 1, (int)((p[0] - x0_) / hx_)));
  int bj = std::max(0, std::min(ny_ - 1, (int)((p[1] - y0_) / hy_)));
  double best_viol = std::numeric_limits<double>::infinity();
  int best_k = -1;
  Vector2d best_X = Vector2d::Zero();
  auto consider = [&](int k) {
    auto v = mesh_.element_vertices(k);
    Vector2d a = mesh_.nodes().row(v[0]).transpose();
    Vector2d b = mesh_.nodes().row(v[1]).transpose();
    Vector2d c = mesh_.nodes().row(v[2]).transpose();
    Matrix2d G;
    G.col(0) = b - a;
    G.col(1) = c - a;
    double det = G.determinant();
    if (std::abs(det) < 1e-300) return;
    Vector2d X = G.inverse() * (p - a);
    double viol = std::max({-X[0], -X[1], X[0] + X[1] - 1.0, 0.0});
    if (viol < best_viol) {
      best_viol = viol;
      best_k = k;
      best_X = X;
    }
  };
  for (int k : bins_[static_cast<size_t>(bj) * nx_ + bi]) consider(k);
  if (best_viol > 0.0) {
    // widen to neighbor bins, then fall back to a full scan
    for (int dj = -1; dj <= 1 && best_viol > 0.0; ++dj)
      for (int di = -1; di <= 1; ++di) {
        int i = bi + di, j = bj + dj;
        if (i < 0 || i >= nx_ || j < 0 || j >= ny_ || (di == 0 && dj == 0))
          continue;
        for (int k : bins_[static_cast<size_t>(j) * nx_ + i]) consider(k);
      }
    if (best_viol > 1e-12) {
      for (int k = 0; k < mesh_.n_elements(); ++k) consider(k);
    }
  }
  if (best_k < 0 || best_viol > rel_tol) return -1;
  if (Xref) {
    best_X[0] = std::max(0.0, best_X[0]);
    best_X[1] = std::max(0.0, best_X[1]);
    double s = best_X[0] + best_X[1];
    if (s > 1.0) best_X *= 1.0 / s;
    *Xref = best_X;
  }
  return best_k;
}

double MeshLocator::interpolate(const VectorXd& u, const Vector2d& p,
                                double rel_tol) const {
  Vector2d X;
  int k = locate(p, &X, rel_tol);
  if (k < 0)
    throw DomainError("MeshLocator: point (" + std::to_string(p[0]) + ", " +
                      std::to_string(p[1]) + ") outside all elements");
  VectorXd l = mesh_.basis().values(X);
  double val = 0.0;
  for (int i = 0; i < l.size(); ++i) val += l[i] * u[mesh_.connectivity()(i, k)];
  return val;
}

void ReferenceMesh::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw InputError("ReferenceMesh::save: cannot open " + path);
  os << "# regrom mesh\n";
  os << degree_ << " " << n_nodes() << " " << n_elements() << "\n";
  os << std::setprecision(17);
  for (int j = 0; j < n_nodes(); ++j)
    os << j + 1 << " " << nodes_(j, 0) << " " << nodes_(j, 1) << "\n";
  for (int k = 0; k < n_elements(); ++k) {
    for (int i = 0; i < conn_.rows(); ++i) os << (i ? " " : "") << conn_(i, k) + 1;
    os << "\n";
  }
}

ReferenceMesh ReferenceMesh::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("ReferenceMesh::load: cannot open " + path);
  std::string line;
  std::getline(is, line);  // comment
  if (line.empty() || line[0] != '#') {
    is.seekg(0);
  }
  int p, nn, ne;
  if (!(is >> p >> nn >> ne)) throw InputError("mesh: bad header");
  MatrixX2d nodes(nn, 2);
  for (int j = 0; j < nn; ++j) {
    int idx;
    if (!(is >> idx >> nodes(j, 0) >> nodes(j, 1)) || idx != j + 1)
      throw InputError("mesh: bad node block");
  }
  int nlp = (p + 1) * (p + 2) / 2;
  MatrixXi conn(nlp, ne);
  for (int k = 0; k < ne; ++k)
    for (int i = 0; i < nlp; ++i) {
      int v;
      if (!(is >> v) || v < 1 || v > nn) throw InputError("mesh: bad connectivity");
      conn(i, k) = v - 1;
    }
  return ReferenceMesh(p, std::move(nodes), std::move(conn));
}

void save_snapshots(const std::string& path, const MatrixXd& snaps) {
  std::ofstream os(path);
  if (!os) throw InputError("save_snapshots: cannot open " + path);
  os << snaps.rows() << " " << snaps.cols() << "\n" << std::setprecision(17);
  for (int i = 0; i < snaps.rows(); ++i) {
    for (int j = 0; j < snaps.cols(); ++j) os << (j ? " " : "") << snaps(i, j);
    os << "\n";
  }
}

MatrixXd load_snapshots(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("load_snapshots: cannot open " + path);
  int r, c;
  if (!(is >> r >> c) || r < 1 || c < 1)
    throw InputError("load_snapshots: bad header");
  MatrixXd out(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      if (!(is >> out(i, j))) throw InputError("load_snapshots: bad data");
  return out;
}

}  // namespace regrom
