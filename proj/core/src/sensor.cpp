#include "regrom/sensor.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>
#include <map>

#include "regrom/binio.hpp"
#include "regrom/quadrature.hpp"

namespace regrom {

namespace {

VectorXd equispaced(int n) {
  VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = static_cast<double>(i) / (n - 1);
  return x;
}

}  // namespace

SensorGrid::SensorGrid(int degree, int cells, bool periodic_y)
    : degree_(degree),
      cells_(cells),
      periodic_(periodic_y),
      local_(equispaced(degree + 1)) {
  if (degree < 1 || cells < 1) throw InputError("SensorGrid: bad parameters");
}

Vector2d SensorGrid::node_coord(int idx) const {
  int gi = idx % nx();
  int gj = idx / nx();
  double h = 1.0 / (cells_ * degree_);
  return {gi * h, gj * h};
}

int SensorGrid::node_index(int gi, int gj) const {
  if (periodic_) gj = ((gj % ny()) + ny()) % ny();
  return gi + gj * nx();
}

void SensorGrid::locate(const Vector2d& x, int* cx, int* cy,
                        Vector2d* loc) const {
  double u = std::min(1.0, std::max(0.0, x[0]));
  double v = x[1];
  if (periodic_) {
    v = v + 0.5;
    v -= std::floor(v);  // wrap into [0,1)
  } else {
    v = std::min(1.0, std::max(0.0, v));
  }
  int ci = std::min(cells_ - 1, static_cast<int>(std::floor(u * cells_)));
  int cj = std::min(cells_ - 1, static_cast<int>(std::floor(v * cells_)));
  *cx = ci;
  *cy = cj;
  (*loc)[0] = u * cells_ - ci;
  (*loc)[1] = v * cells_ - cj;
}

double SensorGrid::eval(const VectorXd& vals, const Vector2d& x) const {
  int ci, cj;
  Vector2d loc;
  locate(x, &ci, &cj, &loc);
  VectorXd a = local_.values(loc[0]);
  VectorXd b = local_.values(loc[1]);
  double out = 0.0;
  for (int j = 0; j <= degree_; ++j)
    for (int i = 0; i <= degree_; ++i)
      out += a[i] * b[j] * vals[node_index(ci * degree_ + i, cj * degree_ + j)];
  return out;
}

Vector2d SensorGrid::gradient(const VectorXd& vals, const Vector2d& x) const {
  int ci, cj;
  Vector2d loc;
  locate(x, &ci, &cj, &loc);
  VectorXd a = local_.values(loc[0]), da = local_.derivs(loc[0]);
  VectorXd b = local_.values(loc[1]), db = local_.derivs(loc[1]);
  double gx = 0.0, gy = 0.0;
  for (int j = 0; j <= degree_; ++j)
    for (int i = 0; i <= degree_; ++i) {
      double v = vals[node_index(ci * degree_ + i, cj * degree_ + j)];
      gx += da[i] * b[j] * v;
      gy += a[i] * db[j] * v;
    }
  return {gx * cells_, gy * cells_};
}

void SensorGrid::eval_row(const Vector2d& x,
                          std::vector<std::pair<int, double>>* out) const {
  int ci, cj;
  Vector2d loc;
  locate(x, &ci, &cj, &loc);
  VectorXd a = local_.values(loc[0]);
  VectorXd b = local_.values(loc[1]);
  out->clear();
  for (int j = 0; j <= degree_; ++j)
    for (int i = 0; i <= degree_; ++i)
      out->emplace_back(node_index(ci * degree_ + i, cj * degree_ + j),
                        a[i] * b[j]);
}

Eigen::SparseMatrix<double> SensorGrid::stiffness() const {
  Quadrature1d g = gauss_legendre(degree_ + 1);
  const int nl = degree_ + 1;
  // local 1D matrices on a cell of width h = 1/cells
  MatrixXd M0 = MatrixXd::Zero(nl, nl), K1 = MatrixXd::Zero(nl, nl);
  for (int q = 0; q < g.points.size(); ++q) {
    VectorXd v = local_.values(g.points[q]);
    VectorXd d = local_.derivs(g.points[q]);
    M0.noalias() += g.weights[q] * v * v.transpose();
    K1.noalias() += g.weights[q] * d * d.transpose();
  }
  double h = 1.0 / cells_;
  M0 *= h;        // d xi -> dx
  K1 *= 1.0 / h;  // (d/dx)^2 * dx
  std::vector<Eigen::Triplet<double>> trip;
  for (int cy = 0; cy < cells_; ++cy)
    for (int cx = 0; cx < cells_; ++cx)
      for (int j = 0; j <= degree_; ++j)
        for (int i = 0; i <= degree_; ++i)
          for (int jp = 0; jp <= degree_; ++jp)
            for (int ip = 0; ip <= degree_; ++ip) {
              double val = K1(i, ip) * M0(j, jp) + M0(i, ip) * K1(j, jp);
              trip.emplace_back(node_index(cx * degree_ + i, cy * degree_ + j),
                                node_index(cx * degree_ + ip, cy * degree_ + jp),
                                val);
            }
  Eigen::SparseMatrix<double> K(n_nodes(), n_nodes());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

SensorField::SensorField(std::shared_ptr<const SensorGrid> grid, MatrixXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.rows() != grid_->n_nodes())
    throw InputError("SensorField: value rows != grid nodes");
  if (!values_.allFinite())
    throw NumericalError("SensorField: non-finite values");
}

double SensorField::eval(int q, const Vector2d& X) const {
  return grid_->eval(values_.col(q), X);
}

Vector2d SensorField::gradient(int q, const Vector2d& X) const {
  return grid_->gradient(values_.col(q), X);
}

std::pair<double, double> SensorField::rescale() {
  min_ = values_.minCoeff();
  max_ = values_.maxCoeff();
  rescaled_ = true;
  double range = max_ - min_;
  if (range < 1e-14 * std::max(1.0, std::abs(max_))) {
    values_.setZero();
    return {min_, max_};
  }
  values_ = (values_.array() - min_) / range;
  return {min_, max_};
}

double periodic_extend(const SensorField& s, const Vector2d& x) {
  if (x[0] < -1e-12 || x[0] > 1.0 + 1e-12)
    throw DomainError("periodic_extend: x1 outside [0,1]");
  double wrapped = wrap_unit_centered(x[1]);
  return s.eval(0, {x[0], wrapped});
}

SensorField sensor_from_grid_fit(const ReferenceMesh& mesh, const VectorXd& u,
                                 double xi_s,
                                 std::shared_ptr<const SensorGrid> grid,
                                 int n_dd) {
  if (xi_s <= 0.0) throw InputError("sensor_from_grid_fit: xi_s must be > 0");
  if (!mesh.has_reference_coordinates())
    throw InputError("sensor_from_grid_fit: mesh lacks reference coordinates");
  if (u.size() != mesh.n_nodes())
    throw InputError("sensor_from_grid_fit: snapshot size mismatch");

  const int n = grid->n_nodes();
  Eigen::SparseMatrix<double> K = grid->stiffness();
  MatrixXd out(n, n_dd);
  double global_mean = u.mean();
  std::vector<std::pair<int, double>> row;

  for (int q = 0; q < n_dd; ++q) {
    std::vector<Eigen::Triplet<double>> trip;
    VectorXd rhs = VectorXd::Zero(n);
    int n_data = 0;
    for (int j = 0; j < mesh.n_nodes(); ++j) {
      if (mesh.labels()[j] != q) continue;
      ++n_data;
      Vector2d X = mesh.reference_coordinates().row(j).transpose();
      grid->eval_row(X, &row);
      for (const auto& [ia, wa] : row) {
        rhs[ia] += wa * u[j];
        for (const auto& [ib, wb] : row) trip.emplace_back(ia, ib, wa * wb);
      }
    }
    if (n_data == 0) {
      out.col(q).setConstant(global_mean);
      continue;
    }
    Eigen::SparseMatrix<double> EtE(n, n);
    EtE.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseMatrix<double> A = xi_s * K + EtE;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success)
      throw NumericalError("sensor_from_grid_fit: factorization failed");
    out.col(q) = solver.solve(rhs);
  }
  return SensorField(grid, std::move(out));
}

namespace {

ReferenceMesh p1_view(const ReferenceMesh& mesh) {
  const auto& vnodes = mesh.vertex_nodes();
  const int nv = static_cast<int>(vnodes.size());
  std::map<int, int> to_v;
  for (int i = 0; i < nv; ++i) to_v[vnodes[i]] = i;
  MatrixX2d vcoords(nv, 2);
  for (int i = 0; i < nv; ++i) vcoords.row(i) = mesh.nodes().row(vnodes[i]);
  MatrixXi vconn(3, mesh.n_elements());
  for (int k = 0; k < mesh.n_elements(); ++k) {
    auto v = mesh.element_vertices(k);
    for (int i = 0; i < 3; ++i) vconn(i, k) = to_v[v[i]];
  }
  return ReferenceMesh(1, vcoords, vconn);
}

}  // namespace

VectorXd p1_smooth(const ReferenceMesh& mesh, const VectorXd& u, double xi_s) {
  if (xi_s < 0.0) throw InputError("p1_smooth: xi_s must be >= 0");
  if (u.size() != mesh.n_nodes()) throw InputError("p1_smooth: size mismatch");
  const auto& vnodes = mesh.vertex_nodes();
  const int nv = static_cast<int>(vnodes.size());
  ReferenceMesh p1 = p1_view(mesh);
  const MatrixXi& vconn = p1.connectivity();

  // boundary vertices: edges used once
  std::map<std::pair<int, int>, int> edge_count;
  for (int k = 0; k < p1.n_elements(); ++k) {
    int a = vconn(0, k), b = vconn(1, k), c = vconn(2, k);
    for (auto [s, t] : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}})
      edge_count[{std::min(s, t), std::max(s, t)}]++;
  }
  std::vector<char> on_boundary(nv, 0);
  for (const auto& [e, cnt] : edge_count)
    if (cnt == 1) {
      on_boundary[e.first] = 1;
      on_boundary[e.second] = 1;
    }

  InnerProductMatrix M = assemble_inner_product(p1, NormKind::L2);
  InnerProductMatrix K = assemble_inner_product(p1, NormKind::H1);
  Eigen::SparseMatrix<double> stiff = K.X - M.X;

  VectorXd data(nv);
  for (int i = 0; i < nv; ++i) data[i] = u[vnodes[i]];

  // (xi_s K + M) u = M data on interior rows, u = data on boundary rows
  Eigen::SparseMatrix<double> A = xi_s * stiff + M.X;
  VectorXd rhs = M.X * data;
  for (int i = 0; i < A.outerSize(); ++i)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, i); it; ++it) {
      if (on_boundary[it.row()]) it.valueRef() = it.row() == it.col() ? 1.0 : 0.0;
    }
  A.prune(0.0);
  for (int i = 0; i < nv; ++i)
    if (on_boundary[i]) rhs[i] = data[i];
  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(A);
  if (solver.info() != Eigen::Success)
    throw NumericalError("p1_smooth: solve failed");
  return solver.solve(rhs);
}

SensorField sensor_from_physical_smoothing(const ReferenceMesh& mesh,
                                           const VectorXd& u, double xi_s,
                                           const Partition& partition,
                                           std::shared_ptr<const SensorGrid> grid) {
  VectorXd smooth = p1_smooth(mesh, u, xi_s);
  ReferenceMesh p1 = p1_view(mesh);

  // sample the smoothed field at Psi_q(grid nodes)
  MeshLocator locator(p1);
  const int n = grid->n_nodes();
  const int n_dd = partition.size();
  MatrixXd out(n, n_dd);
  bool polar = grid->periodic_y();
  for (int q = 0; q < n_dd; ++q) {
    const ElementMap& em = partition.element(q);
    for (int g = 0; g < n; ++g) {
      Vector2d X = grid->node_coord(g);
      if (polar) X[1] -= 0.5;
      Vector2d P = em.forward(X);
      out(g, q) = locator.interpolate(smooth, P);
    }
  }
  return SensorField(grid, std::move(out));
}

void save_sensors(const std::string& path, const std::vector<SensorField>& s) {
  BinWriter w(path);
  w.magic("RGSN");
  w.u32(1);
  w.u32(static_cast<uint32_t>(s.size()));
  if (!s.empty()) {
    w.u32(s[0].grid().degree());
    w.u32(s[0].grid().cells());
    w.u32(s[0].grid().periodic_y() ? 1 : 0);
  } else {
    w.u32(0);
    w.u32(0);
    w.u32(0);
  }
  for (const auto& f : s) {
    auto [mn, mx] = f.rescale_record();
    w.u32(f.rescaled() ? 1 : 0);
    w.f64(mn);
    w.f64(mx);
    w.matrix(f.values());
  }
}

std::vector<SensorField> load_sensors(const std::string& path,
                                      std::shared_ptr<const SensorGrid> grid) {
  BinReader r(path);
  r.magic("RGSN");
  if (r.u32() != 1) throw InputError("sensor cache: unsupported version");
  uint32_t count = r.u32();
  uint32_t deg = r.u32(), cells = r.u32(), per = r.u32();
  if (count > 0) {
    if (!grid) grid = std::make_shared<SensorGrid>(deg, cells, per != 0);
    if (grid->degree() != static_cast<int>(deg) ||
        grid->cells() != static_cast<int>(cells) ||
        grid->periodic_y() != (per != 0))
      throw InputError("sensor cache: grid mismatch");
  }
  std::vector<SensorField> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    r.u32();  // rescaled flag (informational)
    r.f64();
    r.f64();
    out.emplace_back(grid, r.matrix());
  }
  return out;
}

}  // namespace regrom
