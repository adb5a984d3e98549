#include "regrom/synthetic.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace regrom {

void ManifoldSpec::validate() const {
  if (n_train < 1 || n_test < 1)
    throw InputError("ManifoldSpec: n_train and n_test must be >= 1");
  if (param_box.rows() < 1 || param_box.cols() != 2)
    throw InputError("ManifoldSpec: parameter box must be P x 2");
  for (int p = 0; p < param_box.rows(); ++p)
    if (!(param_box(p, 1) > param_box(p, 0)))
      throw InputError("ManifoldSpec: degenerate parameter box");
  if (mesh_cells < 1 || degree < 1) throw InputError("ManifoldSpec: bad mesh knobs");
}

ManifoldSpec default_manifold_spec(ManifoldKind kind) {
  ManifoldSpec s;
  s.kind = kind;
  switch (kind) {
    case ManifoldKind::SquareFront:
      s.param_box = MatrixXd(1, 2);
      s.param_box << 0.0, 1.0;
      s.mesh_cells = 12;
      break;
    case ManifoldKind::AnnulusGaussian:
      s.param_box = MatrixXd(2, 2);
      s.param_box << 0.0, 1.0, 0.0, 1.0;
      s.mesh_cells = 6;
      break;
    case ManifoldKind::PartitionedFront:
      s.param_box = MatrixXd(2, 2);
      s.param_box << 0.0, 1.0, 0.0, 1.0;
      s.mesh_cells = 8;
      break;
  }
  return s;
}

namespace {

struct Lattice {
  int n;  // points per direction = cells*degree + 1 entries 0..n
  int idx(int gi, int gj) const { return gi + gj * (n + 1); }
};

// triangle pair of one lattice cell, degree p, as lattice index lists
void cell_triangles(int cx, int cy, int p, int stride_cells,
                    std::vector<std::array<int, 2>>* lower,
                    std::vector<std::array<int, 2>>* upper) {
  (void)stride_cells;
  lower->clear();
  upper->clear();
  for (int b = 0; b <= p; ++b)
    for (int a = 0; a + b <= p; ++a) {
      lower->push_back({cx * p + a, cy * p + b});
      upper->push_back({(cx + 1) * p - a, (cy + 1) * p - b});
    }
}

}  // namespace

ReferenceMesh make_square_mesh(int cells, int degree) {
  const int p = degree, n = cells * p;
  Lattice lat{n};
  // route through the identity Gordon-Hall map so that later zero-displacement
  // deformations reproduce the stored nodes bitwise
  Partition unit = Partition::unit_square();
  MatrixX2d nodes((n + 1) * (n + 1), 2);
  MatrixX2d refs((n + 1) * (n + 1), 2);
  for (int gj = 0; gj <= n; ++gj)
    for (int gi = 0; gi <= n; ++gi) {
      Vector2d X(static_cast<double>(gi) / n, static_cast<double>(gj) / n);
      refs.row(lat.idx(gi, gj)) = X.transpose();
      nodes.row(lat.idx(gi, gj)) = unit.element(0).forward(X).transpose();
    }
  const int nlp = (p + 1) * (p + 2) / 2;
  MatrixXi conn(nlp, 2 * cells * cells);
  std::vector<std::array<int, 2>> lower, upper;
  int k = 0;
  for (int cy = 0; cy < cells; ++cy)
    for (int cx = 0; cx < cells; ++cx) {
      cell_triangles(cx, cy, p, cells, &lower, &upper);
      for (int i = 0; i < nlp; ++i) conn(i, k) = lat.idx(lower[i][0], lower[i][1]);
      ++k;
      for (int i = 0; i < nlp; ++i) conn(i, k) = lat.idx(upper[i][0], upper[i][1]);
      ++k;
    }
  ReferenceMesh mesh(p, nodes, conn);
  VectorXi labels = VectorXi::Zero(mesh.n_nodes());
  mesh.set_reference_coordinates(labels, refs);
  return mesh;
}

ReferenceMesh make_annulus_mesh(int rho_cells, int theta_cells, int degree,
                                double r, double R) {
  PolarChart chart(r, R);
  const int p = degree;
  const int nr = rho_cells * p;       // rho lattice 0..nr
  const int nt = theta_cells * p;     // theta lattice 0..nt-1 (periodic)
  auto idx = [&](int gi, int gj) { return gi + ((gj % nt + nt) % nt) * (nr + 1); };
  const int n_nodes = (nr + 1) * nt;
  MatrixX2d nodes(n_nodes, 2);
  MatrixX2d refs(n_nodes, 2);
  for (int gj = 0; gj < nt; ++gj)
    for (int gi = 0; gi <= nr; ++gi) {
      double rho = static_cast<double>(gi) / nr;
      double theta = -0.5 + static_cast<double>(gj) / nt;
      refs.row(idx(gi, gj)) << rho, theta;
      nodes.row(idx(gi, gj)) = chart.forward({rho, theta}).transpose();
    }
  const int nlp = (p + 1) * (p + 2) / 2;
  MatrixXi conn(nlp, 2 * rho_cells * theta_cells);
  std::vector<std::array<int, 2>> lower, upper;
  int k = 0;
  for (int cy = 0; cy < theta_cells; ++cy)
    for (int cx = 0; cx < rho_cells; ++cx) {
      cell_triangles(cx, cy, p, rho_cells, &lower, &upper);
      for (int i = 0; i < nlp; ++i) conn(i, k) = idx(lower[i][0], lower[i][1]);
      ++k;
      for (int i = 0; i < nlp; ++i) conn(i, k) = idx(upper[i][0], upper[i][1]);
      ++k;
    }
  ReferenceMesh mesh(p, nodes, conn);
  VectorXi labels = VectorXi::Zero(mesh.n_nodes());
  mesh.set_reference_coordinates(labels, refs);
  return mesh;
}

ReferenceMesh make_partition_mesh(const Partition& partition, int cells,
                                  int degree) {
  const int p = degree, n = cells * p;
  const int per = (n + 1) * (n + 1);
  const int ndd = partition.size();
  Lattice lat{n};

  // union-find over per-element lattice nodes
  std::vector<int> parent(static_cast<size_t>(ndd) * per);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  auto facet_lattice = [&](int l, int s) -> std::array<int, 2> {
    switch (l) {
      case 1:
        return {0, s};
      case 2:
        return {n, s};
      case 3:
        return {s, 0};
      default:
        return {s, n};
    }
  };
  for (const auto& f : partition.facets()) {
    for (int s = 0; s <= n; ++s) {
      int sp = f.orif ? s : n - s;
      auto A = facet_lattice(f.l, s);
      auto B = facet_lattice(f.lp, sp);
      unite(f.q * per + lat.idx(A[0], A[1]), f.qp * per + lat.idx(B[0], B[1]));
    }
  }

  // compress to global ids; representative = smallest (q, lattice) id
  std::vector<int> global(static_cast<size_t>(ndd) * per, -1);
  int n_nodes = 0;
  for (int e = 0; e < ndd * per; ++e)
    if (find(e) == e) global[e] = n_nodes++;
  for (int e = 0; e < ndd * per; ++e) global[e] = global[find(e)];

  MatrixX2d nodes(n_nodes, 2);
  MatrixX2d refs(n_nodes, 2);
  VectorXi labels(n_nodes);
  std::vector<char> written(n_nodes, 0);
  for (int q = 0; q < ndd; ++q)
    for (int gj = 0; gj <= n; ++gj)
      for (int gi = 0; gi <= n; ++gi) {
        int e = q * per + lat.idx(gi, gj);
        int g = global[e];
        if (written[g]) continue;  // lowest element index wins
        written[g] = 1;
        Vector2d X(static_cast<double>(gi) / n, static_cast<double>(gj) / n);
        refs.row(g) = X.transpose();
        labels[g] = q;
        nodes.row(g) = partition.element(q).forward(X).transpose();
      }

  const int nlp = (p + 1) * (p + 2) / 2;
  MatrixXi conn(nlp, 2 * cells * cells * ndd);
  std::vector<std::array<int, 2>> lower, upper;
  int k = 0;
  for (int q = 0; q < ndd; ++q)
    for (int cy = 0; cy < cells; ++cy)
      for (int cx = 0; cx < cells; ++cx) {
        cell_triangles(cx, cy, p, cells, &lower, &upper);
        for (int i = 0; i < nlp; ++i)
          conn(i, k) = global[q * per + lat.idx(lower[i][0], lower[i][1])];
        ++k;
        for (int i = 0; i < nlp; ++i)
          conn(i, k) = global[q * per + lat.idx(upper[i][0], upper[i][1])];
        ++k;
      }
  ReferenceMesh mesh(p, nodes, conn);
  mesh.set_reference_coordinates(labels, refs);
  return mesh;
}

namespace {

Partition fig_partition_from_scale(double scale) {
  const Vector2d a00 = scale * Vector2d(0.0, 0.0);
  const Vector2d a10 = scale * Vector2d(1.0, 0.0);
  const Vector2d a11 = scale * Vector2d(1.0, 1.0);
  const Vector2d a01 = scale * Vector2d(0.0, 1.0);
  const Vector2d F = scale * Vector2d(1.35, -0.75);
  const Vector2d G = scale * Vector2d(2.55, -0.85);
  const Vector2d H = scale * Vector2d(0.55, -1.9);
  const Vector2d K = scale * Vector2d(2.2, -2.3);
  auto quad = [](const Vector2d& p00, const Vector2d& p10, const Vector2d& p11,
                 const Vector2d& p01) {
    return std::make_shared<GordonHallMap>(
        CurveParam::line(p00, p01), CurveParam::line(p10, p11),
        CurveParam::line(p00, p10), CurveParam::line(p01, p11));
  };
  std::vector<std::shared_ptr<const ElementMap>> elems = {
      quad(a00, a10, a11, a01), quad(a10, F, G, a11), quad(a00, H, F, a10),
      quad(F, H, K, G)};
  MatrixXi qext(4, 4), ell(4, 4), orif(4, 4);
  qext << -1, 1, 1, 2, 2, 4, 4, -1, 3, 3, -1, 3, -1, -1, 2, -1;
  ell << -1, 2, 3, 2, 1, 1, 3, -1, 1, 4, -1, 2, -1, -1, 3, -1;
  orif << 1, 1, 1, 1, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1, 1, 1;
  return Partition(std::move(elems), qext, ell, orif);
}

}  // namespace

Partition make_fig_partition() { return fig_partition_from_scale(1.0); }

Partition make_fig_partition_scaled(double scale) {
  return fig_partition_from_scale(scale);
}

MatrixXd sample_parameters(const ManifoldSpec& spec, int count, uint64_t stream) {
  std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ull + stream + 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int P = spec.n_params();
  MatrixXd out(count, P);
  for (int i = 0; i < count; ++i)
    for (int p = 0; p < P; ++p) {
      double lo = spec.param_box(p, 0), hi = spec.param_box(p, 1);
      out(i, p) = lo + (hi - lo) * unif(rng);
    }
  return out;
}

double square_front_value(const VectorXd& mu, const Vector2d& x) {
  double c = 0.3 + 0.4 * mu[0];
  return std::tanh(50.0 * (x[0] - c));
}

double annulus_gaussian_value(const VectorXd& mu, const Vector2d& x) {
  double rad = 0.5 + 0.1 * mu[1];
  Vector2d xc(rad * std::cos(2.0 * M_PI * mu[0]),
              rad * std::sin(2.0 * M_PI * mu[0]));
  return std::exp(-10.0 * (x - xc).squaredNorm());
}

double partitioned_front_value(const VectorXd& mu, const Vector2d& x) {
  // front line through (1.1, -0.45), rotated and offset by the parameters
  double alpha = (mu[0] - 0.5) * 0.9;
  double offset = (mu[1] - 0.5) * 0.7;
  double ell = -0.45 + offset + std::tan(alpha) * (x[0] - 1.1);
  return 0.5 * (1.0 + std::tanh(40.0 * (x[1] - ell)));
}

VectorXd evaluate_field(ManifoldKind kind, const VectorXd& mu,
                        const MatrixX2d& points) {
  VectorXd out(points.rows());
  for (int i = 0; i < points.rows(); ++i) {
    Vector2d x = points.row(i).transpose();
    switch (kind) {
      case ManifoldKind::SquareFront:
        out[i] = square_front_value(mu, x);
        break;
      case ManifoldKind::AnnulusGaussian:
        out[i] = annulus_gaussian_value(mu, x);
        break;
      case ManifoldKind::PartitionedFront:
        out[i] = partitioned_front_value(mu, x);
        break;
    }
  }
  return out;
}

SyntheticData generate(const ManifoldSpec& spec) {
  spec.validate();
  SyntheticData data;
  switch (spec.kind) {
    case ManifoldKind::SquareFront:
      data.mesh = make_square_mesh(spec.mesh_cells, spec.degree);
      data.partition = Partition::unit_square();
      break;
    case ManifoldKind::AnnulusGaussian:
      data.mesh = make_annulus_mesh(spec.mesh_cells, 5 * spec.mesh_cells,
                                    spec.degree, 0.2, 1.0);
      data.partition = Partition::annulus(0.2, 1.0);
      break;
    case ManifoldKind::PartitionedFront:
      data.partition = make_fig_partition();
      data.mesh = make_partition_mesh(data.partition, spec.mesh_cells,
                                      spec.degree);
      break;
  }
  data.train_params = sample_parameters(spec, spec.n_train, 0);
  data.test_params = sample_parameters(spec, spec.n_test, 1);
  data.train_snapshots.resize(data.mesh.n_nodes(), spec.n_train);
  for (int k = 0; k < spec.n_train; ++k)
    data.train_snapshots.col(k) = evaluate_field(
        spec.kind, data.train_params.row(k).transpose(), data.mesh.nodes());
  data.test_snapshots.resize(data.mesh.n_nodes(), spec.n_test);
  for (int k = 0; k < spec.n_test; ++k)
    data.test_snapshots.col(k) = evaluate_field(
        spec.kind, data.test_params.row(k).transpose(), data.mesh.nodes());
  return data;
}

}  // namespace regrom
