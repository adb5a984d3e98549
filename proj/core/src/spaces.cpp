#include "regrom/spaces.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <fstream>

#include "regrom/binio.hpp"
#include "regrom/quadrature.hpp"

namespace regrom {

TensorPolyBasis::TensorPolyBasis(int J)
    : degree(J), line(gauss_lobatto_points(J + 1)) {}

VectorXd TensorPolyBasis::values(const Vector2d& X) const {
  VectorXd a = line.values(X[0]);
  VectorXd b = line.values(X[1]);
  VectorXd out((degree + 1) * (degree + 1));
  for (int j = 0; j <= degree; ++j)
    for (int i = 0; i <= degree; ++i) out[i + j * (degree + 1)] = a[i] * b[j];
  return out;
}

FourierBasis::FourierBasis(int Jf) : order(Jf) {}

VectorXd FourierBasis::values(double x) const {
  VectorXd v(size());
  v[0] = 1.0;
  for (int k = 1; k <= order; ++k) {
    v[k] = std::cos(2.0 * M_PI * k * x);
    v[order + k] = std::sin(2.0 * M_PI * k * x);
  }
  return v;
}

VectorXd FourierBasis::derivs(double x) const {
  VectorXd v(size());
  v[0] = 0.0;
  for (int k = 1; k <= order; ++k) {
    double w = 2.0 * M_PI * k;
    v[k] = -w * std::sin(2.0 * M_PI * k * x);
    v[order + k] = w * std::cos(2.0 * M_PI * k * x);
  }
  return v;
}

VectorXd FourierBasis::derivs2(double x) const {
  VectorXd v(size());
  v[0] = 0.0;
  for (int k = 1; k <= order; ++k) {
    double w = 2.0 * M_PI * k;
    v[k] = -w * w * std::cos(2.0 * M_PI * k * x);
    v[order + k] = -w * w * std::sin(2.0 * M_PI * k * x);
  }
  return v;
}

int DisplacementSpace::local_size() const {
  if (kind == SpaceKind::Polar) return (Jr + 1) * (2 * Jf + 1);
  return (J + 1) * (J + 1);
}

int DisplacementSpace::raw_index(int q, int d, int loc) const {
  const int ls = local_size();
  return loc + ls * q + ls * n_dd * d;
}

LocalEval DisplacementSpace::local_eval(const Vector2d& X, bool second) const {
  LocalEval e;
  if (kind == SpaceKind::Polar) {
    const int n1 = Jr + 1, n2 = 2 * Jf + 1;
    VectorXd a = lag1.values(X[0]), da = lag1.derivs(X[0]);
    VectorXd b = fourier.values(X[1]), db = fourier.derivs(X[1]);
    VectorXd d2a, d2b;
    if (second) {
      d2a = lag1.derivs2(X[0]);
      d2b = fourier.derivs2(X[1]);
    }
    e.v.resize(n1 * n2);
    e.dx.resize(n1 * n2);
    e.dy.resize(n1 * n2);
    if (second) {
      e.dxx.resize(n1 * n2);
      e.dxy.resize(n1 * n2);
      e.dyy.resize(n1 * n2);
    }
    for (int m = 0; m < n2; ++m)
      for (int i = 0; i < n1; ++i) {
        int loc = i + m * n1;
        e.v[loc] = a[i] * b[m];
        e.dx[loc] = da[i] * b[m];
        e.dy[loc] = a[i] * db[m];
        if (second) {
          e.dxx[loc] = d2a[i] * b[m];
          e.dxy[loc] = da[i] * db[m];
          e.dyy[loc] = a[i] * d2b[m];
        }
      }
    return e;
  }
  const int n = J + 1;
  VectorXd a = lag1.values(X[0]), da = lag1.derivs(X[0]);
  VectorXd b = lag2.values(X[1]), db = lag2.derivs(X[1]);
  VectorXd d2a, d2b;
  if (second) {
    d2a = lag1.derivs2(X[0]);
    d2b = lag2.derivs2(X[1]);
  }
  e.v.resize(n * n);
  e.dx.resize(n * n);
  e.dy.resize(n * n);
  if (second) {
    e.dxx.resize(n * n);
    e.dxy.resize(n * n);
    e.dyy.resize(n * n);
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      int loc = i + j * n;
      e.v[loc] = a[i] * b[j];
      e.dx[loc] = da[i] * b[j];
      e.dy[loc] = a[i] * db[j];
      if (second) {
        e.dxx[loc] = d2a[i] * b[j];
        e.dxy[loc] = da[i] * db[j];
        e.dyy[loc] = a[i] * d2b[j];
      }
    }
  return e;
}

Vector2d DisplacementSpace::eval_raw(const VectorXd& raw, int q,
                                     const Vector2d& X) const {
  LocalEval e = local_eval(X);
  Vector2d out = Vector2d::Zero();
  const int ls = local_size();
  for (int d = 0; d < 2; ++d) {
    double s = 0.0;
    const int base = raw_index(q, d, 0);
    for (int loc = 0; loc < ls; ++loc) s += raw[base + loc] * e.v[loc];
    out[d] = s;
  }
  return out;
}

Matrix2d DisplacementSpace::eval_raw_gradient(const VectorXd& raw, int q,
                                              const Vector2d& X) const {
  LocalEval e = local_eval(X);
  Matrix2d out = Matrix2d::Zero();
  const int ls = local_size();
  for (int d = 0; d < 2; ++d) {
    const int base = raw_index(q, d, 0);
    double gx = 0.0, gy = 0.0;
    for (int loc = 0; loc < ls; ++loc) {
      gx += raw[base + loc] * e.dx[loc];
      gy += raw[base + loc] * e.dy[loc];
    }
    out(d, 0) = gx;
    out(d, 1) = gy;
  }
  return out;
}

Vector2d DisplacementSpace::eval(const VectorXd& a, int q,
                                 const Vector2d& X) const {
  return eval_raw(basis * a, q, X);
}

Matrix2d DisplacementSpace::eval_gradient(const VectorXd& a, int q,
                                          const Vector2d& X) const {
  return eval_raw_gradient(basis * a, q, X);
}

DisplacementSpace DisplacementSpace::restricted(const MatrixXd& Z) const {
  if (Z.rows() != dim()) throw InputError("restricted: Z row mismatch");
  DisplacementSpace out = *this;
  out.basis = basis * Z;
  out.A_stab = Z.transpose() * A_stab * Z;
  return out;
}

namespace {

struct Factor1d {
  MatrixXd S0, S1, S2;  // value/derivative/second-derivative Gram matrices
};

Factor1d lagrange_factor_matrices(const Lagrange1d& lag, int quad_pts) {
  Quadrature1d q = gauss_legendre(quad_pts);
  const int n = lag.size();
  Factor1d f;
  f.S0.setZero(n, n);
  f.S1.setZero(n, n);
  f.S2.setZero(n, n);
  for (int g = 0; g < q.points.size(); ++g) {
    VectorXd v = lag.values(q.points[g]);
    VectorXd d = lag.derivs(q.points[g]);
    VectorXd d2 = lag.derivs2(q.points[g]);
    double w = q.weights[g];
    f.S0.noalias() += w * v * v.transpose();
    f.S1.noalias() += w * d * d.transpose();
    f.S2.noalias() += w * d2 * d2.transpose();
  }
  return f;
}

Factor1d fourier_factor_matrices(const FourierBasis& fb) {
  const int n = fb.size();
  Factor1d f;
  f.S0 = MatrixXd::Zero(n, n);
  f.S1 = MatrixXd::Zero(n, n);
  f.S2 = MatrixXd::Zero(n, n);
  f.S0(0, 0) = 1.0;
  for (int k = 1; k <= fb.order; ++k) {
    double w = 2.0 * M_PI * k;
    f.S0(k, k) = 0.5;
    f.S0(fb.order + k, fb.order + k) = 0.5;
    f.S1(k, k) = 0.5 * w * w;
    f.S1(fb.order + k, fb.order + k) = 0.5 * w * w;
    f.S2(k, k) = 0.5 * w * w * w * w;
    f.S2(fb.order + k, fb.order + k) = 0.5 * w * w * w * w;
  }
  return f;
}

// Kron of 1D factors into the (i + j*n1) local layout: T(x-factor) x T(y-factor)
MatrixXd kron_local(const MatrixXd& A1, const MatrixXd& A2) {
  const int n1 = static_cast<int>(A1.rows());
  const int n2 = static_cast<int>(A2.rows());
  MatrixXd K(n1 * n2, n1 * n2);
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i)
      for (int jp = 0; jp < n2; ++jp)
        for (int ip = 0; ip < n1; ++ip)
          K(i + j * n1, ip + jp * n1) = A1(i, ip) * A2(j, jp);
  return K;
}

// local H2 block (full norm) and H2-seminorm block from 1D factors
void h2_blocks(const Factor1d& fx, const Factor1d& fy, MatrixXd* full,
               MatrixXd* semi) {
  MatrixXd s00 = kron_local(fx.S0, fy.S0);
  MatrixXd s10 = kron_local(fx.S1, fy.S0);
  MatrixXd s01 = kron_local(fx.S0, fy.S1);
  MatrixXd s20 = kron_local(fx.S2, fy.S0);
  MatrixXd s11 = kron_local(fx.S1, fy.S1);
  MatrixXd s02 = kron_local(fx.S0, fy.S2);
  *semi = s20 + s11 + s02;
  *full = s00 + s10 + s01 + *semi;
}

struct BuildResult {
  MatrixXd G, Gsemi;
};

// Plain (reference-square) Gramian: block diagonal over (q, d).
BuildResult assemble_plain_gramian(DisplacementSpace& sp) {
  const int ls = sp.local_size();
  const int raw = ls * sp.n_dd * 2;
  BuildResult out;
  out.G.setZero(raw, raw);
  out.Gsemi.setZero(raw, raw);
  MatrixXd full, semi;
  if (sp.kind == SpaceKind::Polar) {
    Factor1d fx = lagrange_factor_matrices(sp.lag1, sp.Jr + 2);
    Factor1d fy = fourier_factor_matrices(sp.fourier);
    h2_blocks(fx, fy, &full, &semi);
  } else {
    Factor1d fx = lagrange_factor_matrices(sp.lag1, sp.J + 2);
    h2_blocks(fx, fx, &full, &semi);
  }
  for (int q = 0; q < sp.n_dd; ++q)
    for (int d = 0; d < 2; ++d) {
      int base = sp.raw_index(q, d, 0);
      out.G.block(base, base, ls, ls) = sp.areas[q] * full;
      out.Gsemi.block(base, base, ls, ls) = semi;
    }
  return out;
}

// Modified mapping norm: per element, H2 norm of F (phi o Psi~^{-1}) on the
// affine image, with Psi~ the least-squares affine fit through the corners.
BuildResult assemble_modified_gramian(DisplacementSpace& sp,
                                      const Partition& partition) {
  const int ls = sp.local_size();
  const int raw = ls * sp.n_dd * 2;
  BuildResult out;
  out.G.setZero(raw, raw);
  out.Gsemi.setZero(raw, raw);

  // seminorm stays the plain reference-square one (A_stab is defined on
  // the unit square)
  Factor1d fx = lagrange_factor_matrices(sp.lag1, sp.J + 2);
  MatrixXd full_plain, semi;
  h2_blocks(fx, fx, &full_plain, &semi);
  for (int q = 0; q < sp.n_dd; ++q)
    for (int d = 0; d < 2; ++d) {
      int base = sp.raw_index(q, d, 0);
      out.Gsemi.block(base, base, ls, ls) = semi;
    }

  Quadrature2d quad = tensor_gauss(sp.J + 2);
  const int nq = static_cast<int>(quad.weights.size());
  for (int q = 0; q < sp.n_dd; ++q) {
    const auto& gh = dynamic_cast<const GordonHallMap&>(partition.element(q));
    // LS affine fit through the 4 corners
    Eigen::Matrix<double, 4, 3> Arows;
    Arows << 0, 0, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1;
    MatrixXd rhs(4, 2);
    rhs.row(0) = gh.corners()[0].transpose();
    rhs.row(1) = gh.corners()[1].transpose();
    rhs.row(2) = gh.corners()[2].transpose();
    rhs.row(3) = gh.corners()[3].transpose();
    MatrixXd sol =
        (Arows.transpose() * Arows).ldlt().solve(Arows.transpose() * rhs);
    Matrix2d F = sol.topRows<2>().transpose();  // dPsi~/dX
    double detF = F.determinant();
    if (std::abs(detF) < 1e-12)
      throw NumericalError("modified norm: degenerate affine fit");
    Matrix2d Binv = F.inverse();
    Matrix2d W = F.transpose() * F;  // component coupling

    MatrixXd Gq = MatrixXd::Zero(2 * ls, 2 * ls);  // [d=0 block; d=1 block]
    for (int g = 0; g < nq; ++g) {
      LocalEval e = sp.local_eval(quad.points.row(g).transpose(), true);
      // y-derivatives of the scalar factor
      VectorXd dy1 = Binv(0, 0) * e.dx + Binv(1, 0) * e.dy;
      VectorXd dy2 = Binv(0, 1) * e.dx + Binv(1, 1) * e.dy;
      auto d2 = [&](int a, int b) {
        return Binv(0, a) * Binv(0, b) * e.dxx +
               (Binv(0, a) * Binv(1, b) + Binv(1, a) * Binv(0, b)) * e.dxy +
               Binv(1, a) * Binv(1, b) * e.dyy;
      };
      VectorXd d11 = d2(0, 0), d12 = d2(0, 1), d22 = d2(1, 1);
      MatrixXd scal = e.v * e.v.transpose() + dy1 * dy1.transpose() +
                      dy2 * dy2.transpose() + d11 * d11.transpose() +
                      d12 * d12.transpose() + d22 * d22.transpose();
      double w = quad.weights[g] * std::abs(detF);
      for (int d = 0; d < 2; ++d)
        for (int dp = 0; dp < 2; ++dp)
          Gq.block(d * ls, dp * ls, ls, ls).noalias() += (w * W(d, dp)) * scal;
    }
    for (int d = 0; d < 2; ++d)
      for (int dp = 0; dp < 2; ++dp)
        out.G.block(sp.raw_index(q, d, 0), sp.raw_index(q, dp, 0), ls, ls) =
            sp.areas[q] * Gq.block(d * ls, dp * ls, ls, ls);
  }
  return out;
}

// rows: phi_d(point) = 0 or phi_q(ga_l(t)) -/+ phi_q'(ga_l'(t')) = 0
void finalize_space(DisplacementSpace& sp, const MatrixXd& constraints,
                    const BuildResult& gram) {
  const int raw = static_cast<int>(gram.G.rows());
  MatrixXd null_basis;
  if (constraints.rows() == 0) {
    null_basis = MatrixXd::Identity(raw, raw);
  } else {
    Eigen::BDCSVD<MatrixXd> svd(constraints, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double smax = sv.size() ? sv[0] : 0.0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > 1e-10 * smax) ++rank;
    if (rank >= raw) throw NumericalError("space build: empty null space");
    null_basis = svd.matrixV().rightCols(raw - rank);
  }
  sp.G = gram.G;
  // Gram-orthonormalize twice for machine-precision orthogonality
  MatrixXd B = null_basis;
  for (int pass = 0; pass < 2; ++pass) {
    MatrixXd S = B.transpose() * sp.G * B;
    Eigen::LLT<MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
      throw NumericalError("space build: Gramian not SPD on null space");
    B = llt.matrixU().solve<Eigen::OnTheRight>(B);
  }
  // deterministic signs: largest-magnitude raw coefficient positive
  for (int m = 0; m < B.cols(); ++m) {
    int idx = 0;
    B.col(m).cwiseAbs().maxCoeff(&idx);
    if (B(idx, m) < 0) B.col(m) = -B.col(m);
  }
  sp.basis = B;
  sp.full_dim = static_cast<int>(B.cols());
  sp.A_stab = B.transpose() * gram.Gsemi * B;
  sp.A_stab = 0.5 * (sp.A_stab + sp.A_stab.transpose().eval());
}

}  // namespace

DisplacementSpace build_rect_space(int J) {
  if (J < 2) throw InputError("build_rect_space: J must be >= 2 (empty space)");
  Partition sq = Partition::unit_square();
  return build_dd_space(sq, J);
}

DisplacementSpace build_polar_space(int Jr, int Jf) {
  if (Jr < 2 || Jf < 0) throw InputError("build_polar_space: need Jr >= 2, Jf >= 0");
  DisplacementSpace sp;
  sp.kind = SpaceKind::Polar;
  sp.Jr = Jr;
  sp.Jf = Jf;
  sp.n_dd = 1;
  sp.lag1 = Lagrange1d(gauss_lobatto_points(Jr + 1));
  sp.fourier = FourierBasis(Jf);
  sp.areas = VectorXd::Ones(1);  // |Omega| folded out of the polar norm
  const int ls = sp.local_size();
  const int raw = 2 * ls;

  // radial component vanishes at x1 in {0,1}; sampled over a Fourier-resolving
  // set of angles
  const int na = 2 * Jf + 1;
  MatrixXd C = MatrixXd::Zero(2 * na, raw);
  int row = 0;
  for (int edge = 0; edge < 2; ++edge)
    for (int s = 0; s < na; ++s, ++row) {
      double y = -0.5 + static_cast<double>(s) / na;
      LocalEval e = sp.local_eval({static_cast<double>(edge), y});
      for (int loc = 0; loc < ls; ++loc) C(row, sp.raw_index(0, 0, loc)) = e.v[loc];
    }
  BuildResult gram = assemble_plain_gramian(sp);
  finalize_space(sp, C, gram);
  return sp;
}

MatrixXd dd_constraint_matrix(const Partition& partition, int J) {
  DisplacementSpace sp;
  sp.kind = partition.size() == 1 && partition.element(0).periodic_theta()
                ? SpaceKind::Polar
                : SpaceKind::DD;
  if (sp.kind == SpaceKind::Polar)
    throw InputError("dd_constraint_matrix: use build_polar_space for annuli");
  sp.J = J;
  sp.n_dd = partition.size();
  sp.lag1 = Lagrange1d(gauss_lobatto_points(J + 1));
  sp.lag2 = sp.lag1;
  const int ls = sp.local_size();
  const int raw = 2 * ls * sp.n_dd;
  VectorXd gl = gauss_lobatto_points(J + 1);

  std::vector<VectorXd> rows;
  rows.reserve(4 * (J + 1) * sp.n_dd + 2 * (J + 1) * partition.interior_facets());
  // normal component on all element edges: l=1 west/l=2 east fix component 0,
  // l=3 south/l=4 north fix component 1
  for (int q = 0; q < sp.n_dd; ++q)
    for (int l = 1; l <= 4; ++l) {
      int d = l <= 2 ? 0 : 1;
      for (int s = 0; s <= J; ++s) {
        LocalEval e = sp.local_eval(facet_point(l, gl[s]));
        VectorXd r = VectorXd::Zero(raw);
        for (int loc = 0; loc < ls; ++loc)
          r[sp.raw_index(q, d, loc)] = e.v[loc];
        rows.push_back(std::move(r));
      }
    }
  // vector continuity across interior facets
  for (const auto& f : partition.facets()) {
    for (int s = 0; s <= J; ++s) {
      double t = gl[s];
      double tp = f.orif ? t : 1.0 - t;
      double sign = f.orif ? 1.0 : -1.0;
      LocalEval ea = sp.local_eval(facet_point(f.l, t));
      LocalEval eb = sp.local_eval(facet_point(f.lp, tp));
      for (int d = 0; d < 2; ++d) {
        VectorXd r = VectorXd::Zero(raw);
        for (int loc = 0; loc < ls; ++loc) {
          r[sp.raw_index(f.q, d, loc)] += ea.v[loc];
          r[sp.raw_index(f.qp, d, loc)] -= sign * eb.v[loc];
        }
        rows.push_back(std::move(r));
      }
    }
  }
  MatrixXd C(static_cast<int>(rows.size()), raw);
  for (size_t i = 0; i < rows.size(); ++i) C.row(static_cast<int>(i)) = rows[i];
  return C;
}

DisplacementSpace build_dd_space(const Partition& partition, int J,
                                 bool modified_norm) {
  if (J < 2) throw InputError("build_dd_space: J must be >= 2");
  DisplacementSpace sp;
  sp.kind = SpaceKind::DD;
  sp.J = J;
  sp.n_dd = partition.size();
  sp.modified_norm = modified_norm;
  sp.lag1 = Lagrange1d(gauss_lobatto_points(J + 1));
  sp.lag2 = sp.lag1;
  sp.areas.resize(sp.n_dd);
  for (int q = 0; q < sp.n_dd; ++q) sp.areas[q] = partition.element(q).area();

  MatrixXd C = dd_constraint_matrix(partition, J);
  BuildResult gram = modified_norm ? assemble_modified_gramian(sp, partition)
                                   : assemble_plain_gramian(sp);
  finalize_space(sp, C, gram);
  return sp;
}

long dd_dimension_formula(int J, int n_dd, int n_int) {
  return (2L * (J + 1) * (J + 1) - 4L * (J + 1)) * n_dd - (J - 1L) * n_int;
}

void DisplacementSpace::save(const std::string& path) const {
  BinWriter w(path);
  w.magic("RGSP");
  w.u32(1);
  w.u32(static_cast<uint32_t>(kind));
  w.u32(J);
  w.u32(Jr);
  w.u32(Jf);
  w.u32(n_dd);
  w.u32(modified_norm ? 1 : 0);
  w.u32(full_dim);
  w.matrix(basis);
  w.matrix(G);
  w.matrix(A_stab);
  w.vector(areas);
}

DisplacementSpace DisplacementSpace::load(const std::string& path) {
  BinReader r(path);
  r.magic("RGSP");
  uint32_t ver = r.u32();
  if (ver != 1) throw InputError("space cache: unsupported version");
  DisplacementSpace sp;
  sp.kind = static_cast<SpaceKind>(r.u32());
  sp.J = r.u32();
  sp.Jr = r.u32();
  sp.Jf = r.u32();
  sp.n_dd = r.u32();
  sp.modified_norm = r.u32() != 0;
  sp.full_dim = r.u32();
  sp.basis = r.matrix();
  sp.G = r.matrix();
  sp.A_stab = r.matrix();
  sp.areas = r.vector();
  if (sp.kind == SpaceKind::Polar) {
    sp.lag1 = Lagrange1d(gauss_lobatto_points(sp.Jr + 1));
    sp.fourier = FourierBasis(sp.Jf);
  } else {
    sp.lag1 = Lagrange1d(gauss_lobatto_points(sp.J + 1));
    sp.lag2 = sp.lag1;
  }
  return sp;
}

}  // namespace regrom
