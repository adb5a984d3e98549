#include "regrom/geometry.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "regrom/quadrature.hpp"

namespace regrom {

PolarChart::PolarChart(double inner_radius, double outer_radius)
    : r_(inner_radius), R_(outer_radius) {
  if (!(0.0 < r_ && r_ < R_))
    throw ConstructionError("PolarChart: need 0 < r < R");
}

Vector2d PolarChart::forward(const Vector2d& x) const {
  if (x[0] < -1e-12 || x[0] > 1.0 + 1e-12)
    throw DomainError("PolarChart::forward: rho outside [0,1]");
  double rad = r_ + (R_ - r_) * x[0];
  double ang = 2.0 * M_PI * x[1];
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

Matrix2d PolarChart::jacobian(const Vector2d& x) const {
  double rad = r_ + (R_ - r_) * x[0];
  double ang = 2.0 * M_PI * x[1];
  double c = std::cos(ang), s = std::sin(ang);
  Matrix2d J;
  J << (R_ - r_) * c, -2.0 * M_PI * rad * s, (R_ - r_) * s, 2.0 * M_PI * rad * c;
  return J;
}

Vector2d PolarChart::inverse(const Vector2d& p, double tol) const {
  double rad = p.norm();
  if (rad < r_ - tol || rad > R_ + tol)
    throw DomainError("PolarChart::inverse: point outside annulus");
  double rho = (rad - r_) / (R_ - r_);
  rho = std::min(1.0, std::max(0.0, rho));
  double theta = std::atan2(p[1], p[0]) / (2.0 * M_PI);  // in (-1/2, 1/2]
  return {rho, theta};
}

CurveParam CurveParam::line(const Vector2d& a, const Vector2d& b) {
  CurveParam c;
  c.rep_ = Line{a, b};
  return c;
}

CurveParam CurveParam::arc(const Vector2d& center, double radius, double theta0,
                           double theta1) {
  CurveParam c;
  c.rep_ = Arc{center, radius, theta0, theta1};
  return c;
}

CurveParam CurveParam::sampled(const std::function<Vector2d(double)>& f,
                               int degree) {
  if (degree < 1) throw InputError("CurveParam::sampled: degree >= 1");
  VectorXd t = gauss_lobatto_points(degree + 1);
  MatrixX2d pts(degree + 1, 2);
  for (int i = 0; i <= degree; ++i) pts.row(i) = f(t[i]).transpose();
  return from_points(std::move(pts));
}

CurveParam CurveParam::from_points(MatrixX2d gl_samples) {
  if (gl_samples.rows() < 2) throw InputError("CurveParam: need >= 2 samples");
  CurveParam c;
  Poly p;
  p.basis = Lagrange1d(gauss_lobatto_points(static_cast<int>(gl_samples.rows())));
  p.pts = std::move(gl_samples);
  c.rep_ = std::move(p);
  return c;
}

CurveParam CurveParam::polyline(MatrixX2d pts) {
  if (pts.rows() < 2) throw InputError("CurveParam::polyline: need >= 2 points");
  CurveParam c;
  c.rep_ = Polyline{std::move(pts)};
  return c;
}

Vector2d CurveParam::eval(double t) const {
  double s = param(t);
  if (const auto* l = std::get_if<Line>(&rep_)) return l->a + s * (l->b - l->a);
  if (const auto* a = std::get_if<Arc>(&rep_)) {
    double th = a->th0 + s * (a->th1 - a->th0);
    return a->c + a->r * Vector2d(std::cos(th), std::sin(th));
  }
  if (const auto* p = std::get_if<Poly>(&rep_)) {
    VectorXd v = p->basis.values(s);
    return p->pts.transpose() * v;
  }
  const auto& pl = std::get<Polyline>(rep_);
  int n = static_cast<int>(pl.pts.rows());
  double u = s * (n - 1);
  int k = std::min(n - 2, std::max(0, static_cast<int>(std::floor(u))));
  double w = u - k;
  return pl.pts.row(k).transpose() * (1.0 - w) + pl.pts.row(k + 1).transpose() * w;
}

Vector2d CurveParam::deriv(double t) const {
  double s = param(t);
  double sign = dparam();
  if (const auto* l = std::get_if<Line>(&rep_)) return sign * (l->b - l->a);
  if (const auto* a = std::get_if<Arc>(&rep_)) {
    double th = a->th0 + s * (a->th1 - a->th0);
    double dth = a->th1 - a->th0;
    return sign * a->r * dth * Vector2d(-std::sin(th), std::cos(th));
  }
  if (const auto* p = std::get_if<Poly>(&rep_)) {
    VectorXd d = p->basis.derivs(s);
    return sign * (p->pts.transpose() * d);
  }
  const auto& pl = std::get<Polyline>(rep_);
  int n = static_cast<int>(pl.pts.rows());
  double u = s * (n - 1);
  int k = std::min(n - 2, std::max(0, static_cast<int>(std::floor(u))));
  return sign * (n - 1) * (pl.pts.row(k + 1) - pl.pts.row(k)).transpose();
}

CurveParam CurveParam::reversed() const {
  CurveParam c = *this;
  c.reversed_ = !reversed_;
  return c;
}

std::string CurveParam::describe() const {
  if (std::holds_alternative<Line>(rep_)) return "line";
  if (std::holds_alternative<Arc>(rep_)) return "arc";
  if (std::holds_alternative<Poly>(rep_)) return "curve";
  return "polyline";
}

void CurveParam::write(std::ostream& os) const {
  auto put = [&os](double v) { os << " " << std::setprecision(17) << v; };
  if (const auto* l = std::get_if<Line>(&rep_)) {
    Vector2d a = reversed_ ? l->b : l->a;
    Vector2d b = reversed_ ? l->a : l->b;
    os << "line";
    put(a[0]);
    put(a[1]);
    put(b[0]);
    put(b[1]);
    os << "\n";
    return;
  }
  if (const auto* a = std::get_if<Arc>(&rep_)) {
    double t0 = reversed_ ? a->th1 : a->th0;
    double t1 = reversed_ ? a->th0 : a->th1;
    os << "arc";
    put(a->c[0]);
    put(a->c[1]);
    put(a->r);
    put(t0);
    put(t1);
    os << "\n";
    return;
  }
  if (const auto* p = std::get_if<Poly>(&rep_)) {
    os << "curve " << p->pts.rows() << "\n";
    for (int i = 0; i < p->pts.rows(); ++i) {
      int r = reversed_ ? static_cast<int>(p->pts.rows()) - 1 - i : i;
      os << std::setprecision(17) << p->pts(r, 0) << " " << p->pts(r, 1) << "\n";
    }
    return;
  }
  const auto& pl = std::get<Polyline>(rep_);
  os << "polyline " << pl.pts.rows() << "\n";
  for (int i = 0; i < pl.pts.rows(); ++i) {
    int r = reversed_ ? static_cast<int>(pl.pts.rows()) - 1 - i : i;
    os << std::setprecision(17) << pl.pts(r, 0) << " " << pl.pts(r, 1) << "\n";
  }
}

double ElementMap::area() const {
  Quadrature2d q = tensor_gauss(12);
  double a = 0.0;
  for (int i = 0; i < q.weights.size(); ++i)
    a += q.weights[i] * std::abs(jacobian(q.points.row(i).transpose()).determinant());
  return a;
}

Vector2d ElementMap::inverse(const Vector2d& p) const {
  Vector2d X;
  if (!try_inverse(p, &X))
    throw InversionError("ElementMap::inverse: no preimage found");
  constexpr double tol = 1e-8;
  bool inside = X[0] >= -tol && X[0] <= 1.0 + tol &&
                (periodic_theta() || (X[1] >= -tol && X[1] <= 1.0 + tol));
  if (!inside)
    throw DomainError("ElementMap::inverse: point outside the element");
  X[0] = std::min(1.0, std::max(0.0, X[0]));
  if (!periodic_theta()) X[1] = std::min(1.0, std::max(0.0, X[1]));
  return X;
}

GordonHallMap::GordonHallMap(CurveParam west, CurveParam east, CurveParam south,
                             CurveParam north, double corner_tol)
    : west_(std::move(west)),
      east_(std::move(east)),
      south_(std::move(south)),
      north_(std::move(north)) {
  c_[0] = south_.eval(0.0);  // c00
  c_[1] = south_.eval(1.0);  // c10
  c_[2] = north_.eval(1.0);  // c11
  c_[3] = north_.eval(0.0);  // c01
  auto check = [&](const Vector2d& a, const Vector2d& b, const char* where) {
    if ((a - b).norm() > corner_tol)
      throw ConstructionError(std::string("GordonHallMap: corner mismatch at ") +
                              where);
  };
  check(west_.eval(0.0), c_[0], "c00");
  check(west_.eval(1.0), c_[3], "c01");
  check(east_.eval(0.0), c_[1], "c10");
  check(east_.eval(1.0), c_[2], "c11");
}

Vector2d GordonHallMap::forward(const Vector2d& X) const {
  double x = X[0], y = X[1];
  Vector2d v = (1.0 - x) * west_.eval(y) + x * east_.eval(y) +
               (1.0 - y) * south_.eval(x) + y * north_.eval(x);
  v -= (1.0 - x) * (1.0 - y) * c_[0] + x * (1.0 - y) * c_[1] + x * y * c_[2] +
       (1.0 - x) * y * c_[3];
  return v;
}

Matrix2d GordonHallMap::jacobian(const Vector2d& X) const {
  double x = X[0], y = X[1];
  Vector2d dx = east_.eval(y) - west_.eval(y) + (1.0 - y) * south_.deriv(x) +
                y * north_.deriv(x);
  dx -= -(1.0 - y) * c_[0] + (1.0 - y) * c_[1] + y * c_[2] - y * c_[3];
  Vector2d dy = (1.0 - x) * west_.deriv(y) + x * east_.deriv(y) + north_.eval(x) -
                south_.eval(x);
  dy -= -(1.0 - x) * c_[0] - x * c_[1] + x * c_[2] + (1.0 - x) * c_[3];
  Matrix2d J;
  J.col(0) = dx;
  J.col(1) = dy;
  return J;
}

const CurveParam& GordonHallMap::edge(int l) const {
  switch (l) {
    case 1:
      return west_;
    case 2:
      return east_;
    case 3:
      return south_;
    case 4:
      return north_;
    default:
      throw InputError("GordonHallMap::edge: l must be in 1..4");
  }
}

bool GordonHallMap::try_inverse(const Vector2d& p, Vector2d* out) const {
  static const std::array<Vector2d, 5> seeds = {
      Vector2d{0.5, 0.5}, Vector2d{0.25, 0.25}, Vector2d{0.75, 0.25},
      Vector2d{0.25, 0.75}, Vector2d{0.75, 0.75}};
  constexpr int max_iter = 50;
  constexpr double tol = 1e-10;
  for (const Vector2d& seed : seeds) {
    Vector2d X = seed;
    for (int it = 0; it < max_iter; ++it) {
      Vector2d r = forward(X) - p;
      if (r.norm() <= tol) {
        *out = X;
        return true;
      }
      Matrix2d J = jacobian(X);
      double det = J.determinant();
      if (std::abs(det) < 1e-14) break;
      X -= J.inverse() * r;
      // keep iterates near the square so curve extrapolation stays tame
      X[0] = std::min(1.5, std::max(-0.5, X[0]));
      X[1] = std::min(1.5, std::max(-0.5, X[1]));
    }
  }
  return false;
}

bool PolarAnnulusMap::try_inverse(const Vector2d& p, Vector2d* X) const {
  double rad = p.norm();
  if (rad < 1e-300) return false;
  double r = chart_.inner_radius(), R = chart_.outer_radius();
  (*X)[0] = (rad - r) / (R - r);  // may fall outside [0,1]
  (*X)[1] = std::atan2(p[1], p[0]) / (2.0 * M_PI);
  return true;
}

Vector2d facet_point(int l, double t) {
  switch (l) {
    case 1:
      return {0.0, t};
    case 2:
      return {1.0, t};
    case 3:
      return {t, 0.0};
    case 4:
      return {t, 1.0};
    default:
      throw InputError("facet_point: l must be in 1..4");
  }
}

Vector2d facet_tangent(int l) {
  return (l <= 2) ? Vector2d{0.0, 1.0} : Vector2d{1.0, 0.0};
}

Partition::Partition(std::vector<std::shared_ptr<const ElementMap>> elems,
                     MatrixXi qext, MatrixXi ell_ext, MatrixXi orif)
    : elems_(std::move(elems)),
      qext_(std::move(qext)),
      ell_ext_(std::move(ell_ext)),
      orif_(std::move(orif)) {
  validate();
}

void Partition::validate() const {
  const int n = size();
  if (qext_.rows() != 4 || qext_.cols() != n || ell_ext_.rows() != 4 ||
      ell_ext_.cols() != n || orif_.rows() != 4 || orif_.cols() != n)
    throw ConstructionError("Partition: tables must be 4 x N_dd");
  int interior = 0;
  for (int q = 0; q < n; ++q) {
    for (int l = 0; l < 4; ++l) {
      int qp = qext_(l, q);
      if (qp == -1) continue;
      ++interior;
      int lp = ell_ext_(l, q);
      if (qp < 1 || qp > n || lp < 1 || lp > 4)
        throw ConstructionError("Partition: table entry out of range");
      // symmetry
      if (qext_(lp - 1, qp - 1) != q + 1 || ell_ext_(lp - 1, qp - 1) != l + 1)
        throw ConstructionError("Partition: qext/ell_ext tables not symmetric");
      if (orif_(l, q) != orif_(lp - 1, qp - 1))
        throw ConstructionError("Partition: orif table not symmetric");
    }
  }
  if (interior % 2 != 0) throw ConstructionError("Partition: odd facet-slot count");
  const_cast<Partition*>(this)->n_int_ = interior / 2;

  // interface compatibility of the element maps
  for (const Facet& f : facets()) {
    const ElementMap& A = element(f.q);
    const ElementMap& B = element(f.qp);
    for (int s = 0; s <= 20; ++s) {
      double t = s / 20.0;
      double tp = f.orif ? t : 1.0 - t;
      Vector2d pa = A.forward(facet_point(f.l, t));
      Vector2d pb = B.forward(facet_point(f.lp, tp));
      if ((pa - pb).norm() > 1e-10)
        throw ConstructionError("Partition: facet curves incompatible between "
                                "elements " +
                                std::to_string(f.q + 1) + " and " +
                                std::to_string(f.qp + 1));
    }
  }
}

std::vector<Partition::Facet> Partition::facets() const {
  std::vector<Facet> out;
  for (int q = 0; q < size(); ++q)
    for (int l = 0; l < 4; ++l) {
      int qp = qext_(l, q);
      if (qp == -1) continue;
      int lp = ell_ext_(l, q);
      // report each pair once
      if (qp - 1 < q || (qp - 1 == q && lp - 1 < l)) continue;
      out.push_back({q, l + 1, qp - 1, lp, orif_(l, q)});
    }
  return out;
}

int Partition::locate(const Vector2d& p, Vector2d* xref, double tol) const {
  for (int q = 0; q < size(); ++q) {
    Vector2d X;
    if (!elems_[q]->try_inverse(p, &X)) continue;
    bool inside;
    if (elems_[q]->periodic_theta()) {
      inside = X[0] >= -tol && X[0] <= 1.0 + tol;
    } else {
      inside = X[0] >= -tol && X[0] <= 1.0 + tol && X[1] >= -tol &&
               X[1] <= 1.0 + tol;
    }
    if (!inside) continue;
    X[0] = std::min(1.0, std::max(0.0, X[0]));
    if (!elems_[q]->periodic_theta()) X[1] = std::min(1.0, std::max(0.0, X[1]));
    if ((elems_[q]->forward(X) - p).norm() > 1e-6) continue;
    if (xref) *xref = X;
    return q;
  }
  return -1;
}

Partition Partition::unit_square() {
  auto gh = std::make_shared<GordonHallMap>(
      CurveParam::line({0, 0}, {0, 1}), CurveParam::line({1, 0}, {1, 1}),
      CurveParam::line({0, 0}, {1, 0}), CurveParam::line({0, 1}, {1, 1}));
  MatrixXi none = MatrixXi::Constant(4, 1, -1);
  return Partition({gh}, none, none, MatrixXi::Constant(4, 1, 1));
}

Partition Partition::annulus(double r, double R) {
  auto pm = std::make_shared<PolarAnnulusMap>(PolarChart(r, R));
  MatrixXi none = MatrixXi::Constant(4, 1, -1);
  return Partition({pm}, none, none, MatrixXi::Constant(4, 1, 1));
}

Vector2d geometric_map(const Partition& at_mu, const Partition& at_mubar,
                       const Vector2d& p) {
  if (at_mu.size() != at_mubar.size())
    throw InputError("geometric_map: partitions differ in size");
  Vector2d xref;
  int q = at_mubar.locate(p, &xref);
  if (q < 0) throw DomainError("geometric_map: point outside partition");
  return at_mu.element(q).forward(xref);
}

namespace {

CurveParam read_curve(std::istream& is, const std::string& kind) {
  if (kind == "line") {
    double ax, ay, bx, by;
    if (!(is >> ax >> ay >> bx >> by)) throw InputError("partition: bad line");
    return CurveParam::line({ax, ay}, {bx, by});
  }
  if (kind == "arc") {
    double cx, cy, r, t0, t1;
    if (!(is >> cx >> cy >> r >> t0 >> t1)) throw InputError("partition: bad arc");
    return CurveParam::arc({cx, cy}, r, t0, t1);
  }
  if (kind == "curve" || kind == "polyline") {
    int n;
    if (!(is >> n) || n < 2) throw InputError("partition: bad point count");
    MatrixX2d pts(n, 2);
    for (int i = 0; i < n; ++i)
      if (!(is >> pts(i, 0) >> pts(i, 1)))
        throw InputError("partition: bad point table");
    return kind == "curve" ? CurveParam::from_points(std::move(pts))
                           : CurveParam::polyline(std::move(pts));
  }
  throw InputError("partition: unknown edge kind '" + kind + "'");
}

}  // namespace

void Partition::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw InputError("Partition::save: cannot open " + path);
  os << "# regrom partition\n";
  if (size() == 1 && elems_[0]->periodic_theta()) {
    const auto& pm = dynamic_cast<const PolarAnnulusMap&>(*elems_[0]);
    os << "polar " << std::setprecision(17) << pm.chart().inner_radius() << " "
       << pm.chart().outer_radius() << "\n";
    return;
  }
  os << "ndd " << size() << "\n";
  for (int q = 0; q < size(); ++q) {
    const auto& gh = dynamic_cast<const GordonHallMap&>(*elems_[q]);
    os << "element " << q + 1 << "\n";
    os << "corners";
    for (const Vector2d& c : gh.corners())
      os << " " << std::setprecision(17) << c[0] << " " << c[1];
    os << "\n";
    for (int l = 1; l <= 4; ++l) {
      os << "edge " << l << " ";
      gh.edge(l).write(os);
    }
  }
  auto table = [&os](const char* name, const MatrixXi& t) {
    os << name << "\n";
    for (int l = 0; l < 4; ++l) {
      for (int q = 0; q < t.cols(); ++q) os << (q ? " " : "") << t(l, q);
      os << "\n";
    }
  };
  table("qext", qext_);
  table("ell_ext", ell_ext_);
  table("orif", orif_);
}

Partition Partition::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("Partition::load: cannot open " + path);
  std::string tok;
  while (is >> tok) {
    if (tok[0] == '#') {
      std::string rest;
      std::getline(is, rest);
      continue;
    }
    break;
  }
  if (tok == "polar") {
    double r, R;
    if (!(is >> r >> R)) throw InputError("partition: bad polar line");
    return annulus(r, R);
  }
  if (tok != "ndd") throw InputError("partition: expected 'ndd' or 'polar'");
  int ndd;
  if (!(is >> ndd) || ndd < 1) throw InputError("partition: bad ndd");
  std::vector<std::shared_ptr<const ElementMap>> elems(ndd);
  for (int q = 0; q < ndd; ++q) {
    std::string kw;
    int idx;
    if (!(is >> kw >> idx) || kw != "element" || idx != q + 1)
      throw InputError("partition: expected element " + std::to_string(q + 1));
    if (!(is >> kw) || kw != "corners") throw InputError("partition: corners");
    double c[8];
    for (double& v : c)
      if (!(is >> v)) throw InputError("partition: bad corners");
    std::array<CurveParam, 5> edges = {CurveParam::line({0, 0}, {0, 1}),
                                       CurveParam::line({0, 0}, {0, 1}),
                                       CurveParam::line({0, 0}, {0, 1}),
                                       CurveParam::line({0, 0}, {0, 1}),
                                       CurveParam::line({0, 0}, {0, 1})};
    for (int e = 1; e <= 4; ++e) {
      std::string kind;
      int l;
      if (!(is >> kw >> l >> kind) || kw != "edge" || l != e)
        throw InputError("partition: expected edge " + std::to_string(e));
      edges[e] = read_curve(is, kind);
    }
    elems[q] = std::make_shared<GordonHallMap>(edges[1], edges[2], edges[3],
                                               edges[4]);
  }
  auto read_table = [&is](const char* name) {
    std::string kw;
    if (!(is >> kw) || kw != name)
      throw InputError(std::string("partition: expected table ") + name);
    return kw;
  };
  MatrixXi qext(4, ndd), ell(4, ndd), orif(4, ndd);
  read_table("qext");
  for (int l = 0; l < 4; ++l)
    for (int q = 0; q < ndd; ++q)
      if (!(is >> qext(l, q))) throw InputError("partition: bad qext");
  read_table("ell_ext");
  for (int l = 0; l < 4; ++l)
    for (int q = 0; q < ndd; ++q)
      if (!(is >> ell(l, q))) throw InputError("partition: bad ell_ext");
  read_table("orif");
  for (int l = 0; l < 4; ++l)
    for (int q = 0; q < ndd; ++q)
      if (!(is >> orif(l, q))) throw InputError("partition: bad orif");
  return Partition(std::move(elems), std::move(qext), std::move(ell),
                   std::move(orif));
}

}  // namespace regrom
