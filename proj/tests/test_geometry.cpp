#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "regrom/geometry.hpp"
#include "regrom/synthetic.hpp"

using namespace regrom;

TEST_CASE("polar forward hits the documented points") {
  PolarChart chart(0.2, 1.0);
  Vector2d p = chart.forward({0.0, 0.0});
  CHECK(p[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.0).epsilon(1e-14));

  p = chart.forward({1.0, 0.25});
  CHECK(std::abs(p[0]) < 1e-14);
  CHECK(p[1] == doctest::Approx(1.0).epsilon(1e-14));

  p = chart.forward({0.5, 0.5});
  CHECK(p[0] == doctest::Approx(-0.6).epsilon(1e-14));
  CHECK(std::abs(p[1]) < 1e-12);
}

TEST_CASE("polar forward rejects rho outside [0,1]") {
  PolarChart chart(0.2, 1.0);
  CHECK_THROWS_AS(chart.forward({1.2, 0.0}), DomainError);
  CHECK_THROWS_AS(chart.forward({-0.1, 0.0}), DomainError);
}

TEST_CASE("polar inverse: documented points and round trips") {
  PolarChart chart(0.2, 1.0);
  Vector2d x = chart.inverse({0.2, 0.0});
  CHECK(x[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(0.0).epsilon(1e-14));

  x = chart.inverse({0.0, 1.0});
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(0.25).epsilon(1e-14));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  for (int i = 0; i < 100; ++i) {
    double th = unif(rng);
    Vector2d p = 0.6 * Vector2d(std::cos(2 * M_PI * th), std::sin(2 * M_PI * th));
    Vector2d rt = chart.forward(chart.inverse(p));
    CHECK((rt - p).norm() <= 1e-12);
  }

  // theta normalization lands in (-1/2, 1/2]
  Vector2d neg = chart.inverse({0.5, -1e-9});
  CHECK(neg[1] < 0.0);
  CHECK(neg[1] > -0.5);
  CHECK_THROWS_AS(chart.inverse({1.5, 0.0}), DomainError);
  CHECK_THROWS_AS(chart.inverse({0.05, 0.0}), DomainError);
}

TEST_CASE("curve endpoints and derivatives") {
  auto arc = CurveParam::arc({0, 0}, 2.0, 0.0, M_PI / 2);
  CHECK((arc.eval(0.0) - Vector2d(2, 0)).norm() < 1e-15);
  CHECK((arc.eval(1.0) - Vector2d(0, 2)).norm() < 1e-15);
  // reversal flips the traversal
  auto rev = arc.reversed();
  CHECK((rev.eval(0.0) - Vector2d(0, 2)).norm() < 1e-15);
  CHECK((rev.eval(1.0) - Vector2d(2, 0)).norm() < 1e-15);
  CHECK((rev.deriv(0.5) + arc.deriv(0.5)).norm() < 1e-12);

  // sampled curves reproduce smooth functions
  auto f = [](double t) { return Vector2d(t, std::sin(t)); };
  auto smp = CurveParam::sampled(f, 12);
  for (double t : {0.1, 0.37, 0.62, 0.95})
    CHECK((smp.eval(t) - f(t)).norm() < 1e-12);
}

TEST_CASE("gordon-hall: straight unit square is the identity") {
  GordonHallMap gh(CurveParam::line({0, 0}, {0, 1}), CurveParam::line({1, 0}, {1, 1}),
                   CurveParam::line({0, 0}, {1, 0}), CurveParam::line({0, 1}, {1, 1}));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    Vector2d X(unif(rng), unif(rng));
    CHECK((gh.forward(X) - X).norm() < 1e-15);
  }
}

TEST_CASE("gordon-hall: straight parallelogram edges give the affine map") {
  Vector2d c00(0.2, -0.1), c10(1.4, 0.3);
  Vector2d d(0.25, 1.1);
  Vector2d c01 = c00 + d, c11 = c10 + d;
  GordonHallMap gh(CurveParam::line(c00, c01), CurveParam::line(c10, c11),
                   CurveParam::line(c00, c10), CurveParam::line(c01, c11));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    Vector2d X(unif(rng), unif(rng));
    Vector2d expected = c00 + X[0] * (c10 - c00) + X[1] * d;
    CHECK((gh.forward(X) - expected).norm() < 1e-14);
  }
}

TEST_CASE("gordon-hall: corner mismatch raises at construction") {
  CHECK_THROWS_AS(GordonHallMap(CurveParam::line({0, 0}, {0, 1}),
                                CurveParam::line({1.001, 0}, {1, 1}),
                                CurveParam::line({0, 0}, {1, 0}),
                                CurveParam::line({0, 1}, {1, 1})),
                  ConstructionError);
}

namespace {

// quarter-annulus element between radii 1 and 2, first quadrant
GordonHallMap quarter_annulus() {
  return GordonHallMap(
      CurveParam::line({1, 0}, {2, 0}),                    // west: theta=0 spoke
      CurveParam::line({0, 1}, {0, 2}),                    // east: theta=pi/2 spoke
      CurveParam::arc({0, 0}, 1.0, 0.0, M_PI / 2),         // south: inner arc
      CurveParam::arc({0, 0}, 2.0, 0.0, M_PI / 2));        // north: outer arc
}

}  // namespace

TEST_CASE("gordon-hall: curved edges are reproduced exactly") {
  GordonHallMap gh = quarter_annulus();
  // edge midpoints of the arc edges lie on the respective circles
  Vector2d inner_mid = gh.forward({0.5, 0.0});
  Vector2d outer_mid = gh.forward({0.5, 1.0});
  CHECK(std::abs(inner_mid.norm() - 1.0) < 1e-12);
  CHECK(std::abs(outer_mid.norm() - 2.0) < 1e-12);
  // arc parameterization oracle at the midpoint parameter
  Vector2d inner_expected(std::cos(M_PI / 4), std::sin(M_PI / 4));
  CHECK((inner_mid - inner_expected).norm() < 1e-12);

  // edge reproduction at 50 sample points on every facet
  for (int l = 1; l <= 4; ++l)
    for (int s = 0; s <= 50; ++s) {
      double t = s / 50.0;
      CHECK((gh.forward(facet_point(l, t)) - gh.edge(l).eval(t)).norm() <= 1e-12);
    }
}

TEST_CASE("gordon-hall inverse: identity, affine, and curved round trips") {
  GordonHallMap identity(
      CurveParam::line({0, 0}, {0, 1}), CurveParam::line({1, 0}, {1, 1}),
      CurveParam::line({0, 0}, {1, 0}), CurveParam::line({0, 1}, {1, 1}));
  CHECK((identity.inverse({0.3, 0.7}) - Vector2d(0.3, 0.7)).norm() < 1e-12);

  Vector2d c00(0.2, -0.1), c10(1.4, 0.3), d(0.25, 1.1);
  GordonHallMap affine(CurveParam::line(c00, c00 + d),
                       CurveParam::line(c10, c10 + d),
                       CurveParam::line(c00, c10),
                       CurveParam::line(c00 + d, c10 + d));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    Vector2d X(unif(rng), unif(rng));
    Vector2d p = affine.forward(X);
    CHECK((affine.inverse(p) - X).norm() < 1e-12);
  }

  GordonHallMap curved = quarter_annulus();
  for (int i = 0; i < 100; ++i) {
    Vector2d X(unif(rng), unif(rng));
    Vector2d p = curved.forward(X);
    CHECK((curved.forward(curved.inverse(p)) - p).norm() <= 1e-10);
  }
}

TEST_CASE("partition: fig tables validate, N_int = 5, round trips hold") {
  Partition part = make_fig_partition();
  CHECK(part.size() == 4);
  CHECK(part.interior_facets() == 5);

  // round trip on every element
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int q = 0; q < part.size(); ++q)
    for (int i = 0; i < 100; ++i) {
      Vector2d X(unif(rng), unif(rng));
      Vector2d p = part.element(q).forward(X);
      Vector2d Xr = part.element(q).inverse(p);
      CHECK((Xr - X).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
}

TEST_CASE("partition: broken table symmetry is rejected") {
  Partition good = make_fig_partition();
  MatrixXi qext = good.qext(), ell = good.ell_ext(), orif = good.orif();
  std::vector<std::shared_ptr<const ElementMap>> elems;
  for (int q = 0; q < good.size(); ++q) elems.push_back(good.element_ptr(q));
  qext(1, 0) = 3;  // q1's east neighbor lied about
  CHECK_THROWS_AS(Partition(elems, qext, ell, orif), ConstructionError);
}

TEST_CASE("partition: interface two-sided evaluation agrees") {
  Partition part = make_fig_partition();
  for (const auto& f : part.facets()) {
    for (int s = 0; s <= 20; ++s) {
      double t = s / 20.0;
      double tp = f.orif ? t : 1.0 - t;
      Vector2d a = part.element(f.q).forward(facet_point(f.l, t));
      Vector2d b = part.element(f.qp).forward(facet_point(f.lp, tp));
      CHECK((a - b).norm() <= 1e-10);
    }
  }
}

TEST_CASE("partition file round trip") {
  Partition part = make_fig_partition();
  std::string path = "/tmp/regrom_test_partition.txt";
  part.save(path);
  Partition loaded = Partition::load(path);
  CHECK(loaded.size() == part.size());
  CHECK(loaded.interior_facets() == part.interior_facets());
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int q = 0; q < part.size(); ++q)
    for (int i = 0; i < 10; ++i) {
      Vector2d X(unif(rng), unif(rng));
      CHECK((loaded.element(q).forward(X) - part.element(q).forward(X)).norm() <
            1e-12);
    }

  Partition ann = Partition::annulus(0.2, 1.0);
  ann.save(path);
  Partition ann2 = Partition::load(path);
  CHECK(ann2.element(0).periodic_theta());
}

TEST_CASE("geometric map: identity, scaling, and interface consistency") {
  Partition base = make_fig_partition();
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // mu = mubar: identity
  for (int i = 0; i < 10; ++i) {
    Vector2d X(unif(rng), unif(rng));
    Vector2d p = base.element(1).forward(X);
    CHECK((geometric_map(base, base, p) - p).norm() < 1e-9);
  }

  // affine-scaled partition: p -> 2p
  Partition scaled = make_fig_partition_scaled(2.0);
  for (int i = 0; i < 10; ++i) {
    Vector2d X(unif(rng), unif(rng));
    Vector2d p = base.element(2).forward(X);
    CHECK((geometric_map(scaled, base, p) - 2.0 * p).norm() < 1e-9);
  }

  // interface points map identically from both adjacent elements
  for (const auto& f : base.facets()) {
    for (int s = 1; s < 20; ++s) {
      double t = s / 20.0;
      double tp = f.orif ? t : 1.0 - t;
      Vector2d via_q =
          scaled.element(f.q).forward(facet_point(f.l, t));
      Vector2d via_qp =
          scaled.element(f.qp).forward(facet_point(f.lp, tp));
      CHECK((via_q - via_qp).norm() <= 1e-10);
    }
  }
}

TEST_CASE("convex combinations of distinct boundary-preserving maps leave "
          "the unit circle") {
  // two maps of the unit disk preserving |x| = 1: angle-dependent rotations
  auto rotate = [](const Vector2d& x, double alpha) {
    double c = std::cos(alpha), s = std::sin(alpha);
    return Vector2d(c * x[0] - s * x[1], s * x[0] + c * x[1]);
  };
  auto phi1 = [&](const Vector2d& x) -> Vector2d {
    return rotate(x, 0.3 + 0.2 * std::sin(std::atan2(x[1], x[0]))) - x;
  };
  auto phi2 = [&](const Vector2d& x) -> Vector2d {
    return rotate(x, -0.4 + 0.1 * std::cos(2 * std::atan2(x[1], x[0]))) - x;
  };
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(-M_PI, M_PI);
  for (int i = 0; i < 100; ++i) {
    double th = unif(rng);
    Vector2d x(std::cos(th), std::sin(th));
    Vector2d p1 = phi1(x), p2 = phi2(x);
    for (int ti = 1; ti <= 9; ++ti) {
      double t = 0.1 * ti;
      Vector2d Phit = x + (1 - t) * p1 + t * p2;
      double expected = 1.0 + (t * t - t) * (p2 - p1).squaredNorm();
      CHECK(std::abs(Phit.squaredNorm() - expected) <= 1e-12);
    }
  }
}
