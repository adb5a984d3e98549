#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "regrom/reduction.hpp"
#include "regrom/synthetic.hpp"

using namespace regrom;

TEST_CASE("square front: symmetry, parameter degeneracy, alignment rank") {
  ManifoldSpec spec = default_manifold_spec(ManifoldKind::SquareFront);
  spec.n_train = 20;
  spec.n_test = 2;
  spec.seed = 5;
  SyntheticData data = generate(spec);

  // c(mu1 = 0.5) = 0.5: antisymmetric about x1 = 1/2 on the symmetric lattice
  VectorXd mu(1);
  mu << 0.5;
  VectorXd u = evaluate_field(ManifoldKind::SquareFront, mu, data.mesh.nodes());
  for (int j = 0; j < data.mesh.n_nodes(); ++j) {
    Vector2d x = data.mesh.nodes().row(j).transpose();
    Vector2d mirrored(1.0 - x[0], x[1]);
    // the lattice contains the mirrored node; find it cheaply
    VectorXd um = evaluate_field(ManifoldKind::SquareFront, mu,
                                 mirrored.transpose());
    CHECK(std::abs(u[j] + um[0]) <= 1e-12);
  }

  // equal front positions give identical snapshots
  VectorXd mu_a(1), mu_b(1);
  mu_a << 0.25;
  mu_b << 0.25;
  VectorXd ua = evaluate_field(ManifoldKind::SquareFront, mu_a, data.mesh.nodes());
  VectorXd ub = evaluate_field(ManifoldKind::SquareFront, mu_b, data.mesh.nodes());
  CHECK((ua - ub).cwiseAbs().maxCoeff() == 0.0);

  // unregistered POD needs > 5 modes for 99.9% of the energy
  InnerProductMatrix X = assemble_inner_product(data.mesh, NormKind::L2);
  PODBasis unreg = pod(data.train_snapshots, X, 0.0);
  double total = unreg.eigenvalues.sum();
  double cum = 0.0;
  int needed = 0;
  for (int i = 0; i < unreg.eigenvalues.size(); ++i) {
    cum += unreg.eigenvalues[i];
    ++needed;
    if (cum >= 0.999 * total) break;
  }
  CHECK(needed > 5);

  // aligning each snapshot by its own front position makes the manifold
  // rank 1: evaluate u_k at x + (c_k - 1/2) e_1
  MatrixXd aligned(data.mesh.n_nodes(), spec.n_train);
  for (int k = 0; k < spec.n_train; ++k) {
    double c = 0.3 + 0.4 * data.train_params(k, 0);
    for (int j = 0; j < data.mesh.n_nodes(); ++j) {
      Vector2d x = data.mesh.nodes().row(j).transpose();
      Vector2d shifted(x[0] + (c - 0.5), x[1]);
      aligned(j, k) = square_front_value(data.train_params.row(k).transpose(),
                                         shifted);
    }
  }
  PODBasis al = pod(aligned, X, 0.0);
  CHECK(al.eigenvalues[1] <= 1e-10 * al.eigenvalues[0]);
}

TEST_CASE("annulus gaussian: peak location, equivariance, bound") {
  ManifoldSpec spec = default_manifold_spec(ManifoldKind::AnnulusGaussian);
  spec.n_train = 4;
  spec.n_test = 2;
  spec.seed = 6;
  SyntheticData data = generate(spec);

  VectorXd mu(2);
  mu << 0.0, 0.0;
  VectorXd u = evaluate_field(ManifoldKind::AnnulusGaussian, mu, data.mesh.nodes());
  int peak = 0;
  u.maxCoeff(&peak);
  Vector2d xc(0.5, 0.0);
  // the peak node is the node closest to the center
  double dist_peak = (data.mesh.nodes().row(peak).transpose() - xc).norm();
  for (int j = 0; j < data.mesh.n_nodes(); ++j)
    CHECK(dist_peak <=
          (data.mesh.nodes().row(j).transpose() - xc).norm() + 1e-12);

  // rotational equivariance: mu1 and mu1 + 1/2 differ by the 180-degree
  // node permutation
  VectorXd mu1(2), mu2(2);
  mu1 << 0.13, 0.4;
  mu2 << 0.63, 0.4;
  VectorXd ua = evaluate_field(ManifoldKind::AnnulusGaussian, mu1, data.mesh.nodes());
  VectorXd ub = evaluate_field(ManifoldKind::AnnulusGaussian, mu2, data.mesh.nodes());
  // pair each node with its antipode by coordinate search
  for (int j = 0; j < data.mesh.n_nodes(); j += 11) {
    Vector2d anti = -data.mesh.nodes().row(j).transpose();
    int match = -1;
    for (int i = 0; i < data.mesh.n_nodes(); ++i)
      if ((data.mesh.nodes().row(i).transpose() - anti).norm() < 1e-10) {
        match = i;
        break;
      }
    REQUIRE(match >= 0);
    CHECK(std::abs(ua[j] - ub[match]) <= 1e-10);
  }

  CHECK(data.train_snapshots.maxCoeff() <= 1.0 + 1e-15);
  VectorXd at_center =
      evaluate_field(ManifoldKind::AnnulusGaussian, mu, xc.transpose());
  CHECK(at_center[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("partitioned front: horizontal at zero rotation, bounded, spans "
          "elements") {
  ManifoldSpec spec = default_manifold_spec(ManifoldKind::PartitionedFront);
  spec.n_train = 6;
  spec.n_test = 2;
  spec.seed = 7;
  SyntheticData data = generate(spec);

  CHECK(data.partition.size() == 4);
  CHECK(data.partition.interior_facets() == 5);

  // rotation parameter at the box midpoint: front horizontal, field depends
  // on x2 only
  VectorXd mu(2);
  mu << 0.5, 0.3;
  VectorXd u = evaluate_field(ManifoldKind::PartitionedFront, mu, data.mesh.nodes());
  for (int j = 0; j < data.mesh.n_nodes(); j += 3) {
    Vector2d probe(0.123, data.mesh.nodes()(j, 1));
    VectorXd v = evaluate_field(ManifoldKind::PartitionedFront, mu,
                                probe.transpose());
    CHECK(u[j] == doctest::Approx(v[0]).epsilon(1e-12));
  }

  // values in [0,1]
  CHECK(data.train_snapshots.minCoeff() >= 0.0);
  CHECK(data.train_snapshots.maxCoeff() <= 1.0);

  // the front crosses more than one partition element for generic parameters
  VectorXd mu2(2);
  mu2 << 0.9, 0.5;
  VectorXd u2 = evaluate_field(ManifoldKind::PartitionedFront, mu2,
                               data.mesh.nodes());
  std::array<bool, 4> sees_front = {false, false, false, false};
  for (int j = 0; j < data.mesh.n_nodes(); ++j)
    if (u2[j] > 0.2 && u2[j] < 0.8) sees_front[data.mesh.labels()[j]] = true;
  int crossed = 0;
  for (bool b : sees_front)
    if (b) ++crossed;
  CHECK(crossed >= 2);
}

TEST_CASE("generators are deterministic given the spec") {
  ManifoldSpec spec = default_manifold_spec(ManifoldKind::PartitionedFront);
  spec.n_train = 5;
  spec.n_test = 3;
  spec.seed = 42;
  SyntheticData a = generate(spec);
  SyntheticData b = generate(spec);
  CHECK((a.train_params - b.train_params).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.train_snapshots - b.train_snapshots).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.test_snapshots - b.test_snapshots).cwiseAbs().maxCoeff() == 0.0);
  // snapshots are finite and respect the analytic bound
  CHECK(a.train_snapshots.allFinite());
}

TEST_CASE("manifold spec validation") {
  ManifoldSpec spec = default_manifold_spec(ManifoldKind::SquareFront);
  spec.n_train = 0;
  CHECK_THROWS_AS(spec.validate(), InputError);
  spec = default_manifold_spec(ManifoldKind::SquareFront);
  spec.param_box(0, 1) = spec.param_box(0, 0);
  CHECK_THROWS_AS(spec.validate(), InputError);
}
