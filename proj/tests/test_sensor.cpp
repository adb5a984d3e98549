#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "regrom/femesh.hpp"
#include "regrom/sensor.hpp"
#include "regrom/synthetic.hpp"

using namespace regrom;

namespace {

std::shared_ptr<SensorGrid> small_grid(bool periodic = false) {
  return std::make_shared<SensorGrid>(3, 10, periodic);
}

}  // namespace

TEST_CASE("grid fit: constant snapshot gives a constant sensor") {
  ReferenceMesh mesh = make_square_mesh(6, 2);
  VectorXd u = VectorXd::Constant(mesh.n_nodes(), 3.25);
  SensorField s = sensor_from_grid_fit(mesh, u, 1e-5, small_grid(), 1);
  CHECK((s.values().array() - 3.25).abs().maxCoeff() < 1e-8);
}

TEST_CASE("grid fit: huge xi_s flattens to the element data mean") {
  ReferenceMesh mesh = make_square_mesh(6, 2);
  VectorXd u(mesh.n_nodes());
  for (int j = 0; j < mesh.n_nodes(); ++j)
    u[j] = std::sin(3.0 * mesh.nodes()(j, 0)) + mesh.nodes()(j, 1);
  SensorField s = sensor_from_grid_fit(mesh, u, 1e8, small_grid(), 1);
  double mean = u.mean();
  for (int g = 0; g < s.values().rows(); g += 17)
    CHECK(s.values()(g, 0) == doctest::Approx(mean).epsilon(1e-4));
}

TEST_CASE("grid fit: linear field is recovered to 1e-3") {
  ReferenceMesh mesh = make_square_mesh(10, 2);
  VectorXd u(mesh.n_nodes());
  for (int j = 0; j < mesh.n_nodes(); ++j) u[j] = mesh.nodes()(j, 0);
  SensorField s = sensor_from_grid_fit(mesh, u, 1e-8, small_grid(), 1);
  double max_err = 0.0;
  for (int g = 0; g < s.grid().n_nodes(); ++g) {
    Vector2d x = s.grid().node_coord(g);
    max_err = std::max(max_err, std::abs(s.values()(g, 0) - x[0]));
  }
  CHECK(max_err <= 1e-3);
}

TEST_CASE("grid fit rejects nonpositive xi_s") {
  ReferenceMesh mesh = make_square_mesh(3, 1);
  VectorXd u = VectorXd::Zero(mesh.n_nodes());
  CHECK_THROWS_AS(sensor_from_grid_fit(mesh, u, 0.0, small_grid(), 1), InputError);
}

TEST_CASE("physical smoothing: xi_s = 0 returns the P1-interpolated raw field") {
  ReferenceMesh mesh = make_square_mesh(8, 3);
  VectorXd u(mesh.n_nodes());
  for (int j = 0; j < mesh.n_nodes(); ++j)
    u[j] = 2.0 * mesh.nodes()(j, 0) - mesh.nodes()(j, 1);
  SensorField s = sensor_from_physical_smoothing(mesh, u, 0.0,
                                                 Partition::unit_square(),
                                                 small_grid());
  for (int g = 0; g < s.grid().n_nodes(); g += 13) {
    Vector2d x = s.grid().node_coord(g);
    CHECK(s.values()(g, 0) == doctest::Approx(2.0 * x[0] - x[1]).epsilon(1e-10));
  }
}

TEST_CASE("physical smoothing: constant snapshot stays constant") {
  ReferenceMesh mesh = make_square_mesh(6, 2);
  VectorXd u = VectorXd::Constant(mesh.n_nodes(), -0.7);
  SensorField s = sensor_from_physical_smoothing(mesh, u, 1e-3,
                                                 Partition::unit_square(),
                                                 small_grid());
  CHECK((s.values().array() + 0.7).abs().maxCoeff() < 1e-10);
}

TEST_CASE("physical smoothing reduces the gradient energy of rough data") {
  ReferenceMesh mesh = make_square_mesh(12, 1);  // P1 mesh = its own vertex view
  InnerProductMatrix H1 = assemble_inner_product(mesh, NormKind::H1);
  InnerProductMatrix L2 = assemble_inner_product(mesh, NormKind::L2);
  Eigen::SparseMatrix<double> K = H1.X - L2.X;
  std::mt19937_64 rng(97);
  std::normal_distribution<double> gauss;
  for (int t = 0; t < 5; ++t) {
    VectorXd u(mesh.n_nodes());
    for (int j = 0; j < u.size(); ++j) u[j] = gauss(rng);
    VectorXd sm = p1_smooth(mesh, u, 1e-2);
    double rough = u.dot(K * u);
    double smooth = sm.dot(K * sm);
    CHECK(smooth <= rough + 1e-12);
  }
}

TEST_CASE("the two smoothing approaches agree on smooth fields") {
  ReferenceMesh mesh = make_square_mesh(12, 2);
  VectorXd u(mesh.n_nodes());
  for (int j = 0; j < mesh.n_nodes(); ++j) {
    Vector2d x = mesh.nodes().row(j).transpose();
    u[j] = std::sin(2.0 * x[0]) * std::cos(1.5 * x[1]) + 0.3 * x[0];
  }
  auto grid = small_grid();
  SensorField a = sensor_from_grid_fit(mesh, u, 1e-6, grid, 1);
  SensorField b = sensor_from_physical_smoothing(mesh, u, 1e-6,
                                                 Partition::unit_square(), grid);
  double num = (a.values() - b.values()).norm();
  double den = b.values().norm();
  CHECK(num / den <= 0.05);
}

TEST_CASE("periodic extension: wrap arithmetic and bitwise periodicity") {
  auto grid = small_grid(true);
  MatrixXd vals(grid->n_nodes(), 1);
  for (int g = 0; g < grid->n_nodes(); ++g) {
    Vector2d x = grid->node_coord(g);  // y in [0,1), theta = y - 1/2
    vals(g, 0) = std::sin(2.0 * M_PI * (x[1] - 0.5)) + 0.25 * x[0];
  }
  SensorField s(grid, vals);

  // x2 = 0.6 reads the sensor at -0.4; x2 = -0.7 reads at 0.3
  CHECK(periodic_extend(s, {0.5, 0.6}) ==
        doctest::Approx(s.eval(0, {0.5, -0.4})).epsilon(1e-14));
  CHECK(periodic_extend(s, {0.5, -0.7}) ==
        doctest::Approx(s.eval(0, {0.5, 0.3})).epsilon(1e-14));
  // identity on the fundamental domain
  for (double x2 : {-0.499, -0.25, 0.0, 0.25, 0.499})
    CHECK(periodic_extend(s, {0.3, x2}) == s.eval(0, {0.3, x2}));
  // bitwise 1-periodicity at dyadic points
  for (int k = -31; k <= 31; k += 3) {
    double x2 = k / 64.0;
    CHECK(periodic_extend(s, {0.7, x2}) == periodic_extend(s, {0.7, x2 + 1.0}));
  }
  CHECK_THROWS_AS(periodic_extend(s, {1.5, 0.0}), DomainError);
}

TEST_CASE("sensor evaluation: nodes, linear gradients, FD gradients") {
  auto grid = small_grid();
  MatrixXd vals(grid->n_nodes(), 1);
  for (int g = 0; g < grid->n_nodes(); ++g) {
    Vector2d x = grid->node_coord(g);
    vals(g, 0) = 0.75 * x[0] - 1.25 * x[1] + 0.5;
  }
  SensorField lin(grid, vals);
  // grid nodes return stored values
  for (int g = 0; g < grid->n_nodes(); g += 29)
    CHECK(lin.eval(0, grid->node_coord(g)) ==
          doctest::Approx(vals(g, 0)).epsilon(1e-13));
  // gradient of a linear field is its slope
  Vector2d gr = lin.gradient(0, {0.37, 0.64});
  CHECK(gr[0] == doctest::Approx(0.75).epsilon(1e-10));
  CHECK(gr[1] == doctest::Approx(-1.25).epsilon(1e-10));

  // FD oracle on a smooth field
  for (int g = 0; g < grid->n_nodes(); ++g) {
    Vector2d x = grid->node_coord(g);
    vals(g, 0) = std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]);
  }
  SensorField smooth(grid, vals);
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  const double h = 1e-6;
  for (int t = 0; t < 30; ++t) {
    Vector2d x(unif(rng), unif(rng));
    Vector2d g2 = smooth.gradient(0, x);
    double fdx =
        (smooth.eval(0, {x[0] + h, x[1]}) - smooth.eval(0, {x[0] - h, x[1]})) /
        (2 * h);
    double fdy =
        (smooth.eval(0, {x[0], x[1] + h}) - smooth.eval(0, {x[0], x[1] - h})) /
        (2 * h);
    CHECK(g2[0] == doctest::Approx(fdx).epsilon(1e-5));
    CHECK(g2[1] == doctest::Approx(fdy).epsilon(1e-5));
  }
}

TEST_CASE("rescaling: [0,1] range, order preservation, constant guard") {
  ReferenceMesh mesh = make_square_mesh(6, 2);
  VectorXd u(mesh.n_nodes());
  for (int j = 0; j < mesh.n_nodes(); ++j)
    u[j] = std::exp(-5.0 * (mesh.nodes().row(j).transpose() - Vector2d(0.3, 0.6))
                              .squaredNorm());
  SensorField s = sensor_from_grid_fit(mesh, u, 1e-6, small_grid(), 1);
  int argmax_before, argmin_before;
  s.values().col(0).maxCoeff(&argmax_before);
  s.values().col(0).minCoeff(&argmin_before);
  auto [mn, mx] = s.rescale();
  CHECK(mn < mx);
  CHECK(s.values().minCoeff() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.values().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  int argmax_after, argmin_after;
  s.values().col(0).maxCoeff(&argmax_after);
  s.values().col(0).minCoeff(&argmin_after);
  CHECK(argmax_before == argmax_after);
  CHECK(argmin_before == argmin_after);

  MatrixXd cvals = MatrixXd::Constant(small_grid()->n_nodes(), 1, 4.0);
  SensorField constant(small_grid(), cvals);
  constant.rescale();
  CHECK(constant.values().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("grid fit on the fig partition covers all elements") {
  Partition part = make_fig_partition();
  ReferenceMesh mesh = make_partition_mesh(part, 4, 2);
  VectorXd u(mesh.n_nodes());
  for (int j = 0; j < mesh.n_nodes(); ++j)
    u[j] = partitioned_front_value(Vector2d(0.5, 0.5), mesh.nodes().row(j).transpose());
  auto grid = std::make_shared<SensorGrid>(3, 8, false);
  SensorField s = sensor_from_grid_fit(mesh, u, 1e-5, grid, part.size());
  CHECK(s.n_dd() == 4);
  CHECK(s.values().allFinite());
  // the sensor sees the front somewhere: nontrivial range
  CHECK(s.values().maxCoeff() - s.values().minCoeff() > 0.5);
}

TEST_CASE("sensor cache round trip") {
  ReferenceMesh mesh = make_square_mesh(4, 2);
  VectorXd u(mesh.n_nodes());
  for (int j = 0; j < mesh.n_nodes(); ++j) u[j] = mesh.nodes()(j, 1);
  auto grid = small_grid();
  std::vector<SensorField> sensors;
  sensors.push_back(sensor_from_grid_fit(mesh, u, 1e-5, grid, 1));
  sensors.push_back(sensor_from_grid_fit(mesh, (2.0 * u).eval(), 1e-5, grid, 1));
  std::string path = "/tmp/regrom_test_sensors.bin";
  save_sensors(path, sensors);
  auto loaded = load_sensors(path, grid);
  REQUIRE(loaded.size() == 2);
  for (int i = 0; i < 2; ++i)
    CHECK((loaded[i].values() - sensors[i].values()).cwiseAbs().maxCoeff() == 0.0);
}
