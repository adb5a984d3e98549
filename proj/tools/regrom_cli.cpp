// regrom command-line driver: offline registration + reduction pipeline and
// online prediction on top of the regrom core library.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "regrom/config.hpp"
#include "regrom/reduction.hpp"
#include "regrom/registration.hpp"
#include "regrom/sensor.hpp"
#include "regrom/synthetic.hpp"

namespace fs = std::filesystem;
using namespace regrom;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  int workers = 0;
  uint64_t seed_override = 0;
  bool seed_set = false;
  bool force = false;
};

struct Run {
  Config cfg;
  fs::path out;

  std::string path(const std::string& key) const {
    fs::path p = cfg.get(key);
    if (!fs::exists(p))
      throw InputError("referenced file does not exist: " + p.string());
    return p.string();
  }
};

Run open_run(const CommonArgs& args, bool out_must_exist = false) {
  Run run;
  run.cfg = Config::load(args.config_path);
  std::string out = args.out_override.empty()
                        ? run.cfg.get_or("paths.out", "run")
                        : args.out_override;
  run.out = out;
  if (out_must_exist && !fs::exists(run.out))
    throw InputError("run directory does not exist: " + out);
  fs::create_directories(run.out);
  if (args.seed_set) run.cfg.set("synth.seed", std::to_string(args.seed_override));
  if (args.workers > 0) run.cfg.set("reg.workers", std::to_string(args.workers));
  return run;
}

MatrixXd load_params_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open parameter file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InputError("bad number in " + path + ": '" + cell + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("empty parameter file " + path);
  MatrixXd out(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw InputError("ragged parameter file " + path);
    for (size_t j = 0; j < rows[i].size(); ++j)
      out(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }
  return out;
}

void save_params_csv(const std::string& path, const MatrixXd& params) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open " + path + " for writing");
  for (int i = 0; i < params.rows(); ++i) {
    for (int j = 0; j < params.cols(); ++j)
      os << (j ? "," : "") << fmt(params(i, j));
    os << "\n";
  }
}

ManifoldKind parse_kind(const std::string& s) {
  if (s == "square_front") return ManifoldKind::SquareFront;
  if (s == "annulus_gaussian") return ManifoldKind::AnnulusGaussian;
  if (s == "partitioned_front") return ManifoldKind::PartitionedFront;
  throw InputError("unknown manifold kind '" + s + "'");
}

// assembled inputs shared by register/reduce/predict
struct Problem {
  ReferenceMesh mesh;
  Partition partition;
  std::shared_ptr<SensorGrid> grid;
  DisplacementSpace space;
  RegistrationConfig reg_cfg;
};

RegistrationConfig read_reg_config(const Config& cfg) {
  RegistrationConfig rc;
  rc.xi = cfg.get_double("reg.xi", rc.xi);
  rc.xi_msh = cfg.get_double("reg.xi_msh", rc.xi_msh);
  rc.eps = cfg.get_double("reg.eps", rc.eps);
  rc.c_exp_factor = cfg.get_double("reg.c_exp_factor", rc.c_exp_factor);
  rc.delta = cfg.get_double("reg.delta", rc.delta);
  rc.f_msh_max = cfg.get_double("reg.f_msh_max", rc.f_msh_max);
  rc.tol = cfg.get_double("reg.tol", rc.tol);
  rc.tol_pod = cfg.get_double("reg.tol_pod", rc.tol_pod);
  rc.n_max = cfg.get_int("reg.n_max", rc.n_max);
  rc.quad_order = cfg.get_int("reg.quad_order", rc.quad_order);
  rc.max_iter = cfg.get_int("opt.max_iter", rc.max_iter);
  rc.grad_tol = cfg.get_double("opt.grad_tol", rc.grad_tol);
  rc.penalty_rho = cfg.get_double("opt.penalty_rho", rc.penalty_rho);
  rc.workers = cfg.get_int("reg.workers", 0);
  return rc;
}

Problem load_problem(const Run& run) {
  Problem pb;
  pb.mesh = ReferenceMesh::load(run.path("paths.mesh"));
  pb.partition = Partition::load(run.path("paths.partition"));
  pb.mesh.compute_reference_coordinates(pb.partition);
  bool polar = pb.partition.size() == 1 && pb.partition.element(0).periodic_theta();
  pb.grid = std::make_shared<SensorGrid>(run.cfg.get_int("sensor.grid_degree", 3),
                                         run.cfg.get_int("sensor.grid_cells", 12),
                                         polar);
  std::string kind = run.cfg.get_or("space.kind", polar ? "polar" : "dd");
  if (kind == "polar") {
    pb.space = build_polar_space(run.cfg.get_int("space.j_r", 8),
                                 run.cfg.get_int("space.j_f", 5));
  } else if (kind == "rect") {
    pb.space = build_rect_space(run.cfg.get_int("space.j", 8));
  } else if (kind == "dd") {
    pb.space = build_dd_space(pb.partition, run.cfg.get_int("space.j", 8),
                              run.cfg.get_bool("space.modified_norm", false));
  } else {
    throw InputError("unknown space.kind '" + kind + "'");
  }
  pb.reg_cfg = read_reg_config(run.cfg);
  return pb;
}

std::vector<SensorField> build_sensors(const Run& run, const Problem& pb,
                                       const MatrixXd& snaps) {
  std::string approach = run.cfg.get_or("sensor.approach", "grid_fit");
  double xi_s = run.cfg.get_double("sensor.xi_s", 1e-5);
  bool rescale = run.cfg.get_bool("sensor.rescale", true);
  std::vector<SensorField> out;
  out.reserve(snaps.cols());
  for (int k = 0; k < snaps.cols(); ++k) {
    SensorField s =
        approach == "grid_fit"
            ? sensor_from_grid_fit(pb.mesh, snaps.col(k), xi_s, pb.grid,
                                   pb.partition.size())
            : sensor_from_physical_smoothing(pb.mesh, snaps.col(k), xi_s,
                                             pb.partition, pb.grid);
    if (rescale) s.rescale();
    out.push_back(std::move(s));
  }
  return out;
}

int pick_template_seed(const MatrixXd& params, const Config& cfg) {
  // template seed = sensor of the training parameter closest to mu_bar
  VectorXd mubar(params.cols());
  for (int p = 0; p < params.cols(); ++p) {
    std::string key = "reg.mubar" + std::to_string(p + 1);
    mubar[p] = cfg.get_double(
        key, 0.5 * (params.col(p).minCoeff() + params.col(p).maxCoeff()));
  }
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < params.rows(); ++k) {
    double d = (params.row(k).transpose() - mubar).norm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

int cmd_synth(const CommonArgs& args) {
  Run run = open_run(args);
  ManifoldSpec spec = default_manifold_spec(parse_kind(run.cfg.get("synth.kind")));
  spec.n_train = run.cfg.get_int("synth.n_train", spec.n_train);
  spec.n_test = run.cfg.get_int("synth.n_test", spec.n_test);
  spec.seed = run.cfg.get_u64("synth.seed", spec.seed);
  spec.mesh_cells = run.cfg.get_int("synth.mesh_cells", spec.mesh_cells);
  spec.degree = run.cfg.get_int("synth.degree", spec.degree);
  SyntheticData data = generate(spec);
  data.mesh.save((run.out / "mesh.txt").string());
  data.partition.save((run.out / "partition.txt").string());
  save_snapshots((run.out / "train_snapshots.txt").string(), data.train_snapshots);
  save_snapshots((run.out / "test_snapshots.txt").string(), data.test_snapshots);
  save_params_csv((run.out / "train_params.csv").string(), data.train_params);
  save_params_csv((run.out / "test_params.csv").string(), data.test_params);
  std::cout << "synth: wrote mesh (" << data.mesh.n_nodes() << " nodes, "
            << data.mesh.n_elements() << " elements), " << spec.n_train
            << " train + " << spec.n_test << " test snapshots to " << run.out
            << "\n";
  return kExitOk;
}

int cmd_register(const CommonArgs& args) {
  Run run = open_run(args);
  Problem pb = load_problem(run);
  MatrixXd snaps = load_snapshots(run.path("paths.train_snapshots"));
  MatrixXd params = load_params_csv(run.path("paths.train_params"));
  if (snaps.rows() != pb.mesh.n_nodes())
    throw InputError("snapshot rows do not match the mesh node count");
  if (snaps.cols() != params.rows())
    throw InputError("snapshot columns do not match the parameter rows");

  std::vector<SensorField> sensors = build_sensors(run, pb, snaps);
  save_sensors((run.out / "sensors.bin").string(), sensors);

  TemplateSpace init({sensors[pick_template_seed(params, run.cfg)]});
  RegistrationProblem problem(pb.mesh, pb.partition, pb.space, pb.reg_cfg);
  GreedyResult result = greedy_registration(problem, sensors, std::move(init));

  for (int k : result.report.failed_snapshots)
    std::cerr << "register: warning: snapshot " << k + 1
              << " failed registration and was skipped\n";

  result.reduced_space.save((run.out / "mapping_space.bin").string());
  {
    std::ofstream os(run.out / "mapping_coefficients.csv");
    for (int k = 0; k < result.coefficients.cols(); ++k) {
      for (int p = 0; p < params.cols(); ++p)
        os << (p ? "," : "") << fmt(params(k, p));
      for (int m = 0; m < result.coefficients.rows(); ++m)
        os << "," << fmt(result.coefficients(m, k));
      os << "\n";
    }
  }
  {
    std::ofstream os(run.out / "registration_report.csv");
    os << "iteration,max_f,wall_seconds,enriched_snapshot\n";
    for (size_t i = 0; i < result.report.max_f_per_iteration.size(); ++i)
      os << i + 1 << "," << fmt(result.report.max_f_per_iteration[i]) << ","
         << fmt(result.report.wall_seconds[i]) << ","
         << result.report.enriched_snapshot[i] + 1 << "\n";
  }
  std::cout << "register: N = " << result.report.final_N
            << " templates, M = " << result.report.final_M
            << " mapping modes, max f* = "
            << fmt(result.report.max_f_per_iteration.back()) << "\n";
  return kExitOk;
}

// deform the training mesh with the exact training coefficients and pull the
// snapshot back by mesh interpolation
MatrixXd mapped_training_snapshots(const Problem& pb,
                                   const DisplacementSpace& W,
                                   const MatrixXd& coeffs,
                                   const MatrixXd& snaps) {
  MeshLocator loc(pb.mesh);
  const bool polar = W.periodic();
  MatrixXd out(snaps.rows(), snaps.cols());
  for (int k = 0; k < snaps.cols(); ++k) {
    VectorXd raw = W.to_raw(coeffs.col(k));
    MatrixX2d mapped = map_mesh(pb.mesh, [&](int q, const Vector2d& xref) {
      Vector2d X = xref + W.eval_raw(raw, q, xref);
      if (X[0] < -1e-8 || X[0] > 1.0 + 1e-8 ||
          (!polar && (X[1] < -1e-8 || X[1] > 1.0 + 1e-8)))
        throw NumericalError("reduce: mapped reference coordinate escaped");
      X[0] = std::min(1.0, std::max(0.0, X[0]));
      if (!polar) X[1] = std::min(1.0, std::max(0.0, X[1]));
      return pb.partition.element(q).forward(X);
    });
    for (int j = 0; j < snaps.rows(); ++j)
      out(j, k) = loc.interpolate(snaps.col(k), mapped.row(j).transpose(), 5e-2);
  }
  return out;
}

int cmd_reduce(const CommonArgs& args) {
  Run run = open_run(args);
  Problem pb = load_problem(run);
  MatrixXd snaps = load_snapshots(run.path("paths.train_snapshots"));
  MatrixXd params = load_params_csv(run.path("paths.train_params"));
  bool unregistered = run.cfg.get_bool("reduce.unregistered", false);

  ReducedModel model;
  model.train_params = params;
  model.fingerprint = run.cfg.fingerprint();

  MatrixXd coeffs;
  if (unregistered) {
    // identity-map pipeline: one mapping mode with zero coefficients
    DisplacementSpace full = pb.space;
    MatrixXd Z = MatrixXd::Zero(full.dim(), 1);
    Z(0, 0) = 1.0;
    model.mapping_space = full.restricted(Z);
    coeffs = MatrixXd::Zero(1, snaps.cols());
  } else {
    model.mapping_space =
        DisplacementSpace::load((run.out / "mapping_space.bin").string());
    // coefficient table {(mu^k, a^k)}
    MatrixXd table =
        load_params_csv((run.out / "mapping_coefficients.csv").string());
    if (table.rows() != params.rows() ||
        table.cols() != params.cols() + model.mapping_space.dim())
      throw InputError("mapping_coefficients.csv does not match the run");
    coeffs = table.rightCols(model.mapping_space.dim()).transpose();
  }
  model.map_regressor =
      RbfRegressor(params, coeffs.transpose(),
                   run.cfg.get_double("reduce.r2_threshold", 0.75),
                   RbfRegressor::GateFallback::Zero);

  MatrixXd pod_input = unregistered
                           ? snaps
                           : mapped_training_snapshots(pb, model.mapping_space,
                                                       coeffs, snaps);
  NormKind norm = run.cfg.get_or("reduce.norm", "h1") == "l2" ? NormKind::L2
                                                              : NormKind::H1;
  InnerProductMatrix X = assemble_inner_product(pb.mesh, norm);
  double tol_pod = run.cfg.get_double("reduce.tol_pod", 1e-4);
  int n_fixed = run.cfg.get_int("reduce.n_fixed", 0);
  model.pod_basis = pod(pod_input, X, tol_pod, n_fixed);
  model.field_regressor =
      RbfRegressor(params, model.pod_basis.coefficients.transpose(),
                   run.cfg.get_double("reduce.r2_threshold", 0.75),
                   RbfRegressor::GateFallback::Mean);

  std::string suffix = unregistered ? "_unregistered" : "";
  model.save((run.out / ("model" + suffix + ".bin")).string());
  {
    std::ofstream os(run.out / ("eigenvalues" + suffix + ".csv"));
    os << "n,lambda_ratio\n";
    const VectorXd& ev = model.pod_basis.eigenvalues;
    for (int i = 0; i < ev.size(); ++i)
      os << i + 1 << "," << fmt(ev[i] / std::max(ev[0], 1e-300)) << "\n";
  }
  {
    std::ofstream os(run.out / ("gating" + suffix + ".csv"));
    os << "regressor,coordinate,r2,active\n";
    for (int c = 0; c < model.map_regressor.n_outputs(); ++c)
      os << "mapping," << c + 1 << "," << fmt(model.map_regressor.r2()[c]) << ","
         << int(model.map_regressor.active()[c]) << "\n";
    for (int c = 0; c < model.field_regressor.n_outputs(); ++c)
      os << "field," << c + 1 << "," << fmt(model.field_regressor.r2()[c]) << ","
         << int(model.field_regressor.active()[c]) << "\n";
  }

  // optional (N, E_avg-on-training) sweep
  std::string sweep = run.cfg.get_or("reduce.n_sweep", "");
  if (!sweep.empty()) {
    std::ofstream os(run.out / ("n_sweep" + suffix + ".csv"));
    os << "N,e_avg_train\n";
    std::stringstream ss(sweep);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      int N = std::stoi(tok);
      if (N < 1 || N > model.pod_basis.Z.cols()) continue;
      MatrixXd preds(snaps.rows(), snaps.cols());
      for (int k = 0; k < snaps.cols(); ++k) {
        VectorXd alpha = model.field_regressor.predict(params.row(k).transpose());
        preds.col(k) = model.pod_basis.Z.leftCols(N) * alpha.head(N);
      }
      ErrorMetrics em = error_metrics(pod_input, preds, X);
      os << N << "," << fmt(em.e_avg) << "\n";
    }
  }
  std::cout << "reduce" << (unregistered ? " (unregistered)" : "") << ": N = "
            << model.pod_basis.Z.cols() << " POD modes retained\n";
  return kExitOk;
}

int cmd_predict(const CommonArgs& args) {
  Run run = open_run(args, true);
  Problem pb = load_problem(run);
  bool unregistered = run.cfg.get_bool("reduce.unregistered", false);
  std::string suffix = unregistered ? "_unregistered" : "";
  fs::path bundle = run.out / ("model" + suffix + ".bin");
  if (!fs::exists(bundle)) throw InputError("model bundle missing: " + bundle.string());
  ReducedModel model = ReducedModel::load(bundle.string());
  if (model.fingerprint != run.cfg.fingerprint() && !args.force)
    throw InputError(
        "config fingerprint does not match the model bundle (use --force to "
        "override)");

  MatrixXd mus = load_params_csv(run.path("paths.test_params"));
  if (mus.cols() != model.train_params.cols())
    throw InputError("test parameters have the wrong dimension");
  int n_modes = run.cfg.get_int("predict.n_modes", 0);

  MatrixXd fields(pb.mesh.n_nodes(), mus.rows());
  std::ofstream rep(run.out / ("predict_report" + suffix + ".csv"));
  rep << "index,in_box,bijective,min_det,min_radius_ratio\n";
  for (int i = 0; i < mus.rows(); ++i) {
    VectorXd mu = mus.row(i).transpose();
    FieldPrediction pred =
        predict_field(model, pb.mesh, pb.partition, mu,
                      n_modes > 0 ? std::optional<int>(n_modes) : std::nullopt);
    fields.col(i) = pred.field;
    ReferenceMesh deformed(pb.mesh.degree(), pred.map.nodes,
                           pb.mesh.connectivity());
    deformed.save((run.out /
                   ("predict_mesh" + suffix + "_" + std::to_string(i + 1) +
                    ".txt"))
                      .string());
    bool in_box = !model.out_of_sample_box(mu);
    if (!in_box)
      std::cerr << "predict: warning: parameter " << i + 1
                << " lies outside the training box\n";
    rep << i + 1 << "," << (in_box ? 1 : 0) << ","
        << (pred.map.bijectivity.pass ? 1 : 0) << ","
        << fmt(pred.map.bijectivity.min_det) << ","
        << fmt(pred.map.min_radius_ratio) << "\n";
  }
  save_snapshots((run.out / ("predict_fields" + suffix + ".txt")).string(),
                 fields);
  std::cout << "predict: wrote " << mus.rows() << " predictions\n";
  return kExitOk;
}

int cmd_report(const CommonArgs& args) {
  Run run = open_run(args, true);
  std::vector<std::string> missing;

  // eigenvalue tables
  for (std::string suffix : {std::string(""), std::string("_unregistered")}) {
    fs::path src = run.out / ("eigenvalues" + suffix + ".csv");
    if (!fs::exists(src)) {
      missing.push_back(src.filename().string());
      continue;
    }
    fs::copy_file(src, run.out / ("report_eigenvalues" + suffix + ".csv"),
                  fs::copy_options::overwrite_existing);
  }

  // E_avg recomputation from emitted predictions vs the test snapshots
  bool have_truth = run.cfg.has("paths.test_snapshots") &&
                    fs::exists(run.cfg.get("paths.test_snapshots"));
  for (std::string suffix : {std::string(""), std::string("_unregistered")}) {
    fs::path fields_path = run.out / ("predict_fields" + suffix + ".txt");
    if (!fs::exists(fields_path)) {
      missing.push_back(fields_path.filename().string());
      continue;
    }
    if (!have_truth) {
      missing.push_back("test_snapshots");
      continue;
    }
    Problem pb = load_problem(run);
    MatrixXd truth = load_snapshots(run.cfg.get("paths.test_snapshots"));
    MatrixXd fields = load_snapshots(fields_path.string());
    if (truth.rows() != fields.rows() || truth.cols() != fields.cols()) {
      missing.push_back("matching predict_fields" + suffix);
      continue;
    }
    // registered predictions live on deformed meshes: transfer back
    MatrixXd on_ref = fields;
    if (suffix.empty()) {
      for (int i = 0; i < fields.cols(); ++i) {
        fs::path mp = run.out / ("predict_mesh_" + std::to_string(i + 1) + ".txt");
        if (!fs::exists(mp)) continue;
        ReferenceMesh dm = ReferenceMesh::load(mp.string());
        MeshLocator loc(dm);
        for (int j = 0; j < truth.rows(); ++j)
          on_ref(j, i) = loc.interpolate(fields.col(i),
                                         pb.mesh.nodes().row(j).transpose(),
                                         5e-2);
      }
    }
    NormKind norm = run.cfg.get_or("reduce.norm", "h1") == "l2" ? NormKind::L2
                                                                : NormKind::H1;
    InnerProductMatrix X = assemble_inner_product(pb.mesh, norm);
    ErrorMetrics em = error_metrics(truth, on_ref, X);
    std::ofstream os(run.out / ("report_error" + suffix + ".csv"));
    os << "sample,relative_error\n";
    for (int k = 0; k < em.per_sample.size(); ++k)
      os << k + 1 << "," << fmt(em.per_sample[k]) << "\n";
    os << "e_avg," << fmt(em.e_avg) << "\n";
  }

  // mesh-quality distribution from the prediction report
  for (std::string suffix : {std::string(""), std::string("_unregistered")}) {
    fs::path rep_path = run.out / ("predict_report" + suffix + ".csv");
    if (!fs::exists(rep_path)) {
      missing.push_back(rep_path.filename().string());
      continue;
    }
    std::ifstream is(rep_path);
    std::string line;
    std::getline(is, line);  // header
    std::vector<double> ratios;
    int inverted = 0, count = 0;
    while (std::getline(is, line)) {
      std::stringstream ss(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() < 5) continue;
      ++count;
      if (cells[2] == "0") ++inverted;
      ratios.push_back(std::stod(cells[4]));
    }
    std::sort(ratios.begin(), ratios.end());
    std::ofstream os(run.out / ("report_quality" + suffix + ".csv"));
    os << "statistic,value\n";
    os << "predictions," << count << "\n";
    os << "with_inverted_elements," << inverted << "\n";
    if (!ratios.empty()) {
      os << "min_radius_ratio_min," << fmt(ratios.front()) << "\n";
      os << "min_radius_ratio_median," << fmt(ratios[ratios.size() / 2]) << "\n";
      os << "min_radius_ratio_max," << fmt(ratios.back()) << "\n";
    }
  }

  for (const std::string& m : missing)
    std::cerr << "report: warning: missing artifact " << m << "\n";
  std::cout << "report: done (" << missing.size() << " artifacts missing)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"registration-based model reduction toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "run configuration file")
        ->required();
    sub->add_option("--out", args.out_override, "output directory override");
    sub->add_option("--workers", args.workers,
                    "worker threads (0 = hardware concurrency)");
    sub->add_option("--seed", args.seed_override, "seed override for synth")
        ->each([&](const std::string&) { args.seed_set = true; });
    sub->add_flag("--force", args.force, "ignore fingerprint mismatches");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic manifold");
  CLI::App* reg = app.add_subcommand("register", "greedy parametric registration");
  CLI::App* red = app.add_subcommand("reduce", "POD + regression model build");
  CLI::App* pre = app.add_subcommand("predict", "online prediction for new mu");
  CLI::App* rep = app.add_subcommand("report", "collate run artifacts");
  for (CLI::App* sub : {synth, reg, red, pre, rep}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(args);
    if (reg->parsed()) return cmd_register(args);
    if (red->parsed()) return cmd_reduce(args);
    if (pre->parsed()) return cmd_predict(args);
    if (rep->parsed()) return cmd_report(args);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
