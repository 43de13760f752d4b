#include "gmmdr/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "gmmdr/dr.hpp"
#include "gmmdr/error.hpp"
#include "gmmdr/eval.hpp"
#include "gmmdr/featsel.hpp"
#include "gmmdr/io.hpp"
#include "gmmdr/mixture.hpp"
#include "gmmdr/simgen.hpp"

namespace gmmdr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DataArgs {
  std::string input;
  std::string label;
  bool standardize = false;
  bool no_header = false;

  void add(CLI::App* app) {
    app->add_option("-i,--input", input, "Input CSV file")->required();
    app->add_option("--label", label, "Name of the class label column");
    app->add_flag("--standardize", standardize, "Scale every column to mean 0, sd 1");
    app->add_flag("--no-header", no_header, "The CSV has no header row");
  }
  Dataset load() const {
    CsvOptions o;
    o.header = !no_header;
    o.label_column = label;
    o.standardize = standardize;
    return read_csv(input, o);
  }
  json to_json() const {
    return {{"input", input}, {"label", label}, {"standardize", standardize},
            {"header", !no_header}};
  }
};

struct FitArgs {
  FitConfig cfg;
  std::string init = "hierarchical";
  int max_g = 9;
  int fixed_g = 0;
  std::vector<std::string> models;

  void add(CLI::App* app, int default_max_g) {
    max_g = default_max_g;
    app->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    app->add_option("--max-iter", cfg.max_iter, "EM iteration cap")->capture_default_str();
    app->add_option("--tol", cfg.rel_tol, "Relative log-likelihood tolerance")
        ->capture_default_str();
    app->add_option("--init", init, "Initialization: hierarchical, kmeans or random")
        ->capture_default_str();
    app->add_option("--restarts", cfg.restarts,
                    "Initializations per fit (extra ones use random responsibilities)")
        ->capture_default_str();
    app->add_option("--variance-floor", cfg.variance_floor,
                    "Relative eigenvalue floor for degenerate components")
        ->capture_default_str();
    app->add_option("--max-g", max_g, "Largest number of components")->capture_default_str();
    app->add_option("--g", fixed_g, "Fit exactly this number of components");
    app->add_option("--models", models, "Covariance models (comma separated, default all)")
        ->delimiter(',');
  }
  void resolve() {
    cfg.init = parse_init(init);
    cfg.validate();
    if (max_g < 1) throw InvalidArgument("--max-g must be >= 1");
    if (fixed_g < 0) throw InvalidArgument("--g must be >= 1");
  }
  GRange range() const { return fixed_g > 0 ? GRange{fixed_g, fixed_g} : GRange{1, max_g}; }
  std::vector<ModelName> model_list(int p) const {
    if (models.empty()) return all_models(p);
    std::vector<ModelName> out;
    for (const auto& m : models) out.push_back(parse_model(m));
    return out;
  }
  json to_json() const {
    json j = gmmdr::to_json(cfg);
    j["max_g"] = max_g;
    j["g"] = fixed_g > 0 ? json(fixed_g) : json(nullptr);
    j["models"] = models;
    return j;
  }
};

std::string config_comment(const json& config) { return "config " + config.dump(); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) width[j] = header[j].size();
  for (const auto& r : rows)
    for (std::size_t j = 0; j < r.size() && j < width.size(); ++j)
      width[j] = std::max(width[j], r[j].size());
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t j = 0; j < r.size(); ++j)
      out << (j ? "  " : "") << std::setw(static_cast<int>(width[j])) << r[j];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

void print_confusion(std::ostream& out, const std::vector<int>& truth,
                     const std::vector<int>& predicted) {
  const Eigen::MatrixXi table = confusion_matrix(truth, predicted);
  const Partition t = Partition::from(truth);
  std::map<int, int> raw_of;  // canonical -> original truth label
  for (std::size_t i = 0; i < truth.size(); ++i) raw_of[t.labels[i]] = truth[i];
  std::vector<std::string> header{"class"};
  for (Eigen::Index j = 0; j < table.cols(); ++j) header.push_back(std::to_string(j + 1));
  header.push_back("total");
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    std::vector<std::string> r{std::to_string(raw_of[static_cast<int>(i) + 1])};
    for (Eigen::Index j = 0; j < table.cols(); ++j) r.push_back(std::to_string(table(i, j)));
    r.push_back(std::to_string(table.row(i).sum()));
    rows.push_back(std::move(r));
  }
  print_table(out, header, rows);
}

void print_agreement(std::ostream& out, const std::vector<int>& truth,
                     const std::vector<int>& predicted) {
  out << "ARI: " << fmt(adjusted_rand_index(truth, predicted)) << '\n';
  out << "error rate: " << fmt(100.0 * error_rate(truth, predicted), 2) << "%\n";
  out << "confusion (rows = classes, columns = clusters):\n";
  print_confusion(out, truth, predicted);
}

fs::path in_dir(const std::string& dir, const std::string& prefix, std::string_view name) {
  fs::path p = fs::path(dir) / (prefix + std::string(name));
  return p;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir);
}

void write_reduction_exports(const std::string& dir, const std::string& prefix,
                             const DrBasis& basis, const std::vector<std::string>& names,
                             const Eigen::MatrixXd& projected, const Classification& cls,
                             const std::optional<std::vector<int>>& truth,
                             const MixtureParams* grid_params, int grid_points,
                             const std::string& comment) {
  PlotInputs in;
  in.basis = &basis;
  in.variable_names = names;
  in.projected = &projected;
  in.classification = &cls;
  if (truth) in.truth = &*truth;
  export_plotdata(PlotKind::eigen_contrib, in, in_dir(dir, prefix, "eigen_contrib.csv"), comment);
  export_plotdata(PlotKind::coefficients, in, in_dir(dir, prefix, "coefficients.csv"), comment);
  export_plotdata(PlotKind::projection, in, in_dir(dir, prefix, "projection.csv"), comment);
  export_plotdata(PlotKind::uncertainty, in, in_dir(dir, prefix, "uncertainty.csv"), comment);
  if (grid_params && projected.cols() >= 2 && grid_points >= 2) {
    GridSpec spec;
    const Eigen::RowVectorXd lo = projected.leftCols(2).colwise().minCoeff();
    const Eigen::RowVectorXd hi = projected.leftCols(2).colwise().maxCoeff();
    const Eigen::RowVectorXd pad = 0.1 * (hi - lo);
    spec.x_min = lo(0) - pad(0);
    spec.x_max = hi(0) + pad(0);
    spec.y_min = lo(1) - pad(1);
    spec.y_max = hi(1) + pad(1);
    spec.nx = spec.ny = grid_points;
    const DensityGrid grid = density_grid(*grid_params, spec);
    in.grid = &grid;
    export_plotdata(PlotKind::density_grid, in, in_dir(dir, prefix, "density_grid.csv"), comment);
  }
}

std::string model_label(const MixtureFit& fit) {
  return std::string(to_string(fit.model)) + "," + std::to_string(fit.G);
}

// ---- fit -------------------------------------------------------------------

struct FitCmd {
  DataArgs data;
  FitArgs fit;
  std::string output = "fit.gmmdr.json";
  std::string table;
  int jobs = 1;
};

int cmd_fit(const FitCmd& a, std::ostream& out, std::ostream& err) {
  FitArgs fa = a.fit;
  fa.resolve();
  fa.cfg.threads = a.jobs;
  const Dataset ds = a.data.load();
  const auto models = fa.model_list(static_cast<int>(ds.data.cols()));
  json config = {{"command", "fit"}, {"data", a.data.to_json()}, {"fit", fa.to_json()},
                 {"output", a.output}, {"table", a.table}};
  err << "fitting " << models.size() << " models x G in [" << fa.range().lo << ", "
      << fa.range().hi << "] on " << ds.data.rows() << " x " << ds.data.cols() << '\n';
  const SearchResult res = model_search(ds.data, fa.range(), models, fa.cfg);

  // BIC table: one row per G, one column per model.
  std::vector<ModelName> cols;
  for (const auto& e : res.ranked)
    if (std::find(cols.begin(), cols.end(), e.model) == cols.end()) cols.push_back(e.model);
  for (const auto& e : res.failed)
    if (std::find(cols.begin(), cols.end(), e.model) == cols.end()) cols.push_back(e.model);
  std::map<std::pair<int, ModelName>, std::string> cell;
  for (const auto& e : res.ranked) cell[{e.G, e.model}] = fmt(e.fit->bic, 3);
  for (const auto& e : res.failed) cell[{e.G, e.model}] = "NA";
  std::vector<std::string> header{"G"};
  for (ModelName m : cols) header.emplace_back(to_string(m));
  std::vector<std::vector<std::string>> rows;
  for (int G = fa.range().lo; G <= fa.range().hi; ++G) {
    std::vector<std::string> r{std::to_string(G)};
    for (ModelName m : cols) {
      const auto it = cell.find({G, m});
      r.push_back(it == cell.end() ? "NA" : it->second);
    }
    rows.push_back(std::move(r));
  }

  const MixtureFit& best = res.best();
  out << "# " << config_comment(config) << '\n';
  out << "BIC (2 loglik - npar log n; NA = fit failed)\n";
  print_table(out, header, rows);
  out << "best model: " << to_string(best.model) << " with G = " << best.G
      << " (BIC " << fmt(best.bic, 3) << ", loglik " << fmt(best.loglik, 3) << ", "
      << best.nparams << " parameters)\n";
  if (ds.labels) print_agreement(out, *ds.labels, map_classify(best.responsibilities).labels);

  if (!a.table.empty()) write_table(a.table, header, rows, config_comment(config));
  ModelArchive archive;
  archive.fit = best;
  archive.provenance = make_provenance(fa.cfg.seed, config, ds.data);
  save_model(archive, a.output);
  err << "wrote " << a.output << '\n';
  return kExitOk;
}

// ---- reduce ----------------------------------------------------------------

struct ReduceCmd {
  DataArgs data;
  FitArgs fit;
  std::string model;
  std::string out_dir = ".";
  std::string prefix;
  int grid = 100;
  double threshold = 1e-8;
};

int cmd_reduce(const ReduceCmd& a, std::ostream& out, std::ostream& err) {
  FitArgs fa = a.fit;
  fa.resolve();
  const Dataset ds = a.data.load();
  json config = {{"command", "reduce"}, {"data", a.data.to_json()}, {"model", a.model},
                 {"out_dir", a.out_dir}, {"prefix", a.prefix}, {"grid", a.grid},
                 {"rel_threshold", a.threshold}};

  MixtureFit fit;
  Eigen::MatrixXd features = ds.data;
  std::optional<Eigen::MatrixXd> transform;
  if (!a.model.empty()) {
    ModelArchive arch = load_model(a.model);
    if (arch.transform) {
      if (arch.transform->rows() != ds.data.cols())
        throw InvalidArgument("archive transform expects " +
                              std::to_string(arch.transform->rows()) + " columns");
      features = ds.data * *arch.transform;
      transform = arch.transform;
    }
    if (features.cols() != arch.fit.p())
      throw InvalidArgument("archived mixture has " + std::to_string(arch.fit.p()) +
                            " variables, data has " + std::to_string(features.cols()));
    fit = std::move(arch.fit);
    config["archive_config"] = arch.provenance.config;
  } else {
    config["fit"] = fa.to_json();
    fit = model_search(ds.data, fa.range(), fa.model_list(static_cast<int>(ds.data.cols())),
                       fa.cfg)
              .best();
  }

  DrOptions opts;
  opts.rel_threshold = a.threshold;
  DrBasis local = estimate_directions(fit, features, opts);
  DrBasis basis = local;
  if (transform) {
    basis.raw_vectors = *transform * local.raw_vectors;
    basis.directions = basis.raw_vectors.colwise().normalized();
  }
  const Eigen::MatrixXd Z = ds.data * basis.directions;
  const Classification cls = map_classify(fit.responsibilities);
  ensure_dir(a.out_dir);
  const std::string comment = config_comment(config);
  // Grid densities live in the coordinates of the first two directions of
  // the fitted variables, which match Z up to the transform.
  MixtureParams grid_params;
  if (basis.d >= 2) {
    Eigen::MatrixXd beta = local.directions.leftCols(2);
    if (transform)
      for (int j = 0; j < 2; ++j) beta.col(j) /= (*transform * local.directions.col(j)).norm();
    grid_params = project_params(fit.params, beta);
  }
  write_reduction_exports(a.out_dir, a.prefix, basis, ds.column_names, Z, cls, ds.labels,
                          basis.d >= 2 ? &grid_params : nullptr, a.grid, comment);
  ModelArchive archive;
  archive.fit = fit;
  archive.basis = basis;
  archive.transform = transform;
  archive.provenance = make_provenance(fa.cfg.seed, config, ds.data);
  save_model(archive, in_dir(a.out_dir, a.prefix, "reduce.gmmdr.json"));

  out << "# " << comment << '\n';
  out << "mixture: " << to_string(fit.model) << " with G = " << fit.G << '\n';
  out << "directions: " << basis.d << '\n';
  std::vector<std::vector<std::string>> rows;
  for (int j = 0; j < basis.d; ++j)
    rows.push_back({std::to_string(j + 1), fmt(basis.eigenvalues(j)), fmt(basis.mean_contrib(j)),
                    fmt(basis.var_contrib(j))});
  print_table(out, {"direction", "eigenvalue", "means", "covariances"}, rows);
  err << "wrote exports to " << a.out_dir << '\n';
  return kExitOk;
}

// ---- select ----------------------------------------------------------------

struct SelectCmd {
  DataArgs data;
  FitArgs fit;
  std::string out_dir = ".";
  std::string prefix;
  std::string mode = "bic";
  std::string fixed_model;
  int max_passes = 10;
  int grid = 100;
  int jobs = 1;
};

int cmd_select(const SelectCmd& a, std::ostream& out, std::ostream& err) {
  FitArgs fa = a.fit;
  fa.resolve();
  fa.cfg.threads = a.jobs;
  const Dataset ds = a.data.load();
  const int p = static_cast<int>(ds.data.cols());

  SelectionConfig sc;
  sc.max_G = fa.max_g;
  sc.fit = fa.cfg;
  sc.max_passes = a.max_passes;
  if (a.mode == "bic")
    sc.mode = SelectionMode::bic;
  else if (a.mode == "entropy")
    sc.mode = SelectionMode::entropy;
  else
    throw InvalidArgument("--mode must be bic or entropy");
  for (const auto& m : fa.models) sc.models.push_back(parse_model(m));
  if (!a.fixed_model.empty()) {
    if (fa.fixed_g < 1) throw InvalidArgument("--fixed-model needs --g");
    sc.fixed_model = std::pair{parse_model(a.fixed_model), fa.fixed_g};
  }
  sc.validate();
  json config = {{"command", "select"}, {"data", a.data.to_json()},
                 {"selection", to_json(sc)}, {"out_dir", a.out_dir}, {"prefix", a.prefix}};

  // Starting mixture on all variables.
  std::vector<ModelName> start_models = fa.model_list(p);
  if (sc.fixed_model) start_models = {sc.fixed_model->first};
  err << "fitting the starting mixture on " << ds.data.rows() << " x " << p << '\n';
  const MixtureFit initial = model_search(ds.data, fa.range(), start_models, sc.fit).best();
  err << "starting mixture " << model_label(initial) << "; selecting directions\n";
  const PipelineResult res = gmmdr_pipeline(ds.data, sc, &initial);
  for (const auto& w : res.warnings) err << "warning: " << w << '\n';

  const Eigen::MatrixXd Z = ds.data * res.basis.directions;
  const Classification cls = map_classify(res.fit.responsibilities);
  ensure_dir(a.out_dir);
  const std::string comment = config_comment(config);
  MixtureParams grid_params;
  if (res.basis.d >= 2) grid_params = project_params(res.fit.params, res.feature_directions.leftCols(2));
  write_reduction_exports(a.out_dir, a.prefix, res.basis, ds.column_names, Z, cls, ds.labels,
                          res.basis.d >= 2 ? &grid_params : nullptr, a.grid, comment);

  ModelArchive archive;
  archive.fit = res.fit;
  archive.basis = res.basis;
  archive.transform = res.transform;
  for (const auto& pass : res.passes) archive.selection.push_back(pass.trace);
  archive.provenance = make_provenance(sc.fit.seed, config, ds.data);
  save_model(archive, in_dir(a.out_dir, a.prefix, "select.gmmdr.json"));

  out << "# " << comment << '\n';
  out << "starting mixture: " << to_string(initial.model) << " with G = " << initial.G
      << " (BIC " << fmt(initial.bic, 3) << ")\n";
  for (std::size_t i = 0; i < res.passes.size(); ++i) {
    const auto& pass = res.passes[i];
    out << "pass " << i + 1 << ": " << pass.d << " candidate directions, selected";
    for (int s : pass.trace.selected) out << ' ' << s + 1;
    out << " (stop: " << to_string(pass.trace.stop_reason) << ")\n";
  }
  out << "final mixture: " << to_string(res.fit.model) << " with G = " << res.fit.G << " on "
      << res.transform.cols() << " variables, " << res.basis.d << " GMMDR directions (BIC "
      << fmt(res.fit.bic, 3) << ")\n";
  if (ds.labels) print_agreement(out, *ds.labels, cls.labels);
  err << "wrote " << in_dir(a.out_dir, a.prefix, "select.gmmdr.json").string() << '\n';
  return kExitOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateCmd {
  std::string scenario = "model1_eee";
  std::string augmentation = "none";
  int n = 300;
  int n_per_cluster = 0;
  std::vector<double> priors;
  int highdim_k = 1;
  std::uint64_t seed = 1;
  std::string output = "simulated.csv";
};

ScenarioSpec make_spec(const std::string& scenario, const std::string& augmentation, int n,
                       int n_per_cluster, const std::vector<double>& priors, int k,
                       std::uint64_t seed) {
  ScenarioSpec s;
  s.base = parse_base(scenario);
  s.augmentation = parse_augmentation(augmentation);
  s.n = n;
  s.n_per_cluster = n_per_cluster;
  s.priors = priors;
  s.highdim_k = k;
  s.seed = seed;
  s.validate();
  return s;
}

json spec_json(const ScenarioSpec& s) {
  return {{"scenario", to_string(s.base)}, {"augmentation", to_string(s.augmentation)},
          {"n", s.n}, {"n_per_cluster", s.n_per_cluster}, {"priors", s.priors},
          {"highdim_k", s.highdim_k}, {"seed", s.seed}};
}

int cmd_simulate(const SimulateCmd& a, std::ostream& out, std::ostream& err) {
  const ScenarioSpec spec =
      make_spec(a.scenario, a.augmentation, a.n, a.n_per_cluster, a.priors, a.highdim_k, a.seed);
  const LabeledDataset sim = gen_model(spec);
  json config = {{"command", "simulate"}, {"spec", spec_json(spec)}, {"output", a.output}};
  Dataset ds;
  ds.data = sim.data;
  ds.column_names = sim.column_names;
  ds.labels = sim.labels;
  write_csv(a.output, ds, "class", config_comment(config));
  out << "# " << config_comment(config) << '\n';
  out << "wrote " << sim.data.rows() << " x " << sim.data.cols() << " to " << a.output << '\n';
  err << "done\n";
  return kExitOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateCmd {
  DataArgs data;
  std::string model;
  std::string truth_col;
  std::string pred_col;
};

std::vector<int> integer_column(const Dataset& ds, const std::string& name) {
  const auto it = std::find(ds.column_names.begin(), ds.column_names.end(), name);
  if (it == ds.column_names.end()) throw InvalidArgument("no column named " + name);
  const auto j = static_cast<Eigen::Index>(it - ds.column_names.begin());
  std::vector<int> out;
  for (Eigen::Index i = 0; i < ds.data.rows(); ++i) {
    const double v = ds.data(i, j);
    if (v != std::round(v)) throw InvalidArgument("column " + name + " holds non-integer labels");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

int cmd_evaluate(const EvaluateCmd& a, std::ostream& out, std::ostream&) {
  json config = {{"command", "evaluate"}, {"data", a.data.to_json()}, {"model", a.model},
                 {"truth", a.truth_col}, {"predicted", a.pred_col}};
  std::vector<int> truth, predicted;
  if (!a.model.empty()) {
    if (a.data.label.empty()) throw InvalidArgument("--model needs --label for the true classes");
    const Dataset ds = a.data.load();
    const ModelArchive arch = load_model(a.model);
    Eigen::MatrixXd features = ds.data;
    if (arch.transform) {
      if (arch.transform->rows() != ds.data.cols())
        throw InvalidArgument("archive transform does not match the data");
      features = ds.data * *arch.transform;
    }
    predicted = map_classify(arch.fit, features).labels;
    truth = *ds.labels;
  } else {
    if (a.truth_col.empty() || a.pred_col.empty())
      throw InvalidArgument("give --model with --label, or --truth and --predicted columns");
    DataArgs plain = a.data;
    plain.standardize = false;
    const Dataset ds = plain.load();
    truth = integer_column(ds, a.truth_col);
    predicted = integer_column(ds, a.pred_col);
  }
  out << "# " << config_comment(config) << '\n';
  print_agreement(out, truth, predicted);
  return kExitOk;
}

// ---- benchmark -------------------------------------------------------------

struct BenchmarkCmd {
  std::string scenario = "model1_eee";
  std::vector<std::string> augmentations{"noise"};
  std::vector<int> sizes{300};
  std::vector<double> priors;
  int highdim_k = 1;
  int reps = 10;
  int jobs = 1;
  std::string mode = "bic";
  std::vector<std::string> methods{"GMM", "PCA+GMM", "GMMDR"};
  FitArgs fit;
  std::string output = "benchmark.csv";
  std::string replicates = "benchmark_replicates.csv";
  bool quiet = false;
};

struct ReplicateRow {
  std::string augmentation;
  int n = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::string method;
  double ari = std::nan("");
  std::string model;
  int G = 0;
  int k = 0;
  std::string error;
};

std::vector<ReplicateRow> run_replicate(const BenchmarkCmd& a, const FitArgs& fa,
                                        const std::string& aug, int n, int rep) {
  const std::uint64_t seed = fa.cfg.seed + static_cast<std::uint64_t>(rep);
  std::vector<ReplicateRow> rows;
  auto row = [&](const std::string& method) {
    ReplicateRow r;
    r.augmentation = aug;
    r.n = n;
    r.replicate = rep + 1;
    r.seed = seed;
    r.method = method;
    return r;
  };
  auto wants = [&](const std::string& m) {
    return std::find(a.methods.begin(), a.methods.end(), m) != a.methods.end();
  };

  LabeledDataset sim;
  try {
    sim = gen_model(make_spec(a.scenario, aug, n, 0, a.priors, a.highdim_k, seed));
  } catch (const Error& e) {
    for (const auto& m : a.methods) {
      auto r = row(m);
      r.error = e.what();
      rows.push_back(r);
    }
    return rows;
  }
  FitConfig cfg = fa.cfg;
  cfg.seed = seed;
  cfg.threads = 1;
  const int p = static_cast<int>(sim.data.cols());
  const auto models = fa.model_list(p);

  std::optional<MixtureFit> gmm;
  if (wants("GMM") || wants("GMMDR")) {
    auto r = row("GMM");
    try {
      gmm = model_search(sim.data, fa.range(), models, cfg).best();
      r.ari = adjusted_rand_index(sim.labels, map_classify(gmm->responsibilities).labels);
      r.model = to_string(gmm->model);
      r.G = gmm->G;
      r.k = p;
    } catch (const Error& e) {
      r.error = e.what();
    }
    if (wants("GMM")) rows.push_back(r);
  }
  if (wants("PCA+GMM")) {
    auto r = row("PCA+GMM");
    try {
      const std::vector<ModelName> pm = fa.models.empty() ? std::vector<ModelName>{} : models;
      const PcaGmmResult pr = pca_gmm(sim.data, fa.range(), pm, cfg);
      r.ari = adjusted_rand_index(sim.labels, map_classify(pr.fit.responsibilities).labels);
      r.model = to_string(pr.fit.model);
      r.G = pr.fit.G;
      r.k = pr.retained;
    } catch (const Error& e) {
      r.error = e.what();
    }
    rows.push_back(r);
  }
  if (wants("GMMDR")) {
    auto r = row("GMMDR");
    try {
      if (!gmm) throw NumericError("no starting mixture");
      SelectionConfig sc;
      sc.max_G = fa.fixed_g > 0 ? fa.fixed_g : fa.max_g;
      sc.models = fa.models.empty() ? std::vector<ModelName>{} : models;
      sc.fit = cfg;
      sc.mode = a.mode == "entropy" ? SelectionMode::entropy : SelectionMode::bic;
      if (sc.mode == SelectionMode::entropy && !fa.models.empty())
        sc.fixed_model = std::pair{models.front(), gmm->G};
      const PipelineResult res = gmmdr_pipeline(sim.data, sc, &*gmm);
      r.ari = adjusted_rand_index(sim.labels, map_classify(res.fit.responsibilities).labels);
      r.model = to_string(res.fit.model);
      r.G = res.fit.G;
      r.k = res.basis.d;
    } catch (const Error& e) {
      r.error = e.what();
    }
    rows.push_back(r);
  }
  return rows;
}

int cmd_benchmark(const BenchmarkCmd& a, std::ostream& out, std::ostream& err) {
  FitArgs fa = a.fit;
  fa.resolve();
  if (a.reps < 1) throw InvalidArgument("--reps must be >= 1");
  if (a.jobs < 1) throw InvalidArgument("--jobs must be >= 1");
  if (a.mode != "bic" && a.mode != "entropy") throw InvalidArgument("--mode must be bic or entropy");
  for (const auto& m : a.methods)
    if (m != "GMM" && m != "PCA+GMM" && m != "GMMDR")
      throw InvalidArgument("unknown method " + m + " (GMM, PCA+GMM, GMMDR)");
  for (const auto& aug : a.augmentations)
    for (int n : a.sizes) make_spec(a.scenario, aug, n, 0, a.priors, a.highdim_k, fa.cfg.seed);

  json config = {{"command", "benchmark"}, {"scenario", a.scenario},
                 {"augmentations", a.augmentations}, {"sizes", a.sizes},
                 {"priors", a.priors}, {"highdim_k", a.highdim_k}, {"reps", a.reps},
                 {"mode", a.mode}, {"methods", a.methods}, {"fit", fa.to_json()},
                 {"output", a.output}, {"replicates", a.replicates}};
  const std::string comment = config_comment(config);

  struct Task {
    std::string aug;
    int n;
    int rep;
  };
  std::vector<Task> tasks;
  for (const auto& aug : a.augmentations)
    for (int n : a.sizes)
      for (int r = 0; r < a.reps; ++r) tasks.push_back({aug, n, r});

  std::vector<std::vector<ReplicateRow>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();) {
      results[t] = run_replicate(a, fa, tasks[t].aug, tasks[t].n, tasks[t].rep);
      const std::size_t finished = ++done;
      if (!a.quiet) {
        std::lock_guard lock(log_mutex);
        err << "[" << finished << "/" << tasks.size() << "] " << tasks[t].aug << " n=" << tasks[t].n
            << " replicate " << tasks[t].rep + 1 << '\n';
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const int workers = std::min<int>(a.jobs, static_cast<int>(tasks.size()));
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  // Per-replicate rows.
  std::vector<std::vector<std::string>> rep_rows;
  for (const auto& rs : results)
    for (const auto& r : rs)
      rep_rows.push_back({a.scenario, r.augmentation, std::to_string(r.n),
                          std::to_string(r.replicate), std::to_string(r.seed), r.method,
                          std::isnan(r.ari) ? "NA" : format_double(r.ari), r.model,
                          r.G ? std::to_string(r.G) : "NA", r.k ? std::to_string(r.k) : "NA",
                          r.error});
  write_table(a.replicates,
              {"scenario", "augmentation", "n", "replicate", "seed", "method", "ari", "model", "G",
               "k", "error"},
              rep_rows, comment);

  // Summary: mean ARI with sd and standard error over successful replicates.
  std::vector<std::vector<std::string>> summary;
  std::map<std::tuple<std::string, int, std::string>, std::string> cell;
  for (const auto& aug : a.augmentations)
    for (int n : a.sizes)
      for (const auto& m : a.methods) {
        std::vector<double> v;
        int failures = 0;
        for (const auto& rs : results)
          for (const auto& r : rs)
            if (r.augmentation == aug && r.n == n && r.method == m) {
              if (std::isnan(r.ari))
                ++failures;
              else
                v.push_back(r.ari);
            }
        const double k = static_cast<double>(v.size());
        double mean = std::nan(""), sd = std::nan(""), se = std::nan("");
        if (!v.empty()) {
          mean = 0.0;
          for (double x : v) mean += x;
          mean /= k;
        }
        if (v.size() >= 2) {
          double ss = 0.0;
          for (double x : v) ss += (x - mean) * (x - mean);
          sd = std::sqrt(ss / (k - 1.0));
          se = sd / std::sqrt(k);
        }
        auto s = [](double x) { return std::isnan(x) ? std::string("NA") : format_double(x); };
        summary.push_back({a.scenario, aug, std::to_string(n), m, std::to_string(v.size()),
                           std::to_string(failures), s(mean), s(sd), s(se)});
        cell[{aug, n, m}] = std::isnan(mean)
                                ? "NA"
                                : fmt(mean) + " (" + (std::isnan(se) ? "NA" : fmt(se)) + ")";
      }
  write_table(a.output,
              {"scenario", "augmentation", "n", "method", "reps", "failures", "mean_ari", "sd",
               "se"},
              summary, comment);

  out << "# " << comment << '\n';
  out << "mean ARI (standard error) over " << a.reps << " replicates, " << a.scenario << '\n';
  std::vector<std::string> header{"method"};
  for (const auto& aug : a.augmentations)
    for (int n : a.sizes) header.push_back(aug + " n=" + std::to_string(n));
  std::vector<std::vector<std::string>> rows;
  for (const auto& m : a.methods) {
    std::vector<std::string> r{m};
    for (const auto& aug : a.augmentations)
      for (int n : a.sizes) r.push_back(cell[{aug, n, m}]);
    rows.push_back(std::move(r));
  }
  print_table(out, header, rows);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian mixture clustering with dimension reduction"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  FitCmd fit_args;
  auto* fit = app.add_subcommand("fit", "Fit mixtures over models and G; report BIC");
  fit_args.data.add(fit);
  fit_args.fit.add(fit, 9);
  fit->add_option("-o,--output", fit_args.output, "Model archive (.gmmdr.json)")
      ->capture_default_str();
  fit->add_option("--table", fit_args.table, "Also write the BIC table as CSV");
  fit->add_option("--jobs", fit_args.jobs, "Worker threads")->capture_default_str();

  ReduceCmd reduce_args;
  auto* reduce = app.add_subcommand("reduce", "Estimate GMMDR directions and plot data");
  reduce_args.data.add(reduce);
  reduce_args.fit.add(reduce, 9);
  reduce->add_option("--model", reduce_args.model, "Use this archive instead of fitting");
  reduce->add_option("--out-dir", reduce_args.out_dir, "Output directory")->capture_default_str();
  reduce->add_option("--prefix", reduce_args.prefix, "Prefix for output file names");
  reduce->add_option("--grid", reduce_args.grid, "Density grid points per axis")
      ->capture_default_str();
  reduce->add_option("--threshold", reduce_args.threshold,
                     "Drop directions with eigenvalue below this fraction of the largest")
      ->capture_default_str();

  SelectCmd select_args;
  auto* select = app.add_subcommand("select", "Iterated GMMDR direction selection");
  select_args.data.add(select);
  select_args.fit.add(select, 9);
  select->add_option("--mode", select_args.mode, "Selection criterion: bic or entropy")
      ->capture_default_str();
  select->add_option("--fixed-model", select_args.fixed_model,
                     "Keep this covariance model (with --g) for every subset");
  select->add_option("--max-passes", select_args.max_passes, "Cap on selection passes")
      ->capture_default_str();
  select->add_option("--out-dir", select_args.out_dir, "Output directory")->capture_default_str();
  select->add_option("--prefix", select_args.prefix, "Prefix for output file names");
  select->add_option("--grid", select_args.grid, "Density grid points per axis")
      ->capture_default_str();
  select->add_option("--jobs", select_args.jobs, "Worker threads")->capture_default_str();

  SimulateCmd sim_args;
  auto* simulate = app.add_subcommand("simulate", "Write a simulated dataset with labels");
  simulate->add_option("--scenario", sim_args.scenario,
                       "chang15, synthetic_vvv, model1_eee, model2_vev or model3_vvv")
      ->capture_default_str();
  simulate->add_option("--augmentation", sim_args.augmentation,
                       "none, noise or noise+redundant")
      ->capture_default_str();
  simulate->add_option("--n", sim_args.n, "Sample size")->capture_default_str();
  simulate->add_option("--n-per-cluster", sim_args.n_per_cluster,
                       "Fixed cluster size instead of --n");
  simulate->add_option("--priors", sim_args.priors, "Three mixing proportions")
      ->delimiter(',')
      ->expected(3);
  simulate->add_option("--highdim-k", sim_args.highdim_k, "Block multiplier k (model2_vev)")
      ->capture_default_str();
  simulate->add_option("--seed", sim_args.seed, "Random seed")->capture_default_str();
  simulate->add_option("-o,--output", sim_args.output, "Output CSV")->capture_default_str();

  EvaluateCmd eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Compare a clustering with known classes");
  eval_args.data.add(evaluate);
  evaluate->add_option("--model", eval_args.model, "Classify the data with this archive");
  evaluate->add_option("--truth", eval_args.truth_col, "Column with the true classes");
  evaluate->add_option("--predicted", eval_args.pred_col, "Column with the cluster labels");

  BenchmarkCmd bench_args;
  auto* bench = app.add_subcommand("benchmark", "Replicate GMM, PCA+GMM and GMMDR on simulations");
  bench->add_option("--model", bench_args.scenario,
                    "Scenario: model1_eee, model2_vev, model3_vvv or synthetic_vvv")
      ->capture_default_str();
  bench->add_option("--scenario", bench_args.augmentations,
                    "Augmentations: none, noise, noise+redundant (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--n", bench_args.sizes, "Sample sizes (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--priors", bench_args.priors, "Three mixing proportions")
      ->delimiter(',')
      ->expected(3);
  bench->add_option("--highdim-k", bench_args.highdim_k, "Block multiplier k (model2_vev)")
      ->capture_default_str();
  bench->add_option("--reps", bench_args.reps, "Replicates per cell")->capture_default_str();
  bench->add_option("--jobs", bench_args.jobs, "Concurrent replicates")->capture_default_str();
  bench->add_option("--mode", bench_args.mode, "GMMDR selection: bic or entropy")
      ->capture_default_str();
  bench->add_option("--methods", bench_args.methods, "Methods (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  bench_args.fit.add(bench, 15);
  bench->add_option("-o,--output", bench_args.output, "Summary CSV")->capture_default_str();
  bench->add_option("--replicates-output", bench_args.replicates, "Per-replicate CSV")
      ->capture_default_str();
  bench->add_flag("-q,--quiet", bench_args.quiet, "No progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_args, out, err);
    if (reduce->parsed()) return cmd_reduce(reduce_args, out, err);
    if (select->parsed()) return cmd_select(select_args, out, err);
    if (simulate->parsed()) return cmd_simulate(sim_args, out, err);
    if (evaluate->parsed()) return cmd_evaluate(eval_args, out, err);
    if (bench->parsed()) return cmd_benchmark(bench_args, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace gmmdr
