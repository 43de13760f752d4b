#include "gmmdr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <unistd.h>

#include "gmmdr/error.hpp"
#include "gmmdr/eval.hpp"

namespace gmmdr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Splits CSV text into records of fields. Quoted fields may contain commas,
// doubled quotes and line breaks.
std::vector<std::vector<std::string>> parse_csv(const std::string& text, const fs::path& path) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  int line = 1;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // Blank lines are skipped.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  bool at_record_start = true;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    // '#' at the start of a record marks a comment line.
    if (at_record_start && !quoted && c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      ++line;
      continue;
    }
    at_record_start = false;
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty())
          throw IoError(path.string() + ": stray quote on line " + std::to_string(line));
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        at_record_start = true;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw IoError(path.string() + ": unterminated quoted field");
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_number(std::string_view s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  const char* first = t.data();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> parse_int(std::string_view s) {
  const std::string t = trim(s);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

json matrix_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw IoError("corrupt archive: matrix size does not match its data");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[k++].get<double>();
  return m;
}

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_finite(const json& j) {
  if (j.is_number_float() && !std::isfinite(j.get<double>()))
    throw IoError("cannot archive a non-finite value");
  if (j.is_structured())
    for (const auto& child : j) check_finite(child);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

std::vector<std::string> numbered(std::string_view prefix, int count) {
  std::vector<std::string> out;
  for (int j = 1; j <= count; ++j) out.push_back(std::string(prefix) + std::to_string(j));
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw IoError("number formatting failed");
  return std::string(buf, ptr);
}

void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("error writing " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot replace " + path.string());
  }
}

void write_table(const fs::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows, std::string_view comment) {
  std::string out;
  if (!comment.empty()) {
    std::string_view rest = comment;
    while (!rest.empty()) {
      const auto nl = rest.find('\n');
      out += "# ";
      out += rest.substr(0, nl);
      out += '\n';
      rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    }
  }
  auto append = [&](const std::vector<std::string>& fields) {
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j) out += ',';
      out += quote_if_needed(fields[j]);
    }
    out += '\n';
  };
  append(header);
  for (const auto& r : rows) append(r);
  write_atomic(path, out);
}

Dataset read_csv(const fs::path& path, const CsvOptions& opts) {
  auto records = parse_csv(read_file(path), path);
  if (records.empty()) throw IoError(path.string() + ": empty file");
  const std::size_t width = records.front().size();

  std::vector<std::string> names;
  std::size_t first_data = 0;
  if (opts.header) {
    for (const auto& h : records.front()) names.push_back(trim(h));
    first_data = 1;
  } else {
    names = numbered("V", static_cast<int>(width));
  }
  for (std::size_t r = 0; r < records.size(); ++r)
    if (records[r].size() != width)
      throw IoError(path.string() + ": row " + std::to_string(r + 1) + " has " +
                    std::to_string(records[r].size()) + " fields, expected " +
                    std::to_string(width));

  std::optional<std::size_t> label_col;
  if (!opts.label_column.empty()) {
    const auto it = std::find(names.begin(), names.end(), opts.label_column);
    if (it == names.end())
      throw InvalidArgument(path.string() + ": no column named " + opts.label_column);
    label_col = static_cast<std::size_t>(it - names.begin());
  }

  const std::size_t n = records.size() - first_data;
  const std::size_t p = width - (label_col ? 1 : 0);
  if (n == 0 || p == 0) throw IoError(path.string() + ": no numeric data");

  Dataset ds;
  ds.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<std::string> raw_labels;
  for (std::size_t j = 0; j < width; ++j)
    if (j != label_col) ds.column_names.push_back(names[j]);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[r + first_data];
    Eigen::Index c = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (label_col && j == *label_col) {
        raw_labels.push_back(trim(rec[j]));
        continue;
      }
      const auto v = parse_number(rec[j]);
      if (!v)
        throw IoError(path.string() + ": non-numeric value '" + rec[j] + "' at row " +
                      std::to_string(r + first_data + 1) + ", column " + std::to_string(j + 1));
      ds.data(static_cast<Eigen::Index>(r), c++) = *v;
    }
  }

  if (label_col) {
    std::vector<int> labels;
    bool numeric = true;
    for (const auto& s : raw_labels) {
      const auto v = parse_int(s);
      if (!v) {
        numeric = false;
        break;
      }
      labels.push_back(*v);
    }
    if (numeric) {
      std::set<int> levels(labels.begin(), labels.end());
      for (int v : levels) ds.label_levels.push_back(std::to_string(v));
    } else {
      std::map<std::string, int> code;
      for (const auto& s : raw_labels) code.emplace(s, 0);
      int next = 1;
      for (auto& [text, c] : code) {
        c = next++;
        ds.label_levels.push_back(text);
      }
      labels.clear();
      for (const auto& s : raw_labels) labels.push_back(code[s]);
    }
    ds.labels = std::move(labels);
  }

  if (opts.standardize) {
    const double nn = static_cast<double>(n);
    for (Eigen::Index j = 0; j < ds.data.cols(); ++j) {
      auto col = ds.data.col(j);
      const double mean = col.mean();
      col.array() -= mean;
      const double sd = std::sqrt(col.squaredNorm() / nn);
      if (!(sd > 0.0))
        throw InvalidArgument(path.string() + ": column '" + ds.column_names[j] +
                              "' is constant and cannot be standardized");
      col /= sd;
    }
  }
  return ds;
}

void write_csv(const fs::path& path, const Dataset& dataset, std::string_view label_name,
               std::string_view comment) {
  std::vector<std::string> header = dataset.column_names;
  if (header.size() != static_cast<std::size_t>(dataset.data.cols()))
    header = numbered("V", static_cast<int>(dataset.data.cols()));
  if (dataset.labels) {
    if (dataset.labels->size() != static_cast<std::size_t>(dataset.data.rows()))
      throw InvalidArgument("write_csv: label count differs from row count");
    header.emplace_back(label_name);
  }
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(dataset.data.rows()));
  for (Eigen::Index i = 0; i < dataset.data.rows(); ++i) {
    std::vector<std::string> r;
    for (Eigen::Index j = 0; j < dataset.data.cols(); ++j) r.push_back(format_double(dataset.data(i, j)));
    if (dataset.labels) r.push_back(std::to_string((*dataset.labels)[static_cast<std::size_t>(i)]));
    rows.push_back(std::move(r));
  }
  write_table(path, header, rows, comment);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string data_fingerprint(const Eigen::MatrixXd& data) {
  std::string bytes;
  const std::int64_t dims[2] = {data.rows(), data.cols()};
  bytes.append(reinterpret_cast<const char*>(dims), sizeof dims);
  bytes.append(reinterpret_cast<const char*>(data.data()),
               static_cast<std::size_t>(data.size()) * sizeof(double));
  return fnv1a_hex(bytes);
}

Provenance make_provenance(std::uint64_t seed, const json& config, const Eigen::MatrixXd& data) {
  Provenance p;
  p.seed = seed;
  p.config = config;
  p.config_hash = fnv1a_hex(config.dump());
  p.data_fingerprint = data_fingerprint(data);
  return p;
}

json to_json(const MixtureFit& fit) {
  json covs = json::array();
  for (const auto& s : fit.params.covariances) covs.push_back(matrix_json(s));
  return {{"model", to_string(fit.model)},
          {"G", fit.G},
          {"n", fit.n},
          {"p", fit.p()},
          {"loglik", fit.loglik},
          {"nparams", fit.nparams},
          {"bic", fit.bic},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"loglik_trace", fit.loglik_trace},
          {"weights", vector_json(fit.params.weights)},
          {"means", matrix_json(fit.params.means)},
          {"covariances", std::move(covs)},
          {"responsibilities", matrix_json(fit.responsibilities)}};
}

MixtureFit fit_from_json(const json& j) {
  MixtureFit fit;
  fit.model = parse_model(j.at("model").get<std::string>());
  fit.G = j.at("G").get<int>();
  fit.n = j.at("n").get<int>();
  fit.loglik = j.at("loglik").get<double>();
  fit.nparams = j.at("nparams").get<int>();
  fit.bic = j.at("bic").get<double>();
  fit.converged = j.at("converged").get<bool>();
  fit.iterations = j.at("iterations").get<int>();
  fit.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
  fit.params.weights = vector_from(j.at("weights"));
  fit.params.means = matrix_from(j.at("means"));
  for (const auto& s : j.at("covariances")) fit.params.covariances.push_back(matrix_from(s));
  fit.responsibilities = matrix_from(j.at("responsibilities"));
  const int p = j.at("p").get<int>();
  if (fit.params.G() != fit.G || fit.params.means.rows() != fit.G || fit.params.p() != p ||
      static_cast<int>(fit.params.covariances.size()) != fit.G)
    throw IoError("corrupt archive: inconsistent mixture dimensions");
  return fit;
}

json to_json(const DrBasis& basis) {
  return {{"d", basis.d},
          {"raw_vectors", matrix_json(basis.raw_vectors)},
          {"directions", matrix_json(basis.directions)},
          {"eigenvalues", vector_json(basis.eigenvalues)},
          {"mean_contrib", vector_json(basis.mean_contrib)},
          {"var_contrib", vector_json(basis.var_contrib)}};
}

DrBasis basis_from_json(const json& j) {
  DrBasis b;
  b.d = j.at("d").get<int>();
  b.raw_vectors = matrix_from(j.at("raw_vectors"));
  b.directions = matrix_from(j.at("directions"));
  b.eigenvalues = vector_from(j.at("eigenvalues"));
  b.mean_contrib = vector_from(j.at("mean_contrib"));
  b.var_contrib = vector_from(j.at("var_contrib"));
  if (b.raw_vectors.cols() != b.d || b.directions.cols() != b.d)
    throw IoError("corrupt archive: basis dimension mismatch");
  return b;
}

json to_json(const SelectionTrace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    json evals = json::array();
    for (const auto& e : s.evaluations)
      evals.push_back({{"candidate", e.candidate},
                       {"bic_clust", e.bic_clust},
                       {"bic_not_clust", e.bic_not_clust},
                       {"bic_diff", e.bic_diff},
                       {"model", to_string(e.model)},
                       {"G", e.G}});
    steps.push_back({{"candidate", s.candidate},
                     {"bic_clust", s.bic_clust},
                     {"bic_not_clust", s.bic_not_clust},
                     {"bic_diff", s.bic_diff},
                     {"accepted", s.accepted},
                     {"model", to_string(s.model)},
                     {"G", s.G},
                     {"evaluations", std::move(evals)}});
  }
  return {{"selected", trace.selected},
          {"stop_reason", to_string(trace.stop_reason)},
          {"warnings", trace.warnings},
          {"steps", std::move(steps)}};
}

SelectionTrace trace_from_json(const json& j) {
  SelectionTrace t;
  t.selected = j.at("selected").get<std::vector<int>>();
  const auto reason = j.at("stop_reason").get<std::string>();
  if (reason == to_string(StopReason::negative_diff))
    t.stop_reason = StopReason::negative_diff;
  else if (reason == to_string(StopReason::all_included))
    t.stop_reason = StopReason::all_included;
  else
    throw IoError("corrupt archive: unknown stop reason " + reason);
  t.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& s : j.at("steps")) {
    SelectionStep step;
    step.candidate = s.at("candidate").get<int>();
    step.bic_clust = s.at("bic_clust").get<double>();
    step.bic_not_clust = s.at("bic_not_clust").get<double>();
    step.bic_diff = s.at("bic_diff").get<double>();
    step.accepted = s.at("accepted").get<bool>();
    step.model = parse_model(s.at("model").get<std::string>());
    step.G = s.at("G").get<int>();
    for (const auto& e : s.at("evaluations"))
      step.evaluations.push_back({e.at("candidate").get<int>(), e.at("bic_clust").get<double>(),
                                  e.at("bic_not_clust").get<double>(),
                                  e.at("bic_diff").get<double>(),
                                  parse_model(e.at("model").get<std::string>()),
                                  e.at("G").get<int>()});
    t.steps.push_back(std::move(step));
  }
  return t;
}

json to_json(const FitConfig& cfg) {
  return {{"max_iter", cfg.max_iter},
          {"rel_tol", cfg.rel_tol},
          {"init", to_string(cfg.init)},
          {"restarts", cfg.restarts},
          {"seed", cfg.seed},
          {"variance_floor", cfg.variance_floor},
          {"threads", cfg.threads}};
}

json to_json(const SelectionConfig& cfg) {
  json models = json::array();
  for (ModelName m : cfg.models) models.push_back(to_string(m));
  json fixed = nullptr;
  if (cfg.fixed_model)
    fixed = {{"model", to_string(cfg.fixed_model->first)}, {"G", cfg.fixed_model->second}};
  return {{"max_G", cfg.max_G},
          {"models", std::move(models)},
          {"fixed_model", std::move(fixed)},
          {"mode", cfg.mode == SelectionMode::bic ? "bic" : "entropy"},
          {"max_passes", cfg.max_passes},
          {"rel_threshold", cfg.directions.rel_threshold},
          {"max_condition", cfg.directions.max_condition},
          {"fit", to_json(cfg.fit)}};
}

FitConfig fit_config_from_json(const json& j) {
  FitConfig cfg;
  cfg.max_iter = j.at("max_iter").get<int>();
  cfg.rel_tol = j.at("rel_tol").get<double>();
  cfg.init = parse_init(j.at("init").get<std::string>());
  cfg.restarts = j.at("restarts").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.variance_floor = j.at("variance_floor").get<double>();
  cfg.threads = j.at("threads").get<int>();
  return cfg;
}

SelectionConfig selection_config_from_json(const json& j) {
  SelectionConfig cfg;
  cfg.max_G = j.at("max_G").get<int>();
  for (const auto& m : j.at("models")) cfg.models.push_back(parse_model(m.get<std::string>()));
  if (!j.at("fixed_model").is_null())
    cfg.fixed_model = std::pair{parse_model(j.at("fixed_model").at("model").get<std::string>()),
                                j.at("fixed_model").at("G").get<int>()};
  const auto mode = j.at("mode").get<std::string>();
  if (mode != "bic" && mode != "entropy") throw InvalidArgument("unknown selection mode " + mode);
  cfg.mode = mode == "bic" ? SelectionMode::bic : SelectionMode::entropy;
  cfg.max_passes = j.at("max_passes").get<int>();
  cfg.directions.rel_threshold = j.at("rel_threshold").get<double>();
  cfg.directions.max_condition = j.at("max_condition").get<double>();
  cfg.fit = fit_config_from_json(j.at("fit"));
  return cfg;
}

void save_model(const ModelArchive& archive, const fs::path& path) {
  json j;
  j["schema_version"] = archive.schema_version;
  j["fit"] = to_json(archive.fit);
  if (archive.basis) j["basis"] = to_json(*archive.basis);
  if (archive.transform) j["transform"] = matrix_json(*archive.transform);
  if (!archive.selection.empty()) {
    json passes = json::array();
    for (const auto& t : archive.selection) passes.push_back(to_json(t));
    j["selection"] = std::move(passes);
  }
  j["provenance"] = {{"seed", archive.provenance.seed},
                     {"config", archive.provenance.config},
                     {"config_hash", archive.provenance.config_hash},
                     {"data_fingerprint", archive.provenance.data_fingerprint}};
  check_finite(j);
  write_atomic(path, j.dump(1) + "\n");
}

ModelArchive load_model(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    const json j = json::parse(text);
    ModelArchive a;
    a.schema_version = j.at("schema_version").get<int>();
    if (a.schema_version > kArchiveSchemaVersion)
      throw IoError(path.string() + ": archive schema version " +
                    std::to_string(a.schema_version) + " is newer than supported version " +
                    std::to_string(kArchiveSchemaVersion));
    if (a.schema_version < 1)
      throw IoError(path.string() + ": invalid schema version");
    a.fit = fit_from_json(j.at("fit"));
    if (j.contains("basis")) a.basis = basis_from_json(j.at("basis"));
    if (j.contains("transform")) a.transform = matrix_from(j.at("transform"));
    if (j.contains("selection"))
      for (const auto& t : j.at("selection")) a.selection.push_back(trace_from_json(t));
    const json& prov = j.at("provenance");
    a.provenance.seed = prov.at("seed").get<std::uint64_t>();
    a.provenance.config = prov.at("config");
    a.provenance.config_hash = prov.at("config_hash").get<std::string>();
    a.provenance.data_fingerprint = prov.at("data_fingerprint").get<std::string>();
    return a;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": corrupt archive (" + e.what() + ")");
  } catch (const InvalidArgument& e) {
    throw IoError(path.string() + ": corrupt archive (" + e.what() + ")");
  }
}

std::string_view to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::eigen_contrib: return "eigen_contrib";
    case PlotKind::coefficients: return "coefficients";
    case PlotKind::projection: return "projection";
    case PlotKind::density_grid: return "density_grid";
    case PlotKind::uncertainty: return "uncertainty";
  }
  return "?";
}

PlotKind parse_plot_kind(std::string_view name) {
  for (auto k : {PlotKind::eigen_contrib, PlotKind::coefficients, PlotKind::projection,
                 PlotKind::density_grid, PlotKind::uncertainty})
    if (to_string(k) == name) return k;
  throw InvalidArgument("unknown plot kind: " + std::string(name));
}

void export_plotdata(PlotKind kind, const PlotInputs& in, const fs::path& path,
                     std::string_view comment) {
  auto need = [&](bool ok, const char* what) {
    if (!ok)
      throw InvalidArgument(std::string(to_string(kind)) + " export needs " + what);
  };
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  const auto d2s = format_double;

  switch (kind) {
    case PlotKind::eigen_contrib: {
      need(in.basis != nullptr, "a basis");
      const DrBasis& b = *in.basis;
      need(b.mean_contrib.size() == b.d && b.var_contrib.size() == b.d &&
               b.eigenvalues.size() >= b.d,
           "eigenvalue contributions for every direction");
      header = {"direction", "eigenvalue", "mean_contrib", "var_contrib"};
      for (int j = 0; j < b.d; ++j)
        rows.push_back({std::to_string(j + 1), d2s(b.eigenvalues(j)), d2s(b.mean_contrib(j)),
                        d2s(b.var_contrib(j))});
      break;
    }
    case PlotKind::coefficients: {
      need(in.basis != nullptr, "a basis");
      const DrBasis& b = *in.basis;
      std::vector<std::string> names = in.variable_names;
      if (names.empty()) names = numbered("V", static_cast<int>(b.directions.rows()));
      need(names.size() == static_cast<std::size_t>(b.directions.rows()),
           "one variable name per basis row");
      header = {"variable"};
      for (const auto& s : numbered("Dir", b.d)) header.push_back(s);
      for (Eigen::Index i = 0; i < b.directions.rows(); ++i) {
        std::vector<std::string> r{names[static_cast<std::size_t>(i)]};
        for (int j = 0; j < b.d; ++j) r.push_back(d2s(b.directions(i, j)));
        rows.push_back(std::move(r));
      }
      break;
    }
    case PlotKind::projection: {
      need(in.projected != nullptr && in.classification != nullptr,
           "projected data and a classification");
      const auto& Z = *in.projected;
      const auto& c = *in.classification;
      need(c.labels.size() == static_cast<std::size_t>(Z.rows()),
           "one classification per projected row");
      need(!in.truth || in.truth->size() == c.labels.size(), "one true label per row");
      header = numbered("Dir", static_cast<int>(Z.cols()));
      header.push_back("cluster");
      header.push_back("uncertainty");
      if (in.truth) header.push_back("truth");
      for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        std::vector<std::string> r;
        for (Eigen::Index j = 0; j < Z.cols(); ++j) r.push_back(d2s(Z(i, j)));
        r.push_back(std::to_string(c.labels[static_cast<std::size_t>(i)]));
        r.push_back(d2s(c.uncertainty(i)));
        if (in.truth) r.push_back(std::to_string((*in.truth)[static_cast<std::size_t>(i)]));
        rows.push_back(std::move(r));
      }
      break;
    }
    case PlotKind::density_grid: {
      need(in.grid != nullptr, "a density grid");
      const DensityGrid& g = *in.grid;
      need(g.density.rows() == g.y.size() && g.density.cols() == g.x.size() &&
               g.label.rows() == g.y.size() && g.label.cols() == g.x.size(),
           "grid values matching its coordinates");
      header = {"x", "y", "density", "cluster"};
      for (Eigen::Index iy = 0; iy < g.y.size(); ++iy)
        for (Eigen::Index ix = 0; ix < g.x.size(); ++ix)
          rows.push_back({d2s(g.x(ix)), d2s(g.y(iy)), d2s(g.density(iy, ix)),
                          std::to_string(g.label(iy, ix))});
      break;
    }
    case PlotKind::uncertainty: {
      need(in.classification != nullptr, "a classification");
      const auto& c = *in.classification;
      need(!in.truth || in.truth->size() == c.labels.size(), "one true label per row");
      header = {"observation", "cluster", "uncertainty"};
      std::vector<bool> wrong;
      if (in.truth) {
        header.push_back("truth");
        header.push_back("misclassified");
        wrong = misclassified(*in.truth, c.labels);
      }
      for (std::size_t i = 0; i < c.labels.size(); ++i) {
        std::vector<std::string> r{std::to_string(i + 1), std::to_string(c.labels[i]),
                                   d2s(c.uncertainty(static_cast<Eigen::Index>(i)))};
        if (in.truth) {
          r.push_back(std::to_string((*in.truth)[i]));
          r.push_back(wrong[i] ? "1" : "0");
        }
        rows.push_back(std::move(r));
      }
      break;
    }
  }
  write_table(path, header, rows, comment);
}

}  // namespace gmmdr
