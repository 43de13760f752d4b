#pragma once

// CSV datasets, the .gmmdr.json model archive and plot-data exports.
//
// Archive layout (schema_version 1), all matrices stored as
// {"rows": r, "cols": c, "data": [row-major values]}:
//
//   schema_version  integer
//   fit             model, G, n, p, loglik, nparams, bic, converged,
//                   iterations, loglik_trace, weights, means,
//                   covariances (array of matrices), responsibilities
//   basis           optional: d, raw_vectors, directions, eigenvalues,
//                   mean_contrib, var_contrib
//   transform       optional: p x k map from input columns to fit columns
//   selection       optional: one trace per pass (selected, stop_reason,
//                   warnings, steps with per-candidate evaluations)
//   provenance      seed, config (object), config_hash, data_fingerprint
//
// Floats are written in shortest round-trip form, so load(save(x))
// reproduces every double exactly.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gmmdr/dr.hpp"
#include "gmmdr/featsel.hpp"
#include "gmmdr/mixture.hpp"

namespace gmmdr {

inline constexpr int kArchiveSchemaVersion = 1;

struct Dataset {
  Eigen::MatrixXd data;
  std::vector<std::string> column_names;
  /// Integer class codes when a label column was read. Numeric labels keep
  /// their value; other labels are coded 1..k in sorted order of the text.
  std::optional<std::vector<int>> labels;
  std::vector<std::string> label_levels;  ///< text of each code, sorted by code
};

struct CsvOptions {
  bool header = true;
  /// Column holding class labels; empty = none.
  std::string label_column;
  /// Per-column (x - mean) / sd with the divide-by-n sd.
  bool standardize = false;
};

/// Reads a numeric CSV (RFC 4180 quoting, '.' decimals); lines starting
/// with '#' are comments. Throws IoError for unreadable files, ragged rows
/// and non-numeric cells (with 1-based record and column), and
/// InvalidArgument for a constant column under standardize.
Dataset read_csv(const std::filesystem::path& path, const CsvOptions& opts = {});

/// Writes the columns (and a trailing label column named `label_name` when
/// labels are present) atomically.
void write_csv(const std::filesystem::path& path, const Dataset& dataset,
               std::string_view label_name = "class", std::string_view comment = {});

/// Generic table writer used by every CSV export. Each line of `comment`
/// becomes a leading "# " line, which read_csv skips. Atomic.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows,
                 std::string_view comment = {});

/// Shortest decimal that parses back to exactly `v`.
std::string format_double(double v);

/// Replaces `path` with `content` through a temporary file and rename.
void write_atomic(const std::filesystem::path& path, std::string_view content);

struct Provenance {
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::string config_hash;       ///< FNV-1a of the compact config text
  std::string data_fingerprint;  ///< FNV-1a of the dimensions and values
};

struct ModelArchive {
  int schema_version = kArchiveSchemaVersion;
  MixtureFit fit;
  std::optional<DrBasis> basis;
  std::optional<Eigen::MatrixXd> transform;
  std::vector<SelectionTrace> selection;
  Provenance provenance;
};

/// 16 hex digits of the 64-bit FNV-1a hash.
std::string fnv1a_hex(std::string_view bytes);
std::string data_fingerprint(const Eigen::MatrixXd& data);
Provenance make_provenance(std::uint64_t seed, const nlohmann::json& config,
                           const Eigen::MatrixXd& data);

nlohmann::json to_json(const MixtureFit& fit);
MixtureFit fit_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DrBasis& basis);
DrBasis basis_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SelectionTrace& trace);
SelectionTrace trace_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FitConfig& cfg);
nlohmann::json to_json(const SelectionConfig& cfg);
FitConfig fit_config_from_json(const nlohmann::json& j);
SelectionConfig selection_config_from_json(const nlohmann::json& j);

/// Throws IoError on non-finite values (not representable in JSON).
void save_model(const ModelArchive& archive, const std::filesystem::path& path);

/// Throws IoError for unreadable or corrupt files and for a schema version
/// newer than this build understands.
ModelArchive load_model(const std::filesystem::path& path);

enum class PlotKind { eigen_contrib, coefficients, projection, density_grid, uncertainty };

std::string_view to_string(PlotKind kind);
PlotKind parse_plot_kind(std::string_view name);

/// Inputs for export_plotdata; each kind reads only what it needs.
///
///   eigen_contrib  basis                  direction,eigenvalue,mean_contrib,var_contrib
///   coefficients   basis, variable_names  variable,Dir1..Dird
///   projection     projected, classification [, truth]
///                                         Dir1..Dirk,cluster,uncertainty[,truth]
///   density_grid   grid                   x,y,density,cluster
///   uncertainty    classification [, truth]
///                  observation,cluster,uncertainty[,truth,misclassified]
struct PlotInputs {
  const DrBasis* basis = nullptr;
  std::vector<std::string> variable_names;
  const Eigen::MatrixXd* projected = nullptr;
  const Classification* classification = nullptr;
  const std::vector<int>* truth = nullptr;
  const DensityGrid* grid = nullptr;
};

/// Writes one CSV. Throws InvalidArgument when the inputs do not fit the kind.
void export_plotdata(PlotKind kind, const PlotInputs& inputs, const std::filesystem::path& path,
                     std::string_view comment = {});

}  // namespace gmmdr
