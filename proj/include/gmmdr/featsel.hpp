#pragma once

// Forward selection of GMMDR variables by BIC difference, and the outer
// fit -> directions -> select -> refit iteration.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gmmdr/dr.hpp"
#include "gmmdr/mixture.hpp"

namespace gmmdr {

enum class SelectionMode {
  bic,     ///< greedy forward search on BIC difference
  entropy  ///< prefix of directions minimizing the clustering entropy
};

struct SelectionConfig {
  int max_G = 9;
  /// Families searched at every step; empty = all families.
  std::vector<ModelName> models;
  /// Freezes the family and number of components used for every subset.
  std::optional<std::pair<ModelName, int>> fixed_model;
  FitConfig fit;
  SelectionMode mode = SelectionMode::bic;
  /// Cap on outer passes of gmmdr_pipeline.
  int max_passes = 10;
  DrOptions directions;

  void validate() const;
};

/// BIC of regressing a feature on q-1 orthogonal features, which reduces to
/// -n log(2 pi) - n log(sigma^2) - n - (q + 1) log(n) with sigma^2 the MLE
/// variance of the feature. q counts the candidate itself.
double bic_reg(std::span<const double> feature, int q);

struct BicDiff {
  double bic_diff = 0.0;
  double bic_clust = 0.0;       ///< best clustering BIC on S
  double bic_not_clust = 0.0;   ///< BIC_clust(S') + bic_reg(candidate)
  double bic_clust_prev = 0.0;  ///< BIC_clust(S'), 0 when S' is empty
  MixtureFit fit;               ///< winning clustering on S = [S', candidate]
};

/// Best clustering BIC on `data` over the configured families and G range
/// (or the fixed model).
MixtureFit best_clustering(const Eigen::MatrixXd& data, const SelectionConfig& cfg);

/// BIC difference for adding `candidate` to the already selected columns
/// `selected` (n x (q-1), possibly with zero columns).
BicDiff bic_diff(const Eigen::MatrixXd& selected, const Eigen::VectorXd& candidate,
                 const SelectionConfig& cfg);

/// Same, when BIC_clust of the selected set is already known.
BicDiff bic_diff(const Eigen::MatrixXd& selected, double bic_clust_selected,
                 const Eigen::VectorXd& candidate, const SelectionConfig& cfg);

struct CandidateEval {
  int candidate = 0;
  double bic_clust = 0.0;
  double bic_not_clust = 0.0;
  double bic_diff = 0.0;
  ModelName model = ModelName::E;
  int G = 1;
};

struct SelectionStep {
  int candidate = 0;  ///< winner of this step (0-based column)
  double bic_clust = 0.0;
  double bic_not_clust = 0.0;
  double bic_diff = 0.0;
  bool accepted = false;
  ModelName model = ModelName::E;
  int G = 1;
  std::vector<CandidateEval> evaluations;  ///< every candidate tried
};

enum class StopReason { negative_diff, all_included };

std::string_view to_string(StopReason reason);

struct SelectionTrace {
  std::vector<SelectionStep> steps;
  std::vector<int> selected;  ///< 0-based columns in order of inclusion
  StopReason stop_reason = StopReason::all_included;
  std::vector<std::string> warnings;
};

struct SelectionResult {
  SelectionTrace trace;
  /// Clustering on the selected columns (in inclusion order). Empty when
  /// nothing was selected.
  std::optional<MixtureFit> fit;
};

/// Forward-only search over the columns of Z. The first step always adds
/// the best candidate. Later steps add the candidate with the largest
/// positive BIC difference whose best clustering has at least two
/// components, and the search stops when there is none. `eigenvalues`,
/// when given, break ties in favour of the larger eigenvalue; remaining ties
/// go to the lower index.
SelectionResult greedy_select(const Eigen::MatrixXd& Z, const SelectionConfig& cfg,
                              std::span<const double> eigenvalues = {});

/// Keeps the leading k columns whose refit (fixed model, or EII at
/// `groups`) has the smallest clustering entropy.
SelectionResult entropy_select(const Eigen::MatrixXd& Z, int groups,
                               const SelectionConfig& cfg);

struct PassLog {
  int d = 0;  ///< candidate directions entering this pass
  DrBasis basis;
  SelectionTrace trace;
};

struct PipelineResult {
  MixtureFit initial_fit;  ///< best BIC mixture on the original variables
  MixtureFit fit;          ///< final mixture on the selected variables
  /// p x k map from the original variables to the variables `fit` lives on.
  Eigen::MatrixXd transform;
  /// Final directions expressed in the original variables.
  DrBasis basis;
  /// k x d: the same directions in the coordinates of `fit`, scaled so that
  /// X * transform * feature_directions == X * basis.directions.
  Eigen::MatrixXd feature_directions;
  std::vector<PassLog> passes;
  std::vector<std::string> warnings;
  bool converged = true;  ///< false when max_passes was reached

  /// Variables the final mixture was fitted on.
  Eigen::MatrixXd features(const Eigen::MatrixXd& data) const { return data * transform; }
};

/// Fit, estimate directions, select, refit on the selection, and repeat
/// until a pass drops nothing. `initial` skips the first model search.
PipelineResult gmmdr_pipeline(const Eigen::MatrixXd& data, const SelectionConfig& cfg,
                              const MixtureFit* initial = nullptr);

}  // namespace gmmdr
