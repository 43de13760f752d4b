#pragma once

// Partition comparison and the principal-components comparator.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gmmdr/mixture.hpp"

namespace gmmdr {

/// Labels renumbered densely to 1..k in order of increasing original value.
struct Partition {
  std::vector<int> labels;
  int k = 0;

  static Partition from(std::span<const int> raw);
};

/// Hubert-Arabie adjusted Rand index from the contingency table.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Counts of (truth class i, predicted class j) over canonicalized labels.
Eigen::MatrixXi confusion_matrix(std::span<const int> truth, std::span<const int> predicted);

/// Smallest misclassification fraction over one-to-one matchings of
/// predicted to true classes, found by exhaustive search (at most 10 classes
/// on either side).
double error_rate(std::span<const int> truth, std::span<const int> predicted);

/// Flags the observations counted as errors by error_rate.
std::vector<bool> misclassified(std::span<const int> truth, std::span<const int> predicted);

struct PcaGmmResult {
  MixtureFit fit;                ///< best-BIC mixture on the retained scores
  int retained = 0;              ///< components with eigenvalue > 1
  Eigen::VectorXd eigenvalues;   ///< correlation-matrix eigenvalues, decreasing
  Eigen::MatrixXd loadings;      ///< p x p, columns in eigenvalue order
  Eigen::MatrixXd scores;        ///< n x retained
};

/// Correlation-matrix principal components of the standardized data.
/// Returns eigenvalues (decreasing), loadings and all scores.
struct PcaResult {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd loadings;
  Eigen::MatrixXd scores;
  Eigen::MatrixXd standardized;
};
PcaResult correlation_pca(const Eigen::MatrixXd& data);

/// Principal components retained by Kaiser's rule, then model_search on the
/// scores. At least one component is always kept.
PcaGmmResult pca_gmm(const Eigen::MatrixXd& data, GRange range,
                     std::span<const ModelName> models, const FitConfig& cfg);

}  // namespace gmmdr
