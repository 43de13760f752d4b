#pragma once

// Finite Gaussian mixtures under the eigenvalue-decomposition covariance
// families Sigma_g = lambda_g D_g A_g D_g^T, fitted by EM and scored by BIC.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gmmdr {

/// Covariance parametrization. The three letters give volume, shape and
/// orientation: E = equal across components, V = variable, I = identity.
/// E and V are the univariate families.
enum class ModelName { E, V, EII, VII, EEI, VEI, EEE, EEV, VEV, VVV };

std::string_view to_string(ModelName model);

/// Parses a model code such as "VEV" (case-sensitive). Throws InvalidArgument.
ModelName parse_model(std::string_view code);

/// True for models whose components share one covariance matrix.
bool equal_covariance(ModelName model);

bool is_univariate(ModelName model);

/// All families valid for dimension p: {E, V} when p == 1, else the eight
/// multivariate codes.
std::vector<ModelName> all_models(int p);

/// Maps a multivariate code onto the univariate family with the same
/// equal/variable volume behaviour (E for equal covariance, V otherwise).
ModelName univariate_counterpart(ModelName model);

enum class InitMethod {
  hierarchical,  ///< Ward agglomerative tree cut at G groups.
  kmeans,        ///< k-means++ seeded Lloyd partition.
  random         ///< Random soft responsibilities.
};

std::string_view to_string(InitMethod init);
InitMethod parse_init(std::string_view name);

struct FitConfig {
  int max_iter = 500;
  double rel_tol = 1e-5;
  InitMethod init = InitMethod::hierarchical;
  /// Total number of initializations. The first uses `init`; the rest use
  /// random responsibilities.
  int restarts = 1;
  std::uint64_t seed = 1;
  /// Relative variance floor, scaled by the average column variance.
  double variance_floor = 1e-8;
  /// Worker threads for model_search (1 = run inline).
  int threads = 1;

  void validate() const;
};

/// Weights, means and covariances of a G-component mixture in p dimensions.
struct MixtureParams {
  Eigen::VectorXd weights;                   // G
  Eigen::MatrixXd means;                     // G x p
  std::vector<Eigen::MatrixXd> covariances;  // G of p x p

  int G() const { return static_cast<int>(weights.size()); }
  int p() const { return static_cast<int>(means.cols()); }
};

struct MixtureFit {
  ModelName model = ModelName::VVV;
  int G = 0;
  int n = 0;
  MixtureParams params;
  double loglik = 0.0;
  int nparams = 0;
  double bic = 0.0;
  Eigen::MatrixXd responsibilities;  // n x G
  bool converged = false;
  int iterations = 0;
  /// Log-likelihood after every E-step of the retained run.
  std::vector<double> loglik_trace;

  int p() const { return params.p(); }
};

/// Fits a G-component mixture of the given family by EM.
///
/// The best log-likelihood over cfg.restarts initializations is returned.
/// Runs in which a weight drops below 1/(2n) or a covariance eigenvalue
/// falls below the variance floor are discarded; if every run is discarded
/// a DegenerateFit is thrown. Hitting max_iter is not an error (converged is
/// false). G == 1 is solved in closed form.
MixtureFit em_fit(const Eigen::MatrixXd& data, int G, ModelName model,
                  const FitConfig& cfg);

/// Like em_fit but starting from caller-provided responsibility matrices,
/// one EM run per start.
MixtureFit em_fit_from(const Eigen::MatrixXd& data, ModelName model,
                       std::span<const Eigen::MatrixXd> starts,
                       const FitConfig& cfg);

/// Number of free parameters: (G-1) + G*p + covariance parameters.
int count_params(ModelName model, int p, int G);

/// 2*loglik - nparams*log(n).
double bic(double loglik, int nparams, int n);

/// Maximizes the expected complete-data log-likelihood for fixed
/// responsibilities under the given family. `warm` seeds the inner
/// fixed-point iteration of VEI/VEV (ignored by the other families).
MixtureParams m_step(const Eigen::MatrixXd& data, const Eigen::MatrixXd& resp,
                     ModelName model, const MixtureParams* warm = nullptr);

/// Per-observation log mixture density; fills `resp` like log_likelihood.
Eigen::VectorXd log_densities(const Eigen::MatrixXd& data, const MixtureParams& params,
                              Eigen::MatrixXd* resp = nullptr);

/// Log-likelihood of the data; fills `resp` with posterior probabilities
/// when non-null. Throws SingularMatrix if a covariance is not SPD.
double log_likelihood(const Eigen::MatrixXd& data, const MixtureParams& params,
                      Eigen::MatrixXd* resp = nullptr);

/// Inclusive component-count interval.
struct GRange {
  int lo = 1;
  int hi = 9;
};

struct SearchEntry {
  ModelName model;
  int G;
  std::optional<MixtureFit> fit;  // empty when the fit failed
  std::string failure;
};

struct SearchResult {
  /// Successful fits sorted by BIC descending (ties: smaller G, then fewer
  /// parameters).
  std::vector<SearchEntry> ranked;
  std::vector<SearchEntry> failed;

  const MixtureFit& best() const { return *ranked.front().fit; }
};

/// Fits every (G, model) pair. Multivariate codes are mapped to E/V when the
/// data has a single column. Throws InvalidArgument on an empty model set or
/// range, and NumericError if every fit failed.
SearchResult model_search(const Eigen::MatrixXd& data, GRange range,
                          std::span<const ModelName> models,
                          const FitConfig& cfg);

struct Classification {
  std::vector<int> labels;  // 1-based component index
  Eigen::VectorXd uncertainty;
};

/// MAP labels and uncertainty 1 - max_g z_ig, ties to the lowest index.
Classification map_classify(const MixtureFit& fit, const Eigen::MatrixXd& data);

/// Same, directly from a responsibility matrix.
Classification map_classify(const Eigen::MatrixXd& responsibilities);

/// -sum_ig t_ig log t_ig with 0 log 0 = 0.
double entropy(const Eigen::MatrixXd& responsibilities);

/// Column means and MLE (divide by n) covariance.
Eigen::VectorXd column_means(const Eigen::MatrixXd& data);
Eigen::MatrixXd mle_covariance(const Eigen::MatrixXd& data);

}  // namespace gmmdr
