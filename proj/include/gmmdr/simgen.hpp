#pragma once

// Seeded synthetic data: the Chang (1983) fifteen-variable example, the
// three-cluster VVV example with noise, and the three simulation models
// with optional noise and redundant variables.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gmmdr/mixture.hpp"
#include "gmmdr/rng.hpp"

namespace gmmdr {

enum class ScenarioBase { chang15, synthetic_vvv, model1_eee, model2_vev, model3_vvv };
enum class Augmentation { none, noise, noise_redundant };

std::string_view to_string(ScenarioBase base);
std::string_view to_string(Augmentation aug);
ScenarioBase parse_base(std::string_view name);
Augmentation parse_augmentation(std::string_view name);

struct ScenarioSpec {
  ScenarioBase base = ScenarioBase::model1_eee;
  /// Total sample size; labels are drawn from `priors`. Ignored when
  /// n_per_cluster > 0.
  int n = 300;
  /// Fixed number of observations per cluster (equal-size design).
  int n_per_cluster = 0;
  std::vector<double> priors;  ///< empty = equal
  Augmentation augmentation = Augmentation::none;
  /// Scheme {3k clustering | 3k redundant | 4k noise}; k > 1 only for model2.
  int highdim_k = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct LabeledDataset {
  Eigen::MatrixXd data;
  std::vector<int> labels;  ///< 1-based generating component
  std::vector<int> clustering_columns;
  std::vector<std::string> column_names;
  ScenarioSpec spec;
};

/// Generating parameters of the three-variable clustering block.
MixtureParams scenario_parameters(ScenarioBase base, const std::vector<double>& priors = {});

/// Correlations of the redundant variables with their source columns.
inline constexpr double kRedundantCorrelation[3] = {0.9, 0.7, 0.5};

/// Shift d_i = 0.95 - 0.05 i and covariance of Z for the Chang design.
Eigen::VectorXd chang_shift();
Eigen::MatrixXd chang_covariance();

LabeledDataset gen_chang(int n, std::uint64_t seed);
LabeledDataset gen_synthetic_vvv(int n_per_cluster, Augmentation augmentation,
                                 std::uint64_t seed);
LabeledDataset gen_model(const ScenarioSpec& spec);

/// Draws n rows from N(mean, cov) through the Cholesky factor of cov.
/// Throws InvalidArgument if cov is not SPD.
Eigen::MatrixXd sample_normal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int n,
                              Rng& rng);

}  // namespace gmmdr
